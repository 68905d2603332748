#include "dferr/experiments.hpp"

#include "dferr/error_quantity.hpp"
#include "dferr/estimation.hpp"
#include "dferr/image_structure.hpp"
#include "dferr/serialization.hpp"
#include "dferr/stats.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace dferr {

namespace {

using nlohmann::json;

// ------------------------------------------------------------ helpers

std::optional<Law> law_of(const ApproximationScheme& scheme) {
  if (const auto* g = dynamic_cast<const GraduationScheme*>(&scheme)) return g->law();
  if (const auto* p = dynamic_cast<const PerturbationScheme*>(&scheme)) return p->law();
  return std::nullopt;
}

/// Parses a battery expression; functions without finite bounds are
/// windowed to the bulk of the scheme's law.
TestFunction battery_function(const std::string& expr, const ApproximationScheme& scheme) {
  const TestFunction f = TestFunction::parse(expr, scheme.dimension());
  if (f.in_cb2()) return f;
  const auto law = law_of(scheme);
  double lo = 0.0, hi = 1.0, margin = 0.1;
  if (law) {
    if (law->kind() == Law::Kind::kNormal) {
      lo = law->param_a() - 8.0 * law->param_b();
      hi = law->param_a() + 8.0 * law->param_b();
      margin = law->param_b();
    } else {
      lo = law->lower();
      hi = law->upper();
      margin = 0.1 * (hi - lo);
    }
  }
  return windowed(f, lo, hi, margin);
}

struct Expectation {
  double value = 0.0;
  double std_error = 0.0;
};

using StructureIntegrand = std::function<double(const DirichletStructure&, const Vector&)>;

/// E_Y[f(Y)] under the scheme's reference structure: quadrature for a
/// one-dimensional law, Monte Carlo otherwise.
Expectation expect_under(const ApproximationScheme& scheme, const StructureIntegrand& f,
                         const ResolvedConfig& config, const std::string& stream) {
  const auto structure = scheme.reference();
  if (!structure) throw std::invalid_argument("scheme " + scheme.name() + " has no reference structure");
  const auto law = law_of(scheme);
  if (law && law->dimension() == 1) {
    Vector y(1);
    const double v = marginal_expectation(*law, [&](double x) {
      y[0] = x;
      return f(*structure, y);
    });
    return {v, 0.0};
  }
  EstimationOptions options;
  options.seed = config.seed;
  options.workers = config.workers;
  options.reference_samples = 1000000;
  const auto m = reference_expectation(
      scheme, 1,
      [&](const DirichletStructure& s, const Vector& y, std::span<double> out) { out[0] = f(s, y); },
      options, stream);
  return {m->mean[0], m->stderr_of(0)};
}

std::optional<double> operator_value(const OperatorValues& v, BiasKind kind) {
  switch (kind) {
    case BiasKind::kTheoretical: return v.theoretical;
    case BiasKind::kPractical: return v.practical;
    case BiasKind::kSymmetric: return v.symmetric;
    case BiasKind::kSingular: return v.singular;
  }
  return std::nullopt;
}

EstimationOptions options_for(const ResolvedConfig& c) {
  EstimationOptions o;
  o.samples = c.samples;
  o.seed = c.seed;
  o.workers = c.workers;
  o.reference_samples = 0;
  return o;
}

SamplingPlan plan_for(const ResolvedConfig& c, std::string stream) {
  SamplingPlan p;
  p.samples = c.samples;
  p.seed = c.seed;
  p.workers = c.workers;
  p.stream = std::move(stream);
  return p;
}

std::optional<double> z_of(double value, double se, double reference, double ref_se = 0.0) {
  const double s = std::sqrt(se * se + ref_se * ref_se);
  if (s == 0.0) return std::nullopt;
  return (value - reference) / s;
}

ReportRow estimate_row(const std::string& scheme, const std::string& kind, const std::string& phi,
                       const std::string& chi, int n, std::size_t samples, double value, double se,
                       std::optional<double> reference = std::nullopt,
                       std::optional<double> z = std::nullopt) {
  ReportRow r;
  r.scheme = scheme;
  r.kind = kind;
  r.phi = phi;
  r.chi = chi;
  r.n = n;
  r.samples = static_cast<long long>(samples);
  r.estimate = value;
  r.std_error = se;
  r.reference = reference;
  r.z_score = z;
  return r;
}

ReportRow estimate_row(const BiasEstimate& e) {
  return estimate_row(e.scheme, std::string(to_string(e.kind)), e.phi, e.chi, e.level, e.samples,
                      e.value, e.std_error, e.reference, e.z_score());
}

class Recorder {
 public:
  explicit Recorder(ExperimentResult& result, std::string scheme)
      : result_(result), scheme_(std::move(scheme)) {}

  void row(ReportRow r) { result_.rows.push_back(std::move(r)); }

  /// Records a criterion and its diagnostic row; `pass` is statistic <=
  /// threshold unless given.
  void criterion(const std::string& name, double statistic, double threshold,
                 std::optional<bool> pass = std::nullopt) {
    const bool ok = pass.value_or(statistic <= threshold);
    result_.criteria.push_back({name, statistic, threshold, ok});
    ReportRow r;
    r.scheme = scheme_;
    r.test_name = name;
    r.statistic = statistic;
    r.threshold = threshold;
    r.pass = ok;
    result_.rows.push_back(std::move(r));
  }

  /// |estimate / reference - 1| <= tolerance, falling back to the absolute
  /// error for a zero reference.
  void relative(const std::string& name, double estimate, double reference, double tolerance) {
    const double err = reference != 0.0 ? std::abs(estimate / reference - 1.0) : std::abs(estimate);
    criterion(name, err, tolerance);
  }

 private:
  ExperimentResult& result_;
  std::string scheme_;
};

std::string level_tag(int n) { return " n=" + std::to_string(n); }

template <class T>
const T& require_scheme(const ApproximationScheme& s, const char* experiment) {
  const auto* p = dynamic_cast<const T*>(&s);
  if (p == nullptr) {
    throw std::invalid_argument(std::string(experiment) + " does not support scheme " + s.name());
  }
  return *p;
}

json graduation_spec(const char* law_kind) {
  return {{"scheme", "graduation"}, {"law", {{"kind", law_kind}}}, {"d", 1}};
}

// ------------------------------------------------------------ experiments

ExperimentResult run_binary_bias(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());

  // Exact conditional moments on pseudo-random digit prefixes.
  double worst = 0.0;
  const std::uint64_t key = derive_stream(c.seed, "binary/prefixes");
  for (int n = 1; n <= 30; ++n) {
    CounterRng rng(key, static_cast<std::uint64_t>(n));
    std::vector<int> prefix(static_cast<std::size_t>(n));
    for (int& a : prefix) a = static_cast<int>(rng() >> 63);
    const DyadicMoments m = binary_conditional_moments(prefix);
    worst = std::max({worst, std::abs(m.normalized_bias - 1.0), std::abs(m.normalized_variance - 1.0)});
  }
  rec.criterion("closed-form b_n*2^(n+1)=1 and v_n*12*4^n=1 for n=1..30", worst, 0.0);

  for (int n : c.levels) {
    scheme->check_level(n);
    const auto b = scheme->reference_bias(n);
    const auto v = scheme->reference_variance(n);
    if (!b || !v) throw std::invalid_argument("binary-bias needs a scheme with closed-form bias and variance");
    const MeanEstimate m = monte_carlo_mean(plan_for(c, "binary/" + std::to_string(n)), 2,
                                            [&](CounterRng& rng, std::span<double> out) {
                                              const SamplePair p = scheme->sample(n, rng);
                                              const double e = p.exact[0] - p.approx[0];
                                              out[0] = e;
                                              out[1] = (e - *b) * (e - *b);
                                            });
    const auto zb = z_of(m.mean[0], m.stderr_of(0), *b);
    const auto zv = z_of(m.mean[1], m.stderr_of(1), *v);
    rec.row(estimate_row(scheme->name(), "error-mean", "x0", "1", n, c.samples, m.mean[0],
                         m.stderr_of(0), *b, zb));
    rec.row(estimate_row(scheme->name(), "error-variance", "x0", "1", n, c.samples, m.mean[1],
                         m.stderr_of(1), *v, zv));
    rec.criterion("|z| of mean error" + level_tag(n), std::abs(zb.value_or(0.0)), c.tolerances.at("z"));
    rec.criterion("|z| of error variance" + level_tag(n), std::abs(zv.value_or(0.0)), c.tolerances.at("z"));
  }
  return result;
}

ExperimentResult run_polya_variance(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  const auto& polya = require_scheme<PolyaScheme>(*scheme, "polya-variance");
  Recorder rec(result, scheme->name());

  double worst = 0.0;
  for (int n = 0; n <= 12; ++n) {
    worst = std::max(worst, std::abs(PolyaScheme::expected_variance(n) * 6.0 * (n + 2) - 1.0));
  }
  rec.criterion("exact E[v_n]*6(n+2)=1 for n=0..12", worst, c.tolerances.at("exact"));

  for (int n : c.levels) {
    polya.check_level(n);
    const MeanEstimate m = monte_carlo_mean(
        plan_for(c, "polya/" + std::to_string(n)), 2, [&](CounterRng& rng, std::span<double> out) {
          const SamplePair p = polya.sample(n, rng);
          const double d = p.exact[0] - p.approx[0];
          out[0] = d * d;
          const int whites = static_cast<int>(std::lround(p.approx[0] * (n + 2)));
          out[1] = PolyaScheme::conditional_variance(whites, n);
        });
    const double ref = *polya.reference_variance(n);
    rec.row(estimate_row(scheme->name(), "mean-square-error", "x0", "1", n, c.samples, m.mean[0],
                         m.stderr_of(0), ref, z_of(m.mean[0], m.stderr_of(0), ref)));
    rec.row(estimate_row(scheme->name(), "conditional-variance", "x0", "1", n, c.samples, m.mean[1],
                         m.stderr_of(1), ref, z_of(m.mean[1], m.stderr_of(1), ref)));
    rec.criterion("|6(n+2)E[(Y-X_n)^2]-1|" + level_tag(n), std::abs(m.mean[0] / ref - 1.0),
                  c.tolerances.at("relative"));
  }
  return result;
}

ExperimentResult run_graduation_variance(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());
  const int d = scheme->dimension();

  for (const std::string& expr : c.battery) {
    const TestFunction phi = battery_function(expr, *scheme);
    const Expectation ref = expect_under(
        *scheme, [&](const DirichletStructure& s, const Vector& y) { return square_field(s, phi, y); },
        c, "reference/gamma");
    for (int n : c.levels) {
      scheme->check_level(n);
      const double alpha = scheme->alpha(n);
      const MeanEstimate m = monte_carlo_mean(
          plan_for(c, "variance/" + std::to_string(n)), 1, [&](CounterRng& rng, std::span<double> out) {
            const SamplePair p = scheme->sample(n, rng);
            const double df = phi(p.approx) - phi(p.exact);
            out[0] = alpha * df * df;
          });
      rec.row(estimate_row(scheme->name(), "variance", phi.name(), "1", n, c.samples, m.mean[0],
                           m.stderr_of(0), ref.value,
                           z_of(m.mean[0], m.stderr_of(0), ref.value, ref.std_error)));
      rec.relative("relative error of alpha_n E[dphi^2] for " + phi.name() + level_tag(n), m.mean[0],
                   ref.value, c.tolerances.at("relative"));
    }
  }

  // Functional calculus: F(u, v) = u v applied to (sin, cos).
  const TestFunction big_f = TestFunction::parse("x0*x1", 2);
  const std::vector<TestFunction> inner = {TestFunction::parse("sin(x0)", d),
                                           TestFunction::parse("cos(x0)", d)};
  const TestFunction composite = big_f.compose(inner).named("sin(x0)*cos(x0)");
  const Expectation ref = expect_under(
      *scheme,
      [&](const DirichletStructure& s, const Vector& y) {
        Matrix gamma(2, 2);
        Vector value(2);
        for (int i = 0; i < 2; ++i) {
          value[i] = inner[i](y);
          for (int j = 0; j <= i; ++j) {
            gamma(i, j) = square_field(s, inner[i], inner[j], y);
            gamma(j, i) = gamma(i, j);
          }
        }
        const ErrorQuantity e(value, Vector::Zero(2), gamma);
        return propagate_strong(e, big_f).gamma()(0, 0);
      },
      c, "reference/calculus");
  for (int n : c.levels) {
    const double alpha = scheme->alpha(n);
    const MeanEstimate m = monte_carlo_mean(
        plan_for(c, "calculus/" + std::to_string(n)), 1, [&](CounterRng& rng, std::span<double> out) {
          const SamplePair p = scheme->sample(n, rng);
          const double df = composite(p.approx) - composite(p.exact);
          out[0] = alpha * df * df;
        });
    rec.row(estimate_row(scheme->name(), "variance", composite.name(), "1", n, c.samples, m.mean[0],
                         m.stderr_of(0), ref.value,
                         z_of(m.mean[0], m.stderr_of(0), ref.value, ref.std_error)));
    rec.relative("error calculus F(u,v)=uv on (sin,cos)" + level_tag(n), m.mean[0], ref.value,
                 c.tolerances.at("calculus_relative"));
  }
  return result;
}

ExperimentResult run_graduation_bias(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());
  const TestFunction chi = TestFunction::constant(1.0, scheme->dimension()).named("1");
  EstimationOptions options = options_for(c);
  options.sampling = Sampling::kStratified;
  if (options.samples % 2 != 0) ++options.samples;

  for (const std::string& expr : c.battery) {
    const TestFunction phi = battery_function(expr, *scheme);
    for (int n : c.levels) {
      auto estimates = estimate_all_kinds(*scheme, phi, chi, n, options);
      for (BiasEstimate& e : estimates) {
        const BiasKind kind = e.kind;
        const auto structure = scheme->reference();
        if (structure && (structure->drift || kind == BiasKind::kTheoretical)) {
          const Expectation ref = expect_under(
              *scheme,
              [&](const DirichletStructure& s, const Vector& y) {
                return *operator_value(scheme_operators(s, phi, y), kind) * chi(y);
              },
              c, "reference/" + std::string(to_string(kind)));
          e.reference = ref.value;
          e.reference_std_error = ref.std_error;
        }
        rec.row(estimate_row(e));
        if (kind == BiasKind::kTheoretical && e.reference) {
          rec.relative("relative error of theoretical bias for " + phi.name() + level_tag(n), e.value,
                       *e.reference, c.tolerances.at("relative"));
        }
      }
    }
  }
  return result;
}

ExperimentResult run_graduation_afp(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  const auto& grad = require_scheme<GraduationScheme>(*scheme, "graduation-afp");
  Recorder rec(result, scheme->name());
  const double level = c.tolerances.at("level");
  const int bins = static_cast<int>(c.tolerances.at("bins"));

  for (int n : c.levels) {
    const GraduationResiduals res = graduation_residuals(grad, n, c.samples, c.seed);
    for (int k = 0; k < grad.dimension(); ++k) {
      std::vector<double> u(static_cast<std::size_t>(res.u.rows()));
      std::vector<double> y(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = res.u(static_cast<int>(i), k);
        y[i] = res.y(static_cast<int>(i), k);
      }
      const std::string coord = "x" + std::to_string(k);
      const Chi2Result chi2 = independence_chi2(u, y, bins, bins);
      const KsResult ks = ks_uniform(EmpiricalDistribution(std::move(u)));
      rec.criterion("ks-uniform of 1/2+n(Y_n-Y) " + coord + level_tag(n), ks.statistic,
                    kolmogorov_critical(level, static_cast<double>(c.samples)),
                    ks.statistic < kolmogorov_critical(level, static_cast<double>(c.samples)));
      const double crit = chi2.dof > 0 ? chi2_critical(level, chi2.dof) : 0.0;
      rec.criterion("chi2-independence of 1/2+n(Y_n-Y) and Y " + coord + " dof=" +
                        std::to_string(chi2.dof) + level_tag(n),
                    chi2.statistic, crit, chi2.dof == 0 || chi2.statistic < crit);
    }
    // A discontinuous psi: the indicator of [0, 1/4] in the first coordinate.
    const PointFunction psi = [](std::span<const double> u) { return u[0] <= 0.25 ? 1.0 : 0.0; };
    const PsiCompositionResult pc = psi_composition_test(grad, psi, n, c.samples, c.seed);
    rec.row(estimate_row(scheme->name(), "psi-mean", "1{u0<=1/4}", "1", n, c.samples, pc.mean_psi,
                         std::sqrt(0.25 * 0.75 / static_cast<double>(c.samples)), 0.25,
                         z_of(pc.mean_psi, std::sqrt(0.25 * 0.75 / static_cast<double>(c.samples)), 0.25)));
    rec.criterion("ks two-sample psi(U) vs psi(V), psi=1{u0<=1/4}" + level_tag(n), pc.ks.statistic,
                  pc.ks_critical, pc.ks.statistic < pc.ks_critical);
  }
  return result;
}

ExperimentResult run_perturbation_abar(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());
  const TestFunction chi = TestFunction::constant(1.0, scheme->dimension()).named("1");
  const EstimationOptions options = options_for(c);
  for (const std::string& expr : c.battery) {
    const TestFunction phi = battery_function(expr, *scheme);
    const Expectation ref = expect_under(
        *scheme,
        [&](const DirichletStructure& s, const Vector& y) { return scheme_operators(s, phi, y).theoretical; },
        c, "reference/theoretical");
    for (int n : c.levels) {
      BiasEstimate e = estimate_bias(BiasKind::kTheoretical, *scheme, phi, chi, n, options);
      e.reference = ref.value;
      e.reference_std_error = ref.std_error;
      rec.row(estimate_row(e));
      rec.relative("relative error of theoretical bias for " + phi.name() + level_tag(n), e.value,
                   ref.value, c.tolerances.at("relative"));
    }
  }
  return result;
}

ExperimentResult run_image_structure(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());
  const auto in = scheme->reference();
  if (!in || !in->drift) throw std::invalid_argument("image-structure needs a scheme with a symmetric reference structure");
  const int p = scheme->dimension();
  std::vector<std::string> map_exprs = {"x0*x0"};
  if (c.scheme.contains("map")) map_exprs = c.scheme.at("map").get<std::vector<std::string>>();
  std::vector<TestFunction> phi;
  for (const auto& e : map_exprs) phi.push_back(TestFunction::parse(e, p));
  const int q = static_cast<int>(phi.size());

  ImageOptions io;
  io.bins = static_cast<int>(c.tolerances.at("bins"));
  io.samples = c.samples;
  io.seed = c.seed;
  io.workers = c.workers;
  const ImageStructure image = image_structure(*in, phi, io);
  const Generator a_in = symmetric_generator(*in);
  const double z = c.tolerances.at("z");

  for (const std::string& expr : c.battery) {
    const TestFunction u = TestFunction::parse(expr, q);
    const TestFunction u_phi = u.compose(phi);
    const MeanEstimate out = monte_carlo_mean(
        plan_for(c, "image/eval"), 2, [&](CounterRng& rng, std::span<double> v) {
          const Vector x = in->measure(rng);
          Vector y(q);
          for (int i = 0; i < q; ++i) y[i] = phi[i](x);
          v[0] = image.square_field(u, y).value_or(std::numeric_limits<double>::quiet_NaN());
          v[1] = image.generator(u, y).value_or(std::numeric_limits<double>::quiet_NaN());
        });
    const MeanEstimate direct = monte_carlo_mean(
        plan_for(c, "image/direct"), 2, [&](CounterRng& rng, std::span<double> v) {
          const Vector x = in->measure(rng);
          v[0] = square_field(*in, u_phi, x);
          v[1] = a_in(u_phi.jet(x), x);
        });
    const char* labels[2] = {"square-field", "generator"};
    for (int k = 0; k < 2; ++k) {
      const auto zk = z_of(out.mean[k], out.stderr_of(k), direct.mean[k], direct.stderr_of(k));
      rec.row(estimate_row(scheme->name(), std::string("image-") + labels[k], u.name(), "1", 0,
                           c.samples, out.mean[k], out.stderr_of(k), direct.mean[k], zk));
      rec.criterion(std::string("|z| image ") + labels[k] + " vs direct for u=" + u.name(),
                    std::abs(zk.value_or(0.0)), z);
    }
  }
  return result;
}

ExperimentResult run_locality(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());
  const EstimationOptions options = options_for(c);
  for (const std::string& expr : c.battery) {
    const TestFunction phi = battery_function(expr, *scheme);
    const LocalityResult loc = locality_test(*scheme, phi, c.levels, options);
    for (std::size_t i = 0; i < loc.levels.size(); ++i) {
      rec.row(estimate_row(scheme->name(), "alpha*E[dphi^4]", phi.name(), "1", loc.levels[i],
                           c.samples, loc.values[i], loc.std_errors[i]));
    }
    rec.criterion("locality accepted (slope <= -1, decreasing) for " + phi.name(), loc.slope, -1.0,
                  loc.accepted);
    const double expected = c.tolerances.at("expected_slope");
    rec.criterion("|slope - (" + format_double(expected) + ")| for " + phi.name(),
                  std::isnan(loc.slope) ? 0.0 : std::abs(loc.slope - expected),
                  c.tolerances.at("slope_tolerance"));
  }
  return result;
}

ExperimentResult run_operator_relations(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());
  const int d = scheme->dimension();
  std::vector<TestFunction> fs;
  for (const auto& e : c.battery) fs.push_back(battery_function(e, *scheme));
  std::vector<TestFunction> chis = {TestFunction::constant(1.0, d).named("1")};
  chis.insert(chis.end(), fs.begin(), fs.end());
  const double z = c.tolerances.at("z");

  for (int n : c.levels) {
    for (const TestFunction& phi : fs) {
      for (const TestFunction& chi : chis) {
        EstimationOptions crn = options_for(c);
        const auto common = estimate_all_kinds(*scheme, phi, chi, n, crn);
        for (const auto& e : common) {
          ReportRow r = estimate_row(e);
          r.kind += "/crn";
          rec.row(std::move(r));
        }
        const RelationResiduals rc = check_relations(common);
        const std::string tag = " phi=" + phi.name() + " chi=" + chi.name() + level_tag(n);
        rec.criterion("common-random-numbers residuals exactly 0" + tag,
                      std::max(std::abs(rc.symmetric), std::abs(rc.singular)), 0.0);

        EstimationOptions ind = options_for(c);
        ind.pairing = Pairing::kIndependentStreams;
        const auto separate = estimate_all_kinds(*scheme, phi, chi, n, ind);
        for (const auto& e : separate) {
          ReportRow r = estimate_row(e);
          r.kind += "/independent";
          rec.row(std::move(r));
        }
        const RelationResiduals ri = check_relations(separate);
        rec.criterion("independent-streams symmetric residual |z|" + tag,
                      std::abs(ri.symmetric) / ri.symmetric_std_error, z);
        rec.criterion("independent-streams singular residual |z|" + tag,
                      std::abs(ri.singular) / ri.singular_std_error, z);
      }
    }
    if (fs.size() >= 2) {
      EstimationOptions o = options_for(c);
      o.reference_samples = 200000;
      const FirstOrderResult fo =
          first_order_test(BiasKind::kSingular, *scheme, fs[0], fs[1], chis[0], n, o);
      rec.row(estimate_row(scheme->name(), "first-order/singular", fs[0].name(), fs[1].name(), n,
                           c.samples, fo.value, fo.std_error, fo.reference,
                           fo.reference ? z_of(fo.value, fo.std_error, *fo.reference,
                                               fo.reference_std_error.value_or(0.0))
                                        : std::nullopt));
    }
  }
  return result;
}

ExperimentResult run_variance_forms(const ResolvedConfig& c) {
  ExperimentResult result;
  const SchemePtr scheme = scheme_from_json(c.scheme);
  Recorder rec(result, scheme->name());
  if (c.battery.size() != 3) throw std::invalid_argument("variance-forms needs a battery of three functions (phi, chi, psi)");
  const TestFunction phi = battery_function(c.battery[0], *scheme);
  const TestFunction chi = battery_function(c.battery[1], *scheme);
  const TestFunction psi = battery_function(c.battery[2], *scheme);
  const Expectation ref = expect_under(
      *scheme,
      [&](const DirichletStructure& s, const Vector& y) { return square_field(s, phi, chi, y) * psi(y); },
      c, "reference/gamma-psi");
  EstimationOptions o = options_for(c);
  o.reference_samples = 200000;
  const double z = c.tolerances.at("z");
  const double rel = c.tolerances.at("relative");
  for (int n : c.levels) {
    const VarianceForms vf = variance_forms(*scheme, phi, chi, psi, n, o);
    const std::string label = phi.name() + "," + chi.name() + ";psi=" + psi.name();
    rec.row(estimate_row(scheme->name(), "variance/theoretical", phi.name(), chi.name(), n, c.samples,
                         vf.theoretical, vf.theoretical_std_error, ref.value,
                         z_of(vf.theoretical, vf.theoretical_std_error, ref.value, ref.std_error)));
    rec.row(estimate_row(scheme->name(), "variance/practical", phi.name(), chi.name(), n, c.samples,
                         vf.practical, vf.practical_std_error, ref.value,
                         z_of(vf.practical, vf.practical_std_error, ref.value, ref.std_error)));
    if (vf.operator_theoretical) {
      rec.row(estimate_row(scheme->name(), "variance/operator-theoretical", phi.name(), chi.name(), n,
                           o.reference_samples, *vf.operator_theoretical,
                           vf.operator_std_error.value_or(0.0), ref.value));
      rec.row(estimate_row(scheme->name(), "variance/operator-practical", phi.name(), chi.name(), n,
                           o.reference_samples, *vf.operator_practical,
                           vf.operator_std_error.value_or(0.0), ref.value));
    }
    rec.criterion("|theoretical - practical| / combined stderr for " + label + level_tag(n),
                  std::abs(vf.difference) / vf.combined_std_error(), z);
    rec.relative("theoretical variance vs E[Gamma[phi,chi] psi] for " + label + level_tag(n),
                 vf.theoretical, ref.value, rel);
    rec.relative("practical variance vs E[Gamma[phi,chi] psi] for " + label + level_tag(n),
                 vf.practical, ref.value, rel);
  }
  return result;
}

ExperimentRegistry make_builtin() {
  ExperimentRegistry r;
  auto cfg = [](json scheme, std::vector<std::string> battery, std::vector<int> levels,
                std::size_t samples, std::map<std::string, double> tolerances) {
    ResolvedConfig c;
    c.scheme = std::move(scheme);
    c.battery = std::move(battery);
    c.levels = std::move(levels);
    c.samples = samples;
    c.tolerances = std::move(tolerances);
    return c;
  };
  r.add({"binary-bias", "binary digits: exact conditional bias/variance and Monte Carlo error mean",
         cfg({{"scheme", "binary-digit"}}, {}, {10}, 1000000, {{"z", 3.0}}), run_binary_bias});
  r.add({"polya-variance", "Polya urn: exact E[v_n] = 1/(6(n+2)) and simulated E[(X_N - X_n)^2]",
         cfg({{"scheme", "polya"}, {"horizon", 100000}}, {}, {50}, 100000,
             {{"relative", 0.03}, {"exact", 1e-12}}),
         run_polya_variance});
  r.add({"graduation-variance",
         "graduation: n^2 E[(phi(Y_n) - phi(Y))^2] -> E[Gamma[phi]] and the error calculus for F(sin, cos)",
         cfg(graduation_spec("uniform"), {"x0*x0"}, {64}, 1000000,
             {{"relative", 0.02}, {"calculus_relative", 0.03}}),
         run_graduation_variance});
  r.add({"graduation-bias", "graduation: the four bias operators against the reference structure",
         cfg(graduation_spec("normal"), {"cos(x0)"}, {64}, 10000000, {{"relative", 0.05}}),
         run_graduation_bias});
  r.add({"graduation-afp",
         "graduation: n(Y_n - Y) uniform and independent of Y (KS, chi-square, indicator composition)",
         cfg(graduation_spec("normal"), {}, {100}, 100000, {{"level", 0.01}, {"bins", 20}}),
         run_graduation_afp});
  r.add({"perturbation-abar", "Y + eps Z + sqrt(eps) T G: theoretical bias against the reference operator",
         cfg({{"scheme", "perturbation"},
              {"law", {{"kind", "normal"}}},
              {"z", {"x0"}},
              {"t", {{"1"}}},
              {"g", {{"kind", "normal"}}}},
             {"cos(x0)"}, {10}, 10000000, {{"relative", 0.02}}),
         run_perturbation_abar});
  r.add({"image-structure", "image of a structure by a map: averaged operators against direct Monte Carlo",
         cfg({{"scheme", "graduation"}, {"law", {{"kind", "uniform"}}}, {"map", {"x0*x0"}}},
             {"x0", "sin(x0)", "cos(x0)"}, {1}, 200000, {{"z", 3.0}, {"bins", 64}}),
         run_image_structure});
  r.add({"locality", "locality: log-log slope of alpha_n E[(phi(Y_n) - phi(Y))^4]",
         cfg(graduation_spec("uniform"), {"x0"}, {8, 16, 32, 64, 128}, 100000,
             {{"expected_slope", -2.0}, {"slope_tolerance", 0.3}}),
         run_locality});
  r.add({"operator-relations",
         "bias operators: symmetric = (theoretical + practical)/2, singular = (theoretical - practical)/2",
         cfg(graduation_spec("normal"), {"cos(x0)", "sin(x0)"}, {32}, 100000, {{"z", 3.0}}),
         run_operator_relations});
  r.add({"variance-forms", "theoretical and practical variances against E[Gamma[phi, chi] psi]",
         cfg(graduation_spec("uniform"), {"sin(x0)", "sin(x0)", "cos(x0)"}, {64}, 1000000,
             {{"z", 3.0}, {"relative", 0.03}}),
         run_variance_forms});
  return r;
}

}  // namespace

// ------------------------------------------------------------ config

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {"experiment", "scheme",     "battery", "levels", "samples",
                                                 "seed",       "out",        "tolerances", "workers"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config field \"" + key + "\"");
    }
  }
  ExperimentConfig c;
  try {
    if (!j.contains("experiment") || !j.at("experiment").is_string()) {
      throw ConfigError("config field \"experiment\" (string) is required");
    }
    c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("scheme")) {
      if (!j.at("scheme").is_object()) throw ConfigError("\"scheme\" must be an object");
      c.scheme = j.at("scheme");
    }
    if (j.contains("battery")) c.battery = j.at("battery").get<std::vector<std::string>>();
    if (j.contains("levels")) {
      const json& l = j.at("levels");
      if (l.is_number_integer()) {
        c.levels = {l.get<int>()};
      } else {
        c.levels = l.get<std::vector<int>>();
        if (c.levels.empty()) throw ConfigError("\"levels\" must not be empty");
      }
    }
    if (j.contains("samples")) {
      if (!j.at("samples").is_number_unsigned()) throw ConfigError("\"samples\" must be a non-negative integer");
      c.samples = j.at("samples").get<std::size_t>();
    }
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("\"seed\" must be an unsigned 64-bit integer");
      c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("workers")) {
      if (!j.at("workers").is_number_unsigned()) throw ConfigError("\"workers\" must be a positive integer");
      c.workers = j.at("workers").get<unsigned>();
    }
    if (j.contains("tolerances")) {
      for (const auto& [key, value] : j.at("tolerances").items()) {
        if (!value.is_number()) throw ConfigError("tolerance \"" + key + "\" must be a number");
        c.tolerances[key] = value.get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

// ------------------------------------------------------------ results

bool ExperimentResult::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionOutcome& c) { return c.pass; });
}

json ExperimentResult::summary() const {
  json crit = json::array();
  for (const auto& c : criteria) {
    crit.push_back({{"name", c.name}, {"statistic", c.statistic}, {"threshold", c.threshold}, {"pass", c.pass}});
  }
  return {{"experiment", experiment}, {"seed", seed},   {"wall_time", wall_time},
          {"passed", passed()},       {"criteria", crit}};
}

// ------------------------------------------------------------ registry

void ExperimentRegistry::add(Experiment experiment) {
  if (find(experiment.id) != nullptr) throw std::invalid_argument("duplicate experiment id " + experiment.id);
  experiments_.push_back(std::move(experiment));
}

const Experiment* ExperimentRegistry::find(const std::string& id) const {
  for (const auto& e : experiments_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::vector<std::string> ExperimentRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& e : experiments_) out.push_back(e.id);
  return out;
}

std::string ExperimentRegistry::list_text() const {
  std::size_t width = 2;
  for (const auto& e : experiments_) width = std::max(width, e.id.size());
  std::ostringstream os;
  for (const auto& e : experiments_) {
    os << e.id << std::string(width - e.id.size() + 2, ' ') << e.description << '\n';
  }
  return os.str();
}

json ExperimentRegistry::list_json() const {
  json out = json::array();
  for (const auto& e : experiments_) out.push_back({{"id", e.id}, {"description", e.description}});
  return out;
}

const ExperimentRegistry& builtin_experiments() {
  static const ExperimentRegistry registry = make_builtin();
  return registry;
}

ExperimentResult run_experiment(const ExperimentRegistry& registry, const ExperimentConfig& config) {
  const Experiment* exp = registry.find(config.experiment);
  if (exp == nullptr) {
    std::string ids;
    for (const auto& id : registry.ids()) ids += (ids.empty() ? "" : ", ") + id;
    throw ConfigError("unknown experiment \"" + config.experiment + "\"; registered experiments: " +
                      (ids.empty() ? "(none)" : ids));
  }
  ResolvedConfig c = exp->defaults;
  if (!config.scheme.is_null()) c.scheme = config.scheme;
  if (!config.battery.empty()) c.battery = config.battery;
  if (!config.levels.empty()) c.levels = config.levels;
  if (config.samples) c.samples = *config.samples;
  c.seed = config.seed;
  c.workers = config.workers;
  for (const auto& [key, value] : config.tolerances) {
    if (c.tolerances.find(key) == c.tolerances.end()) {
      std::string keys;
      for (const auto& [k, v] : exp->defaults.tolerances) keys += (keys.empty() ? "" : ", ") + k;
      throw ConfigError("experiment " + exp->id + " has no tolerance \"" + key + "\" (accepted: " + keys + ")");
    }
    c.tolerances[key] = value;
  }
  if (c.levels.empty()) throw ConfigError("levels must not be empty");
  if (c.samples < kMinSamples) {
    throw ConfigError("samples must be at least " + std::to_string(kMinSamples) + ", got " +
                      std::to_string(c.samples));
  }
  if (c.workers < 1) throw ConfigError("workers must be at least 1");

  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  try {
    result = exp->run(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(exp->id + ": " + e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(exp->id + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(exp->id + ": " + e.what());
  }
  result.experiment = exp->id;
  result.seed = c.seed;
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_outputs(const ExperimentResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir) / result.experiment;
  {
    std::ofstream csv(base.string() + ".csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + base.string() + ".csv");
    write_csv(csv, result.rows);
  }
  std::ofstream js(base.string() + ".json", std::ios::binary);
  if (!js) throw std::runtime_error("cannot write " + base.string() + ".json");
  js << result.summary().dump(2) << '\n';
}

}  // namespace dferr
