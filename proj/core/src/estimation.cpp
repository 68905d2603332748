#include "dferr/estimation.hpp"

#include "dferr/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dferr {

namespace {

void require_test_function(const TestFunction& f, const ApproximationScheme& scheme,
                           const char* role) {
  if (f.dimension() != scheme.dimension()) {
    throw std::invalid_argument(std::string(role) + " has dimension " +
                                std::to_string(f.dimension()) + " but scheme " + scheme.name() +
                                " has dimension " + std::to_string(scheme.dimension()));
  }
  if (!f.in_cb2()) {
    throw std::invalid_argument(std::string(role) + " = " + f.name() +
                                " has no finite bounds on its value and first two derivatives");
  }
}

void require_samples(const EstimationOptions& options) {
  if (options.samples < kMinSamples) {
    throw std::invalid_argument("at least " + std::to_string(kMinSamples) +
                                " samples are required, got " + std::to_string(options.samples));
  }
}

SamplingPlan plan_for(const EstimationOptions& options, std::string stream) {
  SamplingPlan plan;
  plan.samples = options.samples;
  plan.seed = options.seed;
  plan.stream = std::move(stream);
  plan.sampling = options.sampling;
  plan.workers = options.workers;
  return plan;
}

std::string pair_stream(const ApproximationScheme& scheme, int level) {
  return "pairs/" + scheme.name() + "/" + std::to_string(level);
}

std::optional<double> kind_value(const OperatorValues& v, BiasKind kind) {
  switch (kind) {
    case BiasKind::kTheoretical: return v.theoretical;
    case BiasKind::kPractical: return v.practical;
    case BiasKind::kSymmetric: return v.symmetric;
    case BiasKind::kSingular: return v.singular;
  }
  return std::nullopt;
}

/// Per-sample integrand of one kind for a function f against a weight g,
/// given f and g at Y and at Y_n.
double kind_integrand(BiasKind kind, double alpha, double f, double fn, double g, double gn) {
  const double df = fn - f;
  switch (kind) {
    case BiasKind::kTheoretical: return alpha * df * g;
    case BiasKind::kPractical: return -alpha * df * gn;
    case BiasKind::kSymmetric: return -0.5 * alpha * df * (gn - g);
    case BiasKind::kSingular: return 0.5 * alpha * df * (gn + g);
  }
  return 0.0;
}

/// Coefficients of a kind on the base means (u, w) = alpha (Delta phi) chi
/// at Y and at Y_n.
std::array<double, 2> kind_coefficients(BiasKind kind) {
  switch (kind) {
    case BiasKind::kTheoretical: return {1.0, 0.0};
    case BiasKind::kPractical: return {0.0, -1.0};
    case BiasKind::kSymmetric: return {0.5, -0.5};
    case BiasKind::kSingular: return {0.5, 0.5};
  }
  return {0.0, 0.0};
}

double combine(const std::array<double, 2>& c, const Vector& mean) {
  // Written out so that the relations between kinds hold bit for bit.
  return c[0] * mean[0] + c[1] * mean[1];
}

void attach_reference(BiasEstimate& e, const ApproximationScheme& scheme, const TestFunction& phi,
                      const TestFunction& chi, const EstimationOptions& options) {
  if (options.reference_samples == 0) return;
  const auto structure = scheme.reference();
  if (!structure) return;
  if (!structure->drift && e.kind != BiasKind::kTheoretical) return;
  const BiasKind kind = e.kind;
  const auto ref = reference_expectation(
      scheme, 1,
      [&](const DirichletStructure& s, const Vector& y, std::span<double> out) {
        out[0] = *kind_value(scheme_operators(s, phi.jet(y), y), kind) * chi(y);
      },
      options, "reference/" + scheme.name() + "/" + std::string(to_string(kind)));
  if (!ref) return;
  e.reference = ref->mean[0];
  e.reference_std_error = ref->stderr_of(0);
}

}  // namespace

std::string_view to_string(BiasKind kind) {
  switch (kind) {
    case BiasKind::kTheoretical: return "theoretical";
    case BiasKind::kPractical: return "practical";
    case BiasKind::kSymmetric: return "symmetric";
    case BiasKind::kSingular: return "singular";
  }
  return "unknown";
}

BiasKind parse_bias_kind(std::string_view text) {
  for (BiasKind k : kAllBiasKinds) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown bias kind '" + std::string(text) +
                              "' (expected theoretical, practical, symmetric or singular)");
}

std::optional<double> BiasEstimate::z_score() const {
  if (!reference) return std::nullopt;
  const double ref_se = reference_std_error.value_or(0.0);
  const double se = std::sqrt(std_error * std_error + ref_se * ref_se);
  if (se == 0.0) {
    if (value == *reference) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), value - *reference);
  }
  return (value - *reference) / se;
}

std::optional<MeanEstimate> reference_expectation(
    const ApproximationScheme& scheme, int width,
    const std::function<void(const DirichletStructure&, const Vector&, std::span<double>)>& fn,
    const EstimationOptions& options, const std::string& stream) {
  const auto structure = scheme.reference();
  if (!structure || options.reference_samples == 0) return std::nullopt;
  SamplingPlan plan;
  plan.samples = options.reference_samples;
  plan.seed = options.seed;
  plan.stream = stream;
  plan.workers = options.workers;
  const DirichletStructure& s = *structure;
  return monte_carlo_mean(plan, width, [&](CounterRng& rng, std::span<double> out) {
    const Vector y = s.measure(rng);
    fn(s, y, out);
  });
}

std::vector<BiasEstimate> estimate_all_kinds(const ApproximationScheme& scheme,
                                             const TestFunction& phi, const TestFunction& chi,
                                             int level, const EstimationOptions& options) {
  require_test_function(phi, scheme, "phi");
  require_test_function(chi, scheme, "chi");
  require_samples(options);
  scheme.check_level(level);
  const double alpha = scheme.alpha(level);

  std::vector<BiasEstimate> out;
  auto base = [&](BiasKind kind) {
    BiasEstimate e;
    e.kind = kind;
    e.scheme = scheme.name();
    e.phi = phi.name();
    e.chi = chi.name();
    e.level = level;
    e.samples = options.samples;
    return e;
  };

  if (options.pairing == Pairing::kCommonRandomNumbers) {
    const MeanEstimate m = monte_carlo_mean(
        plan_for(options, pair_stream(scheme, level)), 2,
        [&](CounterRng& rng, std::span<double> v) {
          const SamplePair p = scheme.sample(level, rng);
          const double df = phi(p.approx) - phi(p.exact);
          v[0] = alpha * df * chi(p.exact);
          v[1] = alpha * df * chi(p.approx);
        });
    for (BiasKind kind : kAllBiasKinds) {
      BiasEstimate e = base(kind);
      const auto c = kind_coefficients(kind);
      e.value = combine(c, m.mean);
      e.std_error = m.stderr_of(Vector{{c[0], c[1]}});
      out.push_back(std::move(e));
    }
  } else {
    for (BiasKind kind : kAllBiasKinds) {
      const MeanEstimate m = monte_carlo_mean(
          plan_for(options, pair_stream(scheme, level) + "/" + std::string(to_string(kind))), 1,
          [&](CounterRng& rng, std::span<double> v) {
            const SamplePair p = scheme.sample(level, rng);
            v[0] = kind_integrand(kind, alpha, phi(p.exact), phi(p.approx), chi(p.exact),
                                  chi(p.approx));
          });
      BiasEstimate e = base(kind);
      e.value = m.mean[0];
      e.std_error = m.stderr_of(0);
      out.push_back(std::move(e));
    }
  }
  for (auto& e : out) attach_reference(e, scheme, phi, chi, options);
  return out;
}

BiasEstimate estimate_bias(BiasKind kind, const ApproximationScheme& scheme, const TestFunction& phi,
                           const TestFunction& chi, int level, const EstimationOptions& options) {
  require_test_function(phi, scheme, "phi");
  require_test_function(chi, scheme, "chi");
  require_samples(options);
  scheme.check_level(level);
  const double alpha = scheme.alpha(level);
  std::string stream = pair_stream(scheme, level);
  if (options.pairing == Pairing::kIndependentStreams) stream += "/" + std::string(to_string(kind));
  const MeanEstimate m =
      monte_carlo_mean(plan_for(options, stream), 1, [&](CounterRng& rng, std::span<double> v) {
        const SamplePair p = scheme.sample(level, rng);
        v[0] = kind_integrand(kind, alpha, phi(p.exact), phi(p.approx), chi(p.exact),
                              chi(p.approx));
      });
  BiasEstimate e;
  e.kind = kind;
  e.scheme = scheme.name();
  e.phi = phi.name();
  e.chi = chi.name();
  e.level = level;
  e.samples = options.samples;
  e.value = m.mean[0];
  e.std_error = m.stderr_of(0);
  attach_reference(e, scheme, phi, chi, options);
  return e;
}

RelationResiduals check_relations(std::span<const BiasEstimate> estimates) {
  const BiasEstimate* by_kind[4] = {nullptr, nullptr, nullptr, nullptr};
  if (estimates.empty()) throw std::invalid_argument("check_relations: no estimates");
  const BiasEstimate& first = estimates.front();
  for (const BiasEstimate& e : estimates) {
    if (e.phi != first.phi || e.chi != first.chi || e.level != first.level ||
        e.scheme != first.scheme) {
      throw std::invalid_argument("check_relations: estimates differ in scheme, phi, chi or level");
    }
    by_kind[static_cast<int>(e.kind)] = &e;
  }
  for (const BiasEstimate* e : by_kind) {
    if (e == nullptr) throw std::invalid_argument("check_relations: all four kinds are required");
  }
  const BiasEstimate& t = *by_kind[0];
  const BiasEstimate& p = *by_kind[1];
  const BiasEstimate& s = *by_kind[2];
  const BiasEstimate& g = *by_kind[3];
  RelationResiduals r;
  r.symmetric = s.value - 0.5 * (t.value + p.value);
  r.singular = g.value - 0.5 * (t.value - p.value);
  const double tp = 0.25 * (t.std_error * t.std_error + p.std_error * p.std_error);
  r.symmetric_std_error = std::sqrt(s.std_error * s.std_error + tp);
  r.singular_std_error = std::sqrt(g.std_error * g.std_error + tp);
  return r;
}

LocalityResult locality_test(const ApproximationScheme& scheme, const TestFunction& phi,
                             std::span<const int> levels, const EstimationOptions& options) {
  if (levels.size() < 3) throw std::invalid_argument("locality_test: at least 3 levels are required");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) throw std::invalid_argument("locality_test: levels must increase");
  }
  require_test_function(phi, scheme, "phi");
  require_samples(options);
  LocalityResult r;
  for (int level : levels) {
    scheme.check_level(level);
    const double alpha = scheme.alpha(level);
    const MeanEstimate m = monte_carlo_mean(
        plan_for(options, "locality/" + scheme.name() + "/" + std::to_string(level)), 1,
        [&](CounterRng& rng, std::span<double> v) {
          const SamplePair p = scheme.sample(level, rng);
          const double d = phi(p.approx) - phi(p.exact);
          v[0] = alpha * (d * d) * (d * d);
        });
    r.levels.push_back(level);
    r.values.push_back(m.mean[0]);
    r.std_errors.push_back(m.stderr_of(0));
  }
  bool all_zero = true;
  bool all_positive = true;
  r.decreasing = true;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    all_zero = all_zero && r.values[i] == 0.0;
    all_positive = all_positive && r.values[i] > 0.0;
    if (i > 0 && r.values[i] > r.values[i - 1]) r.decreasing = false;
  }
  if (all_zero) {
    r.slope = std::numeric_limits<double>::quiet_NaN();
    r.r2 = std::numeric_limits<double>::quiet_NaN();
    r.accepted = true;
    return r;
  }
  if (!all_positive) {
    r.slope = std::numeric_limits<double>::quiet_NaN();
    r.r2 = std::numeric_limits<double>::quiet_NaN();
    r.accepted = false;
    return r;
  }
  std::vector<double> x(r.levels.begin(), r.levels.end());
  const RateFit fit = rate_fit(x, r.values);
  r.slope = fit.slope;
  r.r2 = fit.r2;
  r.accepted = r.decreasing && fit.slope <= -1.0;
  return r;
}

FirstOrderResult first_order_test(BiasKind kind, const ApproximationScheme& scheme,
                                  const TestFunction& phi, const TestFunction& chi,
                                  const TestFunction& psi, int level,
                                  const EstimationOptions& options) {
  require_test_function(phi, scheme, "phi");
  require_test_function(chi, scheme, "chi");
  require_test_function(psi, scheme, "psi");
  require_samples(options);
  scheme.check_level(level);
  const double alpha = scheme.alpha(level);
  std::string stream = "first-order/" + scheme.name() + "/" + std::to_string(level);
  const MeanEstimate m =
      monte_carlo_mean(plan_for(options, stream), 1, [&](CounterRng& rng, std::span<double> v) {
        const SamplePair p = scheme.sample(level, rng);
        const double f = phi(p.exact), fn = phi(p.approx);
        const double c = chi(p.exact), cn = chi(p.approx);
        const double s = psi(p.exact), sn = psi(p.approx);
        v[0] = kind_integrand(kind, alpha, f * c, fn * cn, s, sn) -
               kind_integrand(kind, alpha, f, fn, c * s, cn * sn) -
               kind_integrand(kind, alpha, c, cn, f * s, fn * sn);
      });
  FirstOrderResult r;
  r.value = m.mean[0];
  r.std_error = m.stderr_of(0);

  const auto structure = scheme.reference();
  if (structure && (structure->drift || kind == BiasKind::kTheoretical)) {
    const auto ref = reference_expectation(
        scheme, 1,
        [&](const DirichletStructure& s, const Vector& y, std::span<double> out) {
          const Jet2 jf = phi.jet(y);
          const Jet2 jc = chi.jet(y);
          const double b_fc = *kind_value(scheme_operators(s, jet_mul(jf, jc), y), kind);
          const double b_f = *kind_value(scheme_operators(s, jf, y), kind);
          const double b_c = *kind_value(scheme_operators(s, jc, y), kind);
          out[0] = (b_fc - b_f * jc.value() - jf.value() * b_c) * psi(y);
        },
        options, "reference/" + scheme.name() + "/first-order");
    if (ref) {
      r.reference = ref->mean[0];
      r.reference_std_error = ref->stderr_of(0);
    }
  }
  return r;
}

double VarianceForms::combined_std_error() const {
  return std::sqrt(theoretical_std_error * theoretical_std_error +
                   practical_std_error * practical_std_error);
}

VarianceForms variance_forms(const ApproximationScheme& scheme, const TestFunction& phi,
                             const TestFunction& chi, const TestFunction& psi, int level,
                             const EstimationOptions& options) {
  require_test_function(phi, scheme, "phi");
  require_test_function(chi, scheme, "chi");
  require_test_function(psi, scheme, "psi");
  require_samples(options);
  scheme.check_level(level);
  const double alpha = scheme.alpha(level);
  const MeanEstimate m = monte_carlo_mean(
      plan_for(options, "variance-forms/" + scheme.name() + "/" + std::to_string(level)), 2,
      [&](CounterRng& rng, std::span<double> v) {
        const SamplePair p = scheme.sample(level, rng);
        const double d = alpha * (phi(p.approx) - phi(p.exact)) * (chi(p.approx) - chi(p.exact));
        v[0] = d * psi(p.exact);
        v[1] = d * psi(p.approx);
      });
  VarianceForms r;
  r.theoretical = m.mean[0];
  r.practical = m.mean[1];
  r.theoretical_std_error = m.stderr_of(0);
  r.practical_std_error = m.stderr_of(1);
  r.difference = r.theoretical - r.practical;
  r.difference_std_error = m.stderr_of(Vector{{1.0, -1.0}});

  const auto structure = scheme.reference();
  if (structure && structure->drift) {
    const auto ref = reference_expectation(
        scheme, 2,
        [&](const DirichletStructure& s, const Vector& y, std::span<double> out) {
          const Jet2 jf = phi.jet(y);
          const Jet2 jc = chi.jet(y);
          const Jet2 js = psi.jet(y);
          const OperatorValues a_fs = scheme_operators(s, jet_mul(jf, js), y);
          const OperatorValues a_s = scheme_operators(s, js, y);
          const OperatorValues a_f = scheme_operators(s, jf, y);
          const double f = jf.value(), c = jc.value(), w = js.value();
          out[0] = -*a_fs.practical * c + *a_s.practical * f * c - a_f.theoretical * c * w;
          out[1] = -a_fs.theoretical * c + a_s.theoretical * f * c - *a_f.practical * c * w;
        },
        options, "reference/" + scheme.name() + "/variance-forms");
    if (ref) {
      r.operator_theoretical = ref->mean[0];
      r.operator_practical = ref->mean[1];
      r.operator_std_error = std::max(ref->stderr_of(0), ref->stderr_of(1));
    }
  }
  return r;
}

}  // namespace dferr
