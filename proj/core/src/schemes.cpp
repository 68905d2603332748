#include "dferr/schemes.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace dferr {

namespace {

void require_level(bool ok, const std::string& scheme, int level, const std::string& range) {
  if (!ok) {
    throw std::out_of_range(scheme + ": level " + std::to_string(level) + " outside " + range);
  }
}

}  // namespace

// ---------------------------------------------------------------- binary digits

SamplePair BinaryDigitScheme::sample(int level, CounterRng& rng) const {
  check_level(level);
  const std::uint64_t bits = rng() >> 11;  // digits a_1..a_53
  const double y = static_cast<double>(bits) * 0x1.0p-53;
  const std::uint64_t kept = level == 0 ? 0 : bits >> (53 - level);
  const double yn = std::ldexp(static_cast<double>(kept), -level);
  return {Vector::Constant(1, y), Vector::Constant(1, yn)};
}

double BinaryDigitScheme::alpha(int level) const {
  check_level(level);
  return std::ldexp(1.0, level);
}

void BinaryDigitScheme::check_level(int level) const {
  require_level(level >= 0 && level <= 52, name(), level, "[0, 52]");
}

std::optional<double> BinaryDigitScheme::reference_bias(int level) const {
  check_level(level);
  return std::ldexp(1.0, -(level + 1));
}

std::optional<double> BinaryDigitScheme::reference_variance(int level) const {
  check_level(level);
  return std::ldexp(1.0, -2 * level) / 12.0;
}

double BinaryDigitScheme::truncate(std::span<const int> digits, int n) {
  if (n < 0 || static_cast<std::size_t>(n) > digits.size()) {
    throw std::out_of_range("truncate: not enough digits");
  }
  double x = 0.0;
  for (int k = 1; k <= n; ++k) {
    const int a = digits[static_cast<std::size_t>(k - 1)];
    if (a != 0 && a != 1) throw std::invalid_argument("binary digits must be 0 or 1");
    x += std::ldexp(static_cast<double>(a), -k);
  }
  return x;
}

DyadicMoments binary_conditional_moments(std::span<const int> prefix) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  for (int a : prefix) {
    if (a != 0 && a != 1) throw std::invalid_argument("binary digits must be 0 or 1");
  }
  const unsigned n = static_cast<unsigned>(prefix.size());
  const cpp_int two_n = cpp_int(1) << n;
  const cpp_int four_n = two_n * two_n;
  // The digits after the prefix are independent with mean 1/2 and variance
  // 1/4: sum_{k>n} 2^-k = 2^-n and sum_{k>n} 4^-k = 4^-n / 3.
  const cpp_rational digit_mean(1, 2);
  const cpp_rational digit_var(1, 4);
  const cpp_rational tail_2(1, two_n);
  const cpp_rational tail_4(cpp_int(1), 3 * four_n);
  const cpp_rational bias = digit_mean * tail_2;
  const cpp_rational variance = digit_var * tail_4;
  DyadicMoments m;
  m.bias = static_cast<double>(bias);
  m.variance = static_cast<double>(variance);
  m.normalized_bias = static_cast<double>(bias * cpp_rational(two_n * 2));
  m.normalized_variance = static_cast<double>(variance * cpp_rational(four_n * 12));
  return m;
}

// ---------------------------------------------------------------- Polya urn

PolyaScheme::PolyaScheme(int horizon, Continuation continuation)
    : horizon_(horizon), continuation_(continuation) {
  if (horizon < 1) throw std::invalid_argument("polya: horizon must be positive");
}

int PolyaScheme::simulate_whites(int draws, CounterRng& rng) {
  // (k + 2) X_k = (k + 1) X_{k-1} + 1{U_k <= X_{k-1}} with X_0 = 1/2.
  long whites = 1;
  for (int k = 1; k <= draws; ++k) {
    const double x_prev = static_cast<double>(whites) / static_cast<double>(k + 1);
    if (rng.uniform() <= x_prev) ++whites;
  }
  return static_cast<int>(whites);
}

double PolyaScheme::conditional_variance(int whites, int draws) {
  const double x = static_cast<double>(whites) / (draws + 2);
  return x * (1.0 - x) / (draws + 3);
}

double PolyaScheme::expected_variance(int draws) {
  if (draws < 0) throw std::invalid_argument("polya: draws must be non-negative");
  // p[w] = P(w white balls among the draws + 2 balls).
  std::vector<double> p = {0.0, 1.0};
  for (int k = 1; k <= draws; ++k) {
    std::vector<double> next(p.size() + 1, 0.0);
    const double total = k + 1;
    for (std::size_t w = 1; w < p.size(); ++w) {
      const double white = static_cast<double>(w) / total;
      next[w + 1] += p[w] * white;
      next[w] += p[w] * (1.0 - white);
    }
    p = std::move(next);
  }
  double e = 0.0;
  for (std::size_t w = 1; w < p.size(); ++w) e += p[w] * conditional_variance(static_cast<int>(w), draws);
  return e;
}

SamplePair PolyaScheme::sample(int level, CounterRng& rng) const {
  check_level(level);
  const long whites_n = simulate_whites(level, rng);
  long whites = whites_n;
  if (continuation_ == Continuation::kStepwise) {
    for (int k = level + 1; k <= horizon_; ++k) {
      const double x_prev = static_cast<double>(whites) / static_cast<double>(k + 1);
      if (rng.uniform() <= x_prev) ++whites;
    }
  } else if (horizon_ > level) {
    const double a = static_cast<double>(whites_n);
    const double b = static_cast<double>(level + 2 - whites_n);
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double u = ga(rng);
    const double v = gb(rng);
    const double p = u / (u + v);
    std::binomial_distribution<long> more(horizon_ - level, p);
    whites += more(rng);
  }
  const double xn = static_cast<double>(whites_n) / (level + 2);
  const double y = static_cast<double>(whites) / (horizon_ + 2);
  return {Vector::Constant(1, y), Vector::Constant(1, xn)};
}

double PolyaScheme::alpha(int level) const {
  check_level(level);
  return static_cast<double>(level + 2);
}

void PolyaScheme::check_level(int level) const {
  require_level(level >= 0 && level <= horizon_, name(), level,
                "[0, " + std::to_string(horizon_) + "]");
}

std::optional<double> PolyaScheme::reference_bias(int level) const {
  check_level(level);
  return 0.0;
}

std::optional<double> PolyaScheme::reference_variance(int level) const {
  check_level(level);
  return 1.0 / (6.0 * (level + 2));
}

// ---------------------------------------------------------------- graduation

GraduationScheme::GraduationScheme(Law law) : law_(std::move(law)) {}

double GraduationScheme::quantize(double y, int n) {
  return std::floor(n * y) / n + 1.0 / (2.0 * n);
}

double GraduationScheme::sawtooth(double x) { return 0.5 - (x - std::floor(x)); }

SamplePair GraduationScheme::sample(int level, CounterRng& rng) const {
  check_level(level);
  Vector y = law_.sample(rng);
  Vector yn(y.size());
  for (int i = 0; i < y.size(); ++i) yn[i] = quantize(y[i], level);
  return {std::move(y), std::move(yn)};
}

double GraduationScheme::alpha(int level) const {
  check_level(level);
  return static_cast<double>(level) * level;
}

void GraduationScheme::check_level(int level) const {
  require_level(level >= 1, name(), level, "[1, inf)");
}

std::optional<DirichletStructure> GraduationScheme::reference() const {
  return graduation_structure(law_);
}

double conditional_bias_profile(const TestFunction& phi, int n, const TestFunction& weight,
                                double lo, double hi) {
  if (phi.dimension() != 1 || weight.dimension() != 1) {
    throw std::invalid_argument("conditional_bias_profile: phi and weight must be functions of x0");
  }
  if (n < 1) throw std::invalid_argument("conditional_bias_profile: n must be positive");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw std::invalid_argument("conditional_bias_profile: weight support must be a finite interval");
  }
  const double nn = static_cast<double>(n) * n;
  double total = 0.0;
  // On the cell [k/n, (k+1)/n) the approximation is the midpoint (k + 1/2)/n.
  const long k_first = static_cast<long>(std::floor(lo * n));
  const long k_last = static_cast<long>(std::ceil(hi * n)) - 1;
  for (long k = k_first; k <= k_last; ++k) {
    const double a = std::max(lo, static_cast<double>(k) / n);
    const double b = std::min(hi, static_cast<double>(k + 1) / n);
    if (!(a < b)) continue;
    const double mid = (static_cast<double>(k) + 0.5) / n;
    const double phi_mid = phi(std::span<const double>(&mid, 1));
    auto integrand = [&](double y) {
      return nn * (phi_mid - phi(std::span<const double>(&y, 1))) *
             weight(std::span<const double>(&y, 1));
    };
    total += boost::math::quadrature::gauss<double, 20>::integrate(integrand, a, b);
  }
  if (!std::isfinite(total)) throw std::domain_error("conditional_bias_profile: non-finite result");
  return total;
}

// ---------------------------------------------------------------- perturbation

double PerturbationScheme::epsilon(int level) { return std::ldexp(1.0, -level); }

PerturbationScheme::PerturbationScheme(Law y_law, std::vector<TestFunction> z_map,
                                       std::vector<std::vector<TestFunction>> t_map, Law g_law)
    : y_law_(std::move(y_law)), z_(std::move(z_map)), t_(std::move(t_map)), g_law_(std::move(g_law)) {
  const int d = y_law_.dimension();
  const int q = g_law_.dimension();
  if (static_cast<int>(z_.size()) != d) throw std::invalid_argument("perturbation: Z must have d components");
  if (static_cast<int>(t_.size()) != d) throw std::invalid_argument("perturbation: T must have d rows");
  for (const auto& row : t_) {
    if (static_cast<int>(row.size()) != q) throw std::invalid_argument("perturbation: T must have q columns");
    for (const auto& f : row)
      if (f.dimension() != d) throw std::invalid_argument("perturbation: T entries must be functions of y");
  }
  for (const auto& f : z_)
    if (f.dimension() != d) throw std::invalid_argument("perturbation: Z entries must be functions of y");

  // Validation stream: G must look centered with unit variance.
  constexpr std::size_t kChecks = 20000;
  const std::uint64_t key = derive_stream(0x6A09E667F3BCC908ULL, "perturbation/g-validation");
  Vector s1 = Vector::Zero(q);
  Vector s2 = Vector::Zero(q);
  Vector s4 = Vector::Zero(q);
  for (std::size_t i = 0; i < kChecks; ++i) {
    CounterRng rng(key, i);
    const Vector g = g_law_.sample(rng);
    s1 += g;
    s2 += g.cwiseProduct(g);
    s4 += g.cwiseProduct(g).cwiseProduct(g.cwiseProduct(g));
  }
  const double m = static_cast<double>(kChecks);
  for (int j = 0; j < q; ++j) {
    const double mean = s1[j] / m;
    const double second = s2[j] / m;
    const double var = second - mean * mean;
    const double fourth = s4[j] / m;
    if (std::abs(mean) > 3.0 * std::sqrt(var / m)) {
      throw std::invalid_argument("perturbation: G is not centered (sample mean " + std::to_string(mean) + ")");
    }
    if (std::abs(second - 1.0) > 3.0 * std::sqrt(std::max(fourth - second * second, 0.0) / m)) {
      throw std::invalid_argument("perturbation: G does not have unit variance (sample second moment " +
                                  std::to_string(second) + ")");
    }
  }
}

SamplePair PerturbationScheme::sample(int level, CounterRng& rng) const {
  check_level(level);
  const double eps = epsilon(level);
  Vector y = y_law_.sample(rng);
  const Vector g = g_law_.sample(rng);
  Vector ye = y;
  const double root = std::sqrt(eps);
  for (std::size_t i = 0; i < z_.size(); ++i) {
    double noise = 0.0;
    for (int k = 0; k < g.size(); ++k) noise += t_[i][static_cast<std::size_t>(k)](y) * g[k];
    ye[static_cast<int>(i)] += eps * z_[i](y) + root * noise;
  }
  return {std::move(y), std::move(ye)};
}

double PerturbationScheme::alpha(int level) const {
  check_level(level);
  return 1.0 / epsilon(level);
}

void PerturbationScheme::check_level(int level) const {
  require_level(level >= 0 && level <= 60, name(), level, "[0, 60]");
}

std::optional<DirichletStructure> PerturbationScheme::reference() const {
  const int d = y_law_.dimension();
  const int q = g_law_.dimension();
  DirichletStructure s;
  s.dim = d;
  auto t = t_;
  auto z = z_;
  auto law = y_law_;
  s.diffusion = [t, d, q](const Vector& y) {
    Matrix tm(d, q);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < q; ++k) tm(i, k) = t[i][k](y);
    return Matrix(tm * tm.transpose());
  };
  s.theoretical_drift = [z, d](const Vector& y) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = z[i](y);
    return v;
  };
  s.drift = [t, law, d, q](const Vector& y) {
    std::vector<std::vector<Jet2>> tj(d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < q; ++k) tj[i].push_back(t[i][k].jet(y, false));
    Vector drift = Vector::Zero(d);
    for (int j = 0; j < d; ++j) {
      const double score = law.score(y[j]);
      for (int i = 0; i < d; ++i) {
        double theta = 0.0;
        double dtheta = 0.0;
        for (int k = 0; k < q; ++k) {
          theta += tj[i][k].value() * tj[j][k].value();
          dtheta += tj[i][k].gradient()[j] * tj[j][k].value() + tj[i][k].value() * tj[j][k].gradient()[j];
        }
        drift[j] += 0.5 * (dtheta + theta * score);
      }
    }
    return drift;
  };
  s.measure = [law](CounterRng& rng) { return law.sample(rng); };
  return s;
}

}  // namespace dferr
