#pragma once

#include "dferr/dirichlet_structure.hpp"
#include "dferr/law.hpp"
#include "dferr/rng.hpp"
#include "dferr/test_function.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dferr {

/// One draw of the exact quantity Y and its approximation Y_n.
struct SamplePair {
  Vector exact;
  Vector approx;
};

/// Paired sampler n -> (Y, Y_n) with scale alpha(n).
class ApproximationScheme {
 public:
  virtual ~ApproximationScheme() = default;

  virtual std::string name() const = 0;
  virtual int dimension() const = 0;
  /// Draws one pair; a fixed rng stream reproduces the pair exactly.
  virtual SamplePair sample(int level, CounterRng& rng) const = 0;
  virtual double alpha(int level) const = 0;
  virtual void check_level(int level) const = 0;

  /// Analytic operator structure, when known.
  virtual std::optional<DirichletStructure> reference() const { return std::nullopt; }
  /// Closed-form E[Y - Y_n | F_n] and conditional variance, when known.
  virtual std::optional<double> reference_bias(int) const { return std::nullopt; }
  virtual std::optional<double> reference_variance(int) const { return std::nullopt; }
};

using SchemePtr = std::shared_ptr<const ApproximationScheme>;

/// Y uniform on [0, 1] built from fair binary digits, Y_n its truncation to n
/// digits. alpha(n) = 2^n, levels 0..52.
class BinaryDigitScheme final : public ApproximationScheme {
 public:
  std::string name() const override { return "binary-digit"; }
  int dimension() const override { return 1; }
  SamplePair sample(int level, CounterRng& rng) const override;
  double alpha(int level) const override;
  void check_level(int level) const override;
  std::optional<double> reference_bias(int level) const override;
  std::optional<double> reference_variance(int level) const override;

  /// sum_{k <= n} digits[k-1] 2^-k.
  static double truncate(std::span<const int> digits, int n);
};

/// Exact conditional moments of x - x_n given the first n binary digits,
/// computed in rational arithmetic from the moments of independent fair
/// digits.
struct DyadicMoments {
  double bias = 0.0;
  double variance = 0.0;
  /// bias * 2^(n+1) and variance * 12 * 4^n, evaluated exactly.
  double normalized_bias = 0.0;
  double normalized_variance = 0.0;
};
DyadicMoments binary_conditional_moments(std::span<const int> prefix);

/// Urn starting with one white and one black ball; X_n is the white fraction
/// after n draws and Y = X_horizon stands in for the a.s. limit.
class PolyaScheme final : public ApproximationScheme {
 public:
  enum class Continuation {
    /// Draw every step up to the horizon.
    kStepwise,
    /// Jump from step n to the horizon with the exact beta-binomial law of
    /// the number of further white draws.
    kBetaBinomial,
  };

  explicit PolyaScheme(int horizon = 100000, Continuation continuation = Continuation::kBetaBinomial);

  std::string name() const override { return "polya"; }
  int dimension() const override { return 1; }
  SamplePair sample(int level, CounterRng& rng) const override;
  /// alpha(n) = n + 2.
  double alpha(int level) const override;
  void check_level(int level) const override;
  std::optional<double> reference_bias(int level) const override;
  /// E[v_n] = 1 / (6 (n + 2)).
  std::optional<double> reference_variance(int level) const override;

  int horizon() const { return horizon_; }

  /// White balls after n draws, simulated from the urn recurrence.
  static int simulate_whites(int draws, CounterRng& rng);
  /// Conditional variance of the limit given `whites` white balls after n
  /// draws: X (1 - X) / (n + 3).
  static double conditional_variance(int whites, int draws);
  /// E[v_n] from the exact law of the white count after n draws, propagated
  /// draw by draw.
  static double expected_variance(int draws);

 private:
  int horizon_;
  Continuation continuation_;
};

/// Rounding to the nearest graduation of a scale with step 1/n:
/// Y_n = floor(nY)/n + 1/(2n) per coordinate. alpha(n) = n^2.
class GraduationScheme final : public ApproximationScheme {
 public:
  explicit GraduationScheme(Law law);

  std::string name() const override { return "graduation"; }
  int dimension() const override { return law_.dimension(); }
  SamplePair sample(int level, CounterRng& rng) const override;
  double alpha(int level) const override;
  void check_level(int level) const override;
  std::optional<DirichletStructure> reference() const override;

  const Law& law() const { return law_; }

  static double quantize(double y, int n);
  /// 1/2 - {x}.
  static double sawtooth(double x);

 private:
  Law law_;
};

/// Y_eps = Y + eps Z(Y) + sqrt(eps) T(Y) G with eps = 2^-level and
/// alpha = 1/eps. Z is a vector of d functions of y, T a d x q matrix of
/// functions of y and G a centered q-dimensional law with unit covariance.
class PerturbationScheme final : public ApproximationScheme {
 public:
  /// Rejects a G law whose sample mean or variance over a validation stream
  /// is more than 3 standard errors from 0 or 1.
  PerturbationScheme(Law y_law, std::vector<TestFunction> z_map,
                     std::vector<std::vector<TestFunction>> t_map, Law g_law);

  std::string name() const override { return "perturbation"; }
  int dimension() const override { return y_law_.dimension(); }
  SamplePair sample(int level, CounterRng& rng) const override;
  double alpha(int level) const override;
  void check_level(int level) const override;
  /// Theoretical drift z(y) = Z(y), diffusion theta = T T' and symmetric
  /// drift_j = 1/2 sum_i rho_ij with rho_ij = d_j theta_ij + theta_ij score_j.
  std::optional<DirichletStructure> reference() const override;

  static double epsilon(int level);
  const Law& law() const { return y_law_; }

 private:
  Law y_law_;
  std::vector<TestFunction> z_;
  std::vector<std::vector<TestFunction>> t_;
  Law g_law_;
};

/// integral of n^2 (phi(y + sawtooth(n y)/n) - phi(y)) w(y) dy over [lo, hi],
/// by Gauss-Legendre quadrature on every graduation cell. phi and w are
/// functions of x0. Throws for a non-finite or empty interval.
double conditional_bias_profile(const TestFunction& phi, int n, const TestFunction& weight,
                                double lo, double hi);

}  // namespace dferr
