#pragma once

#include "dferr/jet2.hpp"
#include "dferr/schemes.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dferr {

/// Sorted copy of a sample.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> samples);

  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t count() const { return sorted_.size(); }
  /// Fraction of samples <= x.
  double cdf(double x) const;

 private:
  std::vector<double> sorted_;
};

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against the uniform law on [0, 1].
/// Throws for an empty sample or a value outside [0, 1].
KsResult ks_uniform(const EmpiricalDistribution& samples);

/// Two-sample Kolmogorov-Smirnov test.
KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// P(K > lambda) for the Kolmogorov distribution, 100 terms of the series.
double kolmogorov_pvalue(double lambda);
/// D such that the asymptotic one-sample test of size `level` rejects above
/// it, for `n` samples. Two-sample tests pass the effective size nm/(n+m).
double kolmogorov_critical(double level, double n);

struct Chi2Result {
  double statistic = 0.0;
  int dof = 0;
  /// Upper tail probability.
  double p_value = 1.0;
};

/// Pearson chi-square on a contingency table of counts. Empty rows and
/// columns are dropped; rows or columns are merged with a neighbour until
/// every expected count is at least `min_expected`.
Chi2Result chi2_from_table(const Matrix& counts, double min_expected = 5.0);

/// Independence test of paired samples on equal-probability bins of each
/// variable (ties share a bin). Throws on mismatched lengths, empty input or
/// fewer than one bin.
Chi2Result independence_chi2(std::span<const double> v, std::span<const double> y, int bins_v = 20,
                             int bins_y = 20);

/// Upper quantile: P(chi2(dof) > x) = level.
double chi2_critical(double level, int dof);

/// Samples of U = 1/2 + n (Y_n - Y) (each coordinate in (0, 1]) with the
/// matching Y, one row per draw.
struct GraduationResiduals {
  Matrix u;
  Matrix y;
};
GraduationResiduals graduation_residuals(const GraduationScheme& scheme, int level,
                                         std::size_t samples, std::uint64_t seed);

using PointFunction = std::function<double(std::span<const double>)>;

struct PsiCompositionResult {
  /// Two-sample KS between psi(U) and psi(V) with V uniform.
  KsResult ks;
  double ks_critical = 0.0;
  /// psi(U) against coordinate `coordinate` of Y.
  Chi2Result chi2;
  double chi2_critical = 0.0;
  double mean_psi = 0.0;
  double mean_psi_uniform = 0.0;
  std::size_t samples = 0;
};

/// Compares the law of psi(U), U = 1/2 + n (Y_n - Y), with that of psi(V)
/// for V uniform on [0, 1]^d, and tests psi(U) for independence from Y.
/// Critical values are at the 1% level.
PsiCompositionResult psi_composition_test(const GraduationScheme& scheme, const PointFunction& psi,
                                          int level, std::size_t samples, std::uint64_t seed,
                                          int coordinate = 0);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

/// Least squares of log(values) on log(levels). Needs >= 3 points; rejects
/// non-positive levels or values.
RateFit rate_fit(std::span<const double> levels, std::span<const double> values);

}  // namespace dferr
