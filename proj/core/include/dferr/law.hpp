#pragma once

#include "dferr/jet2.hpp"
#include "dferr/rng.hpp"
#include "dferr/test_function.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dferr {

/// Product law on R^d with i.i.d. coordinates, sampled by inversion so that
/// coordinate 0 consumes the first uniform draw of the stream.
class Law {
 public:
  enum class Kind { kUniform, kNormal, kCustom };

  static Law uniform(double lo, double hi, int dim = 1);
  static Law normal(double mean, double sd, int dim = 1);
  /// Unnormalized density `h` (a function of x0) restricted to (lo, hi).
  static Law custom(TestFunction density, double lo, double hi, int dim = 1);

  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }
  Law with_dimension(int dim) const;

  Vector sample(CounterRng& rng) const;
  double quantile(double u) const;
  /// Normalized marginal density.
  double density(double x) const;
  /// Derivative of the log marginal density (zero on the interior for the
  /// uniform law).
  double score(double x) const;
  double mean() const;
  double variance() const;
  double lower() const { return lo_; }
  double upper() const { return hi_; }
  /// Parameters: (lo, hi) for uniform and custom, (mean, sd) for normal.
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  const std::optional<TestFunction>& custom_density() const { return density_; }
  std::string describe() const;

 private:
  Law() = default;

  struct Table {
    std::vector<double> x;
    std::vector<double> cdf;
    double norm = 1.0;
    double mean = 0.0;
    double variance = 0.0;
  };

  Kind kind_ = Kind::kUniform;
  int dim_ = 1;
  double a_ = 0.0;
  double b_ = 1.0;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::optional<TestFunction> density_;
  std::shared_ptr<const Table> table_;
};

/// E[f(X)] for X with the one-dimensional marginal of `law`, by composite
/// Gauss-Legendre quadrature (normal laws are cut at 12 standard deviations).
double marginal_expectation(const Law& law, const std::function<double(double)>& f,
                            int panels = 2048);

}  // namespace dferr
