#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace dferr {

/// Key of a named substream of a root seed. Distinct names give unrelated
/// streams, so adding a consumer never shifts the draws of another.
std::uint64_t derive_stream(std::uint64_t root_seed, std::string_view name);

/// Counter-based generator: the draws of sample `counter` in stream `key`
/// depend only on (key, counter). Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t key, std::uint64_t counter);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal by inversion of uniform().
  double normal();
  /// Maps the next uniform() draw into [lo, lo + width).
  void stratify_next(double lo, double width);

 private:
  std::uint64_t state_;
  double stratum_lo_ = 0.0;
  double stratum_width_ = 1.0;
  bool stratified_ = false;
};

double normal_quantile(double u);
double normal_cdf(double x);

}  // namespace dferr
