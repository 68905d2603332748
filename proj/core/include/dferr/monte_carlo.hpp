#pragma once

#include "dferr/jet2.hpp"
#include "dferr/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace dferr {

enum class Sampling {
  kPlain,
  /// Samples come in pairs sharing a stratum of the first uniform draw;
  /// the error estimate uses within-pair differences.
  kStratified,
};

struct SamplingPlan {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::string stream = "default";
  Sampling sampling = Sampling::kPlain;
  unsigned workers = 1;
};

/// Mean of a vector-valued per-sample observation and the covariance of that
/// mean as an estimator.
struct MeanEstimate {
  Vector mean;
  Matrix covariance;
  std::size_t samples = 0;

  double stderr_of(int i) const;
  /// Standard error of coeffs . mean.
  double stderr_of(const Vector& coeffs) const;
};

/// Fills `out` with the observation for one sample drawn from `rng`.
using SampleFn = std::function<void(CounterRng& rng, std::span<double> out)>;

/// Number of samples per accumulation block. Results depend on the block
/// layout only, never on the worker count.
inline constexpr std::size_t kBlockSize = 8192;

/// Averages `width` observations over plan.samples independent samples.
/// Sample i draws from CounterRng(derive_stream(seed, stream), i). Blocks are
/// reduced with a pairwise tree, so the result is bitwise identical for any
/// number of workers. Throws std::domain_error on a non-finite observation.
MeanEstimate monte_carlo_mean(const SamplingPlan& plan, int width, const SampleFn& fn);

/// Pairwise (tree) sum of a sequence.
double pairwise_sum(std::span<const double> values);

}  // namespace dferr
