#include "dferr/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace dferr {

double MeanEstimate::stderr_of(int i) const { return std::sqrt(std::max(0.0, covariance(i, i))); }

double MeanEstimate::stderr_of(const Vector& coeffs) const {
  return std::sqrt(std::max(0.0, coeffs.dot(covariance * coeffs)));
}

namespace {

// Plain blocks carry (count, mean, M2); stratified blocks carry the number of
// strata, the sum of stratum means and the sum of within-stratum variance
// estimates.
struct Block {
  double count = 0.0;
  Vector first;
  Matrix second;
};

Block merge_plain(const Block& a, const Block& b) {
  if (a.count == 0.0) return b;
  if (b.count == 0.0) return a;
  Block m;
  m.count = a.count + b.count;
  const Vector delta = b.first - a.first;
  m.first = a.first + delta * (b.count / m.count);
  m.second = a.second + b.second + (delta * delta.transpose()) * (a.count * b.count / m.count);
  return m;
}

Block merge_sums(const Block& a, const Block& b) {
  Block m;
  m.count = a.count + b.count;
  m.first = a.first + b.first;
  m.second = a.second + b.second;
  return m;
}

template <class Merge>
Block tree_reduce(std::vector<Block>& blocks, std::size_t lo, std::size_t hi, Merge merge) {
  if (hi - lo == 1) return blocks[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(tree_reduce(blocks, lo, mid, merge), tree_reduce(blocks, mid, hi, merge));
}

void check_finite(std::span<const double> obs, std::size_t index) {
  for (double v : obs) {
    if (!std::isfinite(v)) {
      throw std::domain_error("non-finite observation at sample " + std::to_string(index));
    }
  }
}

Block run_plain_block(std::uint64_t key, std::size_t begin, std::size_t end, int width,
                      const SampleFn& fn) {
  Block b;
  b.first = Vector::Zero(width);
  b.second = Matrix::Zero(width, width);
  Vector x(width);
  Vector delta(width);
  for (std::size_t i = begin; i < end; ++i) {
    CounterRng rng(key, i);
    fn(rng, std::span<double>(x.data(), static_cast<std::size_t>(width)));
    check_finite(std::span<const double>(x.data(), static_cast<std::size_t>(width)), i);
    b.count += 1.0;
    for (int r = 0; r < width; ++r) {
      delta[r] = x[r] - b.first[r];
      b.first[r] += delta[r] / b.count;
    }
    for (int r = 0; r < width; ++r)
      for (int c = 0; c < width; ++c) b.second(r, c) += delta[r] * (x[c] - b.first[c]);
  }
  return b;
}

Block run_stratified_block(std::uint64_t key, std::size_t begin, std::size_t end, int width,
                           std::size_t strata, const SampleFn& fn) {
  Block b;
  b.first = Vector::Zero(width);
  b.second = Matrix::Zero(width, width);
  Vector x1(width);
  Vector x2(width);
  const double w = 1.0 / static_cast<double>(strata);
  for (std::size_t i = begin; i < end; i += 2) {
    const std::size_t h = i / 2;
    const double lo = static_cast<double>(h) * w;
    CounterRng r1(key, i);
    r1.stratify_next(lo, w);
    fn(r1, std::span<double>(x1.data(), static_cast<std::size_t>(width)));
    check_finite(std::span<const double>(x1.data(), static_cast<std::size_t>(width)), i);
    CounterRng r2(key, i + 1);
    r2.stratify_next(lo, w);
    fn(r2, std::span<double>(x2.data(), static_cast<std::size_t>(width)));
    check_finite(std::span<const double>(x2.data(), static_cast<std::size_t>(width)), i + 1);
    b.count += 1.0;
    for (int r = 0; r < width; ++r) {
      b.first[r] += 0.5 * (x1[r] + x2[r]);
      for (int c = 0; c < width; ++c) b.second(r, c) += 0.25 * (x1[r] - x2[r]) * (x1[c] - x2[c]);
    }
  }
  return b;
}

}  // namespace

MeanEstimate monte_carlo_mean(const SamplingPlan& plan, int width, const SampleFn& fn) {
  if (width < 1) throw std::invalid_argument("monte_carlo_mean: width must be positive");
  const std::size_t n = plan.samples;
  const bool stratified = plan.sampling == Sampling::kStratified;
  if (n < 2) throw std::invalid_argument("monte_carlo_mean: need at least 2 samples");
  if (stratified && n % 2 != 0) {
    throw std::invalid_argument("stratified sampling needs an even sample count");
  }
  const std::uint64_t key = derive_stream(plan.seed, plan.stream);
  const std::size_t strata = n / 2;
  const std::size_t num_blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Block> blocks(num_blocks);

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * kBlockSize;
    const std::size_t end = std::min(n, begin + kBlockSize);
    blocks[b] = stratified ? run_stratified_block(key, begin, end, width, strata, fn)
                           : run_plain_block(key, begin, end, width, fn);
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(plan.workers, static_cast<unsigned>(num_blocks)));
  if (workers == 1) {
    for (std::size_t b = 0; b < num_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < num_blocks; b = next++) {
          try {
            run_block(b);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  MeanEstimate est;
  est.samples = n;
  if (stratified) {
    const Block total = tree_reduce(blocks, 0, num_blocks, merge_sums);
    const double h = total.count;
    est.mean = total.first / h;
    est.covariance = total.second / (h * h);
  } else {
    const Block total = tree_reduce(blocks, 0, num_blocks, merge_plain);
    est.mean = total.first;
    est.covariance = total.second / (total.count * (total.count - 1.0));
  }
  return est;
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t mid = values.size() / 2;
  return pairwise_sum(values.first(mid)) + pairwise_sum(values.subspan(mid));
}

}  // namespace dferr
