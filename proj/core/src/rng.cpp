#include "dferr/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>

namespace dferr {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_stream(std::uint64_t root_seed, std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(mix64(root_seed + kGolden) ^ h);
}

CounterRng::CounterRng(std::uint64_t key, std::uint64_t counter)
    : state_(mix64(key ^ mix64(counter + kGolden))) {}

CounterRng::result_type CounterRng::operator()() {
  state_ += kGolden;
  return mix64(state_);
}

double CounterRng::uniform() {
  const double u = (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  if (stratified_) {
    stratified_ = false;
    return std::min(stratum_lo_ + stratum_width_ * u, 1.0 - 0x1.0p-53);
  }
  return u;
}

double CounterRng::normal() { return normal_quantile(uniform()); }

void CounterRng::stratify_next(double lo, double width) {
  stratum_lo_ = lo;
  stratum_width_ = width;
  stratified_ = true;
}

double normal_quantile(double u) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace dferr
