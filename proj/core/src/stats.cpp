#include "dferr/stats.hpp"

#include "dferr/rng.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dferr {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples)
    : sorted_(std::move(samples)) {
  for (double x : sorted_) {
    if (std::isnan(x)) throw std::invalid_argument("empirical distribution: NaN sample");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDistribution::cdf(double x) const {
  if (sorted_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double kolmogorov_pvalue(double lambda) {
  if (lambda < 0.05) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double kolmogorov_critical(double level, double n) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("kolmogorov_critical: level must be in (0, 1)");
  if (!(n > 0.0)) throw std::invalid_argument("kolmogorov_critical: sample size must be positive");
  double lo = 0.05, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_pvalue(mid) > level) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(n);
}

KsResult ks_uniform(const EmpiricalDistribution& samples) {
  const auto& x = samples.sorted();
  if (x.empty()) throw std::invalid_argument("ks_uniform: empty sample");
  if (x.front() < 0.0 || x.back() > 1.0) throw std::invalid_argument("ks_uniform: sample outside [0, 1]");
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - x[i];
    const double below = x[i] - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return {d, kolmogorov_pvalue(std::sqrt(n) * d)};
}

KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  const auto& x = a.sorted();
  const auto& y = b.sorted();
  if (x.empty() || y.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double effective = n * m / (n + m);
  return {d, kolmogorov_pvalue(std::sqrt(effective) * d)};
}

double chi2_critical(double level, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_critical: dof must be positive");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("chi2_critical: level must be in (0, 1)");
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, level));
}

namespace {

/// Merges row (or column) `k` of `m` into its smaller neighbour.
Matrix merge_rows(const Matrix& m, int k) {
  const int r = static_cast<int>(m.rows());
  int into;
  if (k == 0) {
    into = 1;
  } else if (k == r - 1) {
    into = r - 2;
  } else {
    into = m.row(k - 1).sum() <= m.row(k + 1).sum() ? k - 1 : k + 1;
  }
  Matrix out(r - 1, m.cols());
  int row = 0;
  for (int i = 0; i < r; ++i) {
    if (i == k) continue;
    out.row(row) = m.row(i);
    if (i == into) out.row(row) += m.row(k);
    ++row;
  }
  return out;
}

Matrix drop_empty(const Matrix& m) {
  std::vector<int> rows, cols;
  for (int i = 0; i < m.rows(); ++i)
    if (m.row(i).sum() > 0.0) rows.push_back(i);
  for (int j = 0; j < m.cols(); ++j)
    if (m.col(j).sum() > 0.0) cols.push_back(j);
  Matrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<int>(i), static_cast<int>(j)) = m(rows[i], cols[j]);
  return out;
}

std::vector<int> equal_probability_bins(std::span<const double> x, int bins) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) {
    edges.push_back(sorted[sorted.size() * static_cast<std::size_t>(k) / static_cast<std::size_t>(bins)]);
  }
  std::vector<int> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x[i]) - edges.begin());
  }
  return out;
}

}  // namespace

Chi2Result chi2_from_table(const Matrix& counts, double min_expected) {
  if (counts.size() == 0) throw std::invalid_argument("chi2: empty table");
  if ((counts.array() < 0.0).any()) throw std::invalid_argument("chi2: negative count");
  Matrix m = drop_empty(counts);
  if (m.size() == 0) throw std::invalid_argument("chi2: table has no observations");
  const double total = m.sum();
  while (m.rows() > 1 && m.cols() > 1) {
    const Vector rs = m.rowwise().sum();
    const Vector cs = m.colwise().sum().transpose();
    int ri, ci;
    const double rmin = rs.minCoeff(&ri);
    const double cmin = cs.minCoeff(&ci);
    if (rmin * cmin / total >= min_expected) break;
    if (rmin <= cmin) {
      m = merge_rows(m, ri);
    } else {
      m = merge_rows(m.transpose(), ci).transpose();
    }
  }
  Chi2Result r;
  if (m.rows() < 2 || m.cols() < 2) return r;
  const Vector rs = m.rowwise().sum();
  const Vector cs = m.colwise().sum().transpose();
  double stat = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      const double e = rs[i] * cs[j] / total;
      const double diff = m(i, j) - e;
      stat += diff * diff / e;
    }
  }
  r.statistic = stat;
  r.dof = static_cast<int>((m.rows() - 1) * (m.cols() - 1));
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  return r;
}

Chi2Result independence_chi2(std::span<const double> v, std::span<const double> y, int bins_v,
                             int bins_y) {
  if (v.size() != y.size()) throw std::invalid_argument("independence_chi2: samples differ in length");
  if (v.empty()) throw std::invalid_argument("independence_chi2: empty sample");
  if (bins_v < 1 || bins_y < 1) throw std::invalid_argument("independence_chi2: need at least one bin");
  const auto bv = equal_probability_bins(v, bins_v);
  const auto by = equal_probability_bins(y, bins_y);
  Matrix table = Matrix::Zero(bins_v, bins_y);
  for (std::size_t i = 0; i < v.size(); ++i) table(bv[i], by[i]) += 1.0;
  return chi2_from_table(table);
}

GraduationResiduals graduation_residuals(const GraduationScheme& scheme, int level,
                                         std::size_t samples, std::uint64_t seed) {
  scheme.check_level(level);
  if (samples == 0) throw std::invalid_argument("graduation_residuals: no samples");
  const int d = scheme.dimension();
  GraduationResiduals r{Matrix(static_cast<int>(samples), d), Matrix(static_cast<int>(samples), d)};
  const std::uint64_t key = derive_stream(seed, "residuals/" + scheme.name() + "/" + std::to_string(level));
  for (std::size_t i = 0; i < samples; ++i) {
    CounterRng rng(key, i);
    const SamplePair p = scheme.sample(level, rng);
    for (int k = 0; k < d; ++k) {
      // n (Y_n - Y) = sawtooth(n Y); this form keeps U inside (0, 1] exactly.
      r.u(static_cast<int>(i), k) = 0.5 + GraduationScheme::sawtooth(level * p.exact[k]);
      r.y(static_cast<int>(i), k) = p.exact[k];
    }
  }
  return r;
}

PsiCompositionResult psi_composition_test(const GraduationScheme& scheme, const PointFunction& psi,
                                          int level, std::size_t samples, std::uint64_t seed,
                                          int coordinate) {
  const int d = scheme.dimension();
  if (coordinate < 0 || coordinate >= d) throw std::invalid_argument("psi_composition_test: bad coordinate");
  const GraduationResiduals res = graduation_residuals(scheme, level, samples, seed);
  std::vector<double> a(samples), b(samples), y(samples);
  const std::uint64_t key = derive_stream(seed, "residuals/uniform-reference");
  std::vector<double> point(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < samples; ++i) {
    for (int k = 0; k < d; ++k) point[static_cast<std::size_t>(k)] = res.u(static_cast<int>(i), k);
    a[i] = psi(point);
    CounterRng rng(key, i);
    for (int k = 0; k < d; ++k) point[static_cast<std::size_t>(k)] = rng.uniform();
    b[i] = psi(point);
    y[i] = res.y(static_cast<int>(i), coordinate);
  }
  PsiCompositionResult r;
  r.samples = samples;
  r.mean_psi = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(samples);
  r.mean_psi_uniform = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(samples);
  r.chi2 = independence_chi2(a, y);
  r.chi2_critical = r.chi2.dof > 0 ? chi2_critical(0.01, r.chi2.dof) : 0.0;
  r.ks = ks_two_sample(EmpiricalDistribution(std::move(a)), EmpiricalDistribution(std::move(b)));
  r.ks_critical = kolmogorov_critical(0.01, static_cast<double>(samples) / 2.0);
  return r;
}

RateFit rate_fit(std::span<const double> levels, std::span<const double> values) {
  if (levels.size() != values.size()) throw std::invalid_argument("rate_fit: length mismatch");
  if (levels.size() < 3) throw std::invalid_argument("rate_fit: at least 3 points are required");
  const std::size_t m = levels.size();
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(levels[i] > 0.0) || !(values[i] > 0.0)) {
      throw std::invalid_argument("rate_fit: levels and values must be positive");
    }
    x[i] = std::log(levels[i]);
    y[i] = std::log(values[i]);
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate_fit: levels must not all be equal");
  RateFit r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    ss_res += e * e;
  }
  r.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return r;
}

}  // namespace dferr
