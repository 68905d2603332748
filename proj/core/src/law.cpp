#include "dferr/law.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dferr {

namespace {

constexpr int kTableCells = 1 << 14;

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxJetDimension) {
    throw std::invalid_argument("law dimension out of range: " + std::to_string(dim));
  }
}

}  // namespace

Law Law::uniform(double lo, double hi, int dim) {
  check_dim(dim);
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw std::invalid_argument("uniform law needs finite lo < hi");
  }
  Law l;
  l.kind_ = Kind::kUniform;
  l.dim_ = dim;
  l.a_ = l.lo_ = lo;
  l.b_ = l.hi_ = hi;
  return l;
}

Law Law::normal(double mean, double sd, int dim) {
  check_dim(dim);
  if (!(std::isfinite(mean) && sd > 0.0 && std::isfinite(sd))) {
    throw std::invalid_argument("normal law needs finite mean and sd > 0");
  }
  Law l;
  l.kind_ = Kind::kNormal;
  l.dim_ = dim;
  l.a_ = mean;
  l.b_ = sd;
  l.lo_ = -std::numeric_limits<double>::infinity();
  l.hi_ = std::numeric_limits<double>::infinity();
  return l;
}

Law Law::custom(TestFunction density, double lo, double hi, int dim) {
  check_dim(dim);
  if (density.dimension() != 1) throw std::invalid_argument("custom density must be a function of x0");
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw std::invalid_argument("custom law needs finite lo < hi");
  }
  // Cumulative table by Simpson's rule per cell; inversion interpolates
  // linearly inside a cell.
  auto table = std::make_shared<Table>();
  table->x.resize(kTableCells + 1);
  table->cdf.resize(kTableCells + 1);
  const double h = (hi - lo) / kTableCells;
  double acc = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  table->x[0] = lo;
  table->cdf[0] = 0.0;
  for (int k = 0; k < kTableCells; ++k) {
    const double x0 = lo + k * h;
    const double xm = x0 + 0.5 * h;
    const double x1 = x0 + h;
    const double f0 = density(std::span<const double>(&x0, 1));
    const double fm = density(std::span<const double>(&xm, 1));
    const double f1 = density(std::span<const double>(&x1, 1));
    if (!(f0 >= 0.0 && fm >= 0.0 && f1 >= 0.0) || !std::isfinite(f0 + fm + f1)) {
      throw std::invalid_argument("custom density must be finite and non-negative on its support");
    }
    acc += h / 6.0 * (f0 + 4.0 * fm + f1);
    m1 += h / 6.0 * (x0 * f0 + 4.0 * xm * fm + x1 * f1);
    m2 += h / 6.0 * (x0 * x0 * f0 + 4.0 * xm * xm * fm + x1 * x1 * f1);
    table->x[k + 1] = x1;
    table->cdf[k + 1] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("custom density integrates to zero");
  for (double& c : table->cdf) c /= acc;
  table->norm = acc;
  table->mean = m1 / acc;
  table->variance = m2 / acc - table->mean * table->mean;

  Law l;
  l.kind_ = Kind::kCustom;
  l.dim_ = dim;
  l.a_ = l.lo_ = lo;
  l.b_ = l.hi_ = hi;
  l.density_ = std::move(density);
  l.table_ = std::move(table);
  return l;
}

Law Law::with_dimension(int dim) const {
  check_dim(dim);
  Law l = *this;
  l.dim_ = dim;
  return l;
}

Vector Law::sample(CounterRng& rng) const {
  Vector y(dim_);
  for (int i = 0; i < dim_; ++i) y[i] = quantile(rng.uniform());
  return y;
}

double Law::quantile(double u) const {
  switch (kind_) {
    case Kind::kUniform:
      return a_ + (b_ - a_) * u;
    case Kind::kNormal:
      return a_ + b_ * normal_quantile(u);
    case Kind::kCustom: {
      const auto& c = table_->cdf;
      auto it = std::upper_bound(c.begin(), c.end(), u);
      std::size_t k = static_cast<std::size_t>(std::distance(c.begin(), it));
      k = std::clamp<std::size_t>(k, 1, c.size() - 1);
      const double span = c[k] - c[k - 1];
      const double t = span > 0.0 ? (u - c[k - 1]) / span : 0.5;
      return table_->x[k - 1] + t * (table_->x[k] - table_->x[k - 1]);
    }
  }
  throw std::logic_error("unknown law kind");
}

double Law::density(double x) const {
  switch (kind_) {
    case Kind::kUniform:
      return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
    case Kind::kNormal: {
      const double z = (x - a_) / b_;
      return std::exp(-0.5 * z * z) / (b_ * std::sqrt(2.0 * std::numbers::pi));
    }
    case Kind::kCustom:
      if (x < lo_ || x > hi_) return 0.0;
      return (*density_)(std::span<const double>(&x, 1)) / table_->norm;
  }
  throw std::logic_error("unknown law kind");
}

double Law::score(double x) const {
  switch (kind_) {
    case Kind::kUniform:
      return 0.0;
    case Kind::kNormal:
      return -(x - a_) / (b_ * b_);
    case Kind::kCustom: {
      const Jet2 j = density_->jet(std::span<const double>(&x, 1), false);
      if (!(j.value() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
      return j.gradient()[0] / j.value();
    }
  }
  throw std::logic_error("unknown law kind");
}

double Law::mean() const {
  switch (kind_) {
    case Kind::kUniform:
      return 0.5 * (a_ + b_);
    case Kind::kNormal:
      return a_;
    case Kind::kCustom:
      return table_->mean;
  }
  throw std::logic_error("unknown law kind");
}

double Law::variance() const {
  switch (kind_) {
    case Kind::kUniform:
      return (b_ - a_) * (b_ - a_) / 12.0;
    case Kind::kNormal:
      return b_ * b_;
    case Kind::kCustom:
      return table_->variance;
  }
  throw std::logic_error("unknown law kind");
}

std::string Law::describe() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  switch (kind_) {
    case Kind::kUniform:
      os << "uniform(" << a_ << "," << b_ << ")";
      break;
    case Kind::kNormal:
      os << "normal(" << a_ << "," << b_ << ")";
      break;
    case Kind::kCustom:
      os << "custom(" << density_->name() << " on " << lo_ << "," << hi_ << ")";
      break;
  }
  if (dim_ > 1) os << "^" << dim_;
  return os.str();
}

double marginal_expectation(const Law& law, const std::function<double(double)>& f, int panels) {
  if (panels < 1) throw std::invalid_argument("marginal_expectation: panels must be positive");
  double lo = law.lower();
  double hi = law.upper();
  if (law.kind() == Law::Kind::kNormal) {
    lo = law.param_a() - 12.0 * law.param_b();
    hi = law.param_a() + 12.0 * law.param_b();
  }
  const double h = (hi - lo) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double a = lo + k * h;
    const double b = k + 1 == panels ? hi : a + h;
    total += boost::math::quadrature::gauss<double, 20>::integrate(
        [&](double x) { return f(x) * law.density(x); }, a, b);
  }
  return total;
}

}  // namespace dferr
