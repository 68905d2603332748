#include "dferr/jet2.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dferr {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxJetDimension) {
    throw std::invalid_argument("jet dimension must be in [1, " +
                                std::to_string(kMaxJetDimension) + "], got " +
                                std::to_string(dim));
  }
}

}  // namespace

Jet2::Jet2(double value, Vector gradient, Matrix hessian)
    : value_(value), gradient_(std::move(gradient)), hessian_(std::move(hessian)) {
  check_dim(dim());
  if (hessian_.rows() != dim() || hessian_.cols() != dim()) {
    throw std::invalid_argument("jet Hessian must be " + std::to_string(dim()) + "x" +
                                std::to_string(dim()));
  }
  symmetrize();
}

Jet2::Jet2(double value, Vector gradient)
    : value_(value), gradient_(std::move(gradient)), has_hessian_(false) {
  check_dim(dim());
}

Jet2 Jet2::constant(double c, int dim, bool second_order) {
  check_dim(dim);
  if (!second_order) return Jet2(c, Vector::Zero(dim));
  return Jet2(c, Vector::Zero(dim), Matrix::Zero(dim, dim));
}

Jet2 Jet2::variable(double x, int index, int dim, bool second_order) {
  check_dim(dim);
  if (index < 0 || index >= dim) {
    throw std::invalid_argument("variable index " + std::to_string(index) +
                                " out of range for dimension " + std::to_string(dim));
  }
  Vector g = Vector::Zero(dim);
  g[index] = 1.0;
  if (!second_order) return Jet2(x, std::move(g));
  return Jet2(x, std::move(g), Matrix::Zero(dim, dim));
}

const Matrix& Jet2::hessian() const {
  if (!has_hessian_) throw std::logic_error("first-order jet has no Hessian");
  return hessian_;
}

void Jet2::check_same_dim(const Jet2& rhs) const {
  if (dim() != rhs.dim()) {
    throw std::invalid_argument("jet dimension mismatch: " + std::to_string(dim()) +
                                " vs " + std::to_string(rhs.dim()));
  }
}

void Jet2::symmetrize() {
  const int d = dim();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double s = 0.5 * (hessian_(i, j) + hessian_(j, i));
      hessian_(i, j) = s;
      hessian_(j, i) = s;
    }
  }
}

Jet2& Jet2::operator+=(const Jet2& rhs) {
  check_same_dim(rhs);
  value_ += rhs.value_;
  gradient_ += rhs.gradient_;
  if (has_hessian_ && rhs.has_hessian_) {
    hessian_ += rhs.hessian_;
  } else {
    has_hessian_ = false;
    hessian_.resize(0, 0);
  }
  return *this;
}

Jet2& Jet2::operator-=(const Jet2& rhs) {
  check_same_dim(rhs);
  value_ -= rhs.value_;
  gradient_ -= rhs.gradient_;
  if (has_hessian_ && rhs.has_hessian_) {
    hessian_ -= rhs.hessian_;
  } else {
    has_hessian_ = false;
    hessian_.resize(0, 0);
  }
  return *this;
}

Jet2& Jet2::operator*=(const Jet2& rhs) {
  check_same_dim(rhs);
  if (has_hessian_ && rhs.has_hessian_) {
    // (ab)'' = a''b + a'b'^T + b'a'^T + ab''; the cross term is symmetric
    // entry by entry, so no re-symmetrization is needed. Grouping keeps the
    // product bitwise commutative.
    const Matrix cross = gradient_ * rhs.gradient_.transpose();
    const Matrix outer = cross + cross.transpose();
    hessian_ = (hessian_ * rhs.value_ + value_ * rhs.hessian_) + outer;
  } else {
    has_hessian_ = false;
    hessian_.resize(0, 0);
  }
  gradient_ = gradient_ * rhs.value_ + value_ * rhs.gradient_;
  value_ *= rhs.value_;
  return *this;
}

Jet2& Jet2::operator+=(double c) {
  value_ += c;
  return *this;
}

Jet2& Jet2::operator*=(double c) {
  value_ *= c;
  gradient_ *= c;
  if (has_hessian_) hessian_ *= c;
  return *this;
}

Jet2 Jet2::apply(double g, double dg, double d2g) const {
  if (!has_hessian_) return Jet2(g, dg * gradient_);
  Matrix h = d2g * (gradient_ * gradient_.transpose()) + dg * hessian_;
  return Jet2(g, dg * gradient_, std::move(h));
}

Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
Jet2 operator*(Jet2 a, const Jet2& b) { return a *= b; }
Jet2 operator-(const Jet2& a) { return a * -1.0; }
Jet2 operator+(Jet2 a, double c) { return a += c; }
Jet2 operator*(Jet2 a, double c) { return a *= c; }
Jet2 operator*(double c, Jet2 a) { return a *= c; }

Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return a.apply(s, c, -s);
}

Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return a.apply(c, -s, -c);
}

Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.value());
  return a.apply(e, e, e);
}

Jet2 sq(const Jet2& a) {
  const double v = a.value();
  return a.apply(v * v, 2.0 * v, 2.0);
}

double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

Jet2 smoothstep(const Jet2& a) {
  const double t = a.value();
  if (t <= 0.0) return a.apply(0.0, 0.0, 0.0);
  if (t >= 1.0) return a.apply(1.0, 0.0, 0.0);
  const double t2 = t * t;
  const double g = t2 * t * (t * (6.0 * t - 15.0) + 10.0);
  const double dg = 30.0 * t2 * (t - 1.0) * (t - 1.0);
  const double d2g = 60.0 * t * (t - 1.0) * (2.0 * t - 1.0);
  return a.apply(g, dg, d2g);
}

Jet2 chain(const Jet2& outer, std::span<const Jet2> inner) {
  const int p = static_cast<int>(inner.size());
  if (p == 0) throw std::invalid_argument("chain: no inner jets");
  if (outer.dim() != p) {
    throw std::invalid_argument("chain: outer jet has dimension " +
                                std::to_string(outer.dim()) + " but " + std::to_string(p) +
                                " inner jets were given");
  }
  const int d = inner[0].dim();
  bool second = outer.has_hessian();
  for (const Jet2& j : inner) {
    if (j.dim() != d) throw std::invalid_argument("chain: inner jets differ in dimension");
    second = second && j.has_hessian();
  }
  Matrix jac(p, d);
  for (int k = 0; k < p; ++k) jac.row(k) = inner[k].gradient().transpose();
  Vector grad = jac.transpose() * outer.gradient();
  if (!second) return Jet2(outer.value(), std::move(grad));
  Matrix hess = jac.transpose() * outer.hessian() * jac;
  for (int k = 0; k < p; ++k) hess += outer.gradient()[k] * inner[k].hessian();
  return Jet2(outer.value(), std::move(grad), std::move(hess));
}

bool approx_equal(const Jet2& a, const Jet2& b, double rel_tol) {
  if (a.dim() != b.dim() || a.has_hessian() != b.has_hessian()) return false;
  auto close = [rel_tol](double x, double y) {
    return std::abs(x - y) <= rel_tol * std::max({1.0, std::abs(x), std::abs(y)});
  };
  if (!close(a.value(), b.value())) return false;
  for (int i = 0; i < a.dim(); ++i) {
    if (!close(a.gradient()[i], b.gradient()[i])) return false;
  }
  if (a.has_hessian()) {
    for (int i = 0; i < a.dim(); ++i)
      for (int j = 0; j < a.dim(); ++j)
        if (!close(a.hessian()(i, j), b.hessian()(i, j))) return false;
  }
  return true;
}

}  // namespace dferr
