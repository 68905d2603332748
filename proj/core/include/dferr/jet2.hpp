#pragma once

#include <Eigen/Dense>

#include <span>

namespace dferr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest dimension supported by the dense jet representation.
inline constexpr int kMaxJetDimension = 16;

/// Value, gradient and Hessian of a scalar function at a point.
///
/// A jet built in first-order mode carries no Hessian; arithmetic mixing the
/// two modes degrades to first order. The Hessian is kept exactly symmetric.
class Jet2 {
 public:
  Jet2(double value, Vector gradient, Matrix hessian);
  /// First-order jet (no Hessian).
  Jet2(double value, Vector gradient);

  static Jet2 constant(double c, int dim, bool second_order = true);
  static Jet2 variable(double x, int index, int dim, bool second_order = true);

  int dim() const { return static_cast<int>(gradient_.size()); }
  double value() const { return value_; }
  const Vector& gradient() const { return gradient_; }
  const Matrix& hessian() const;
  bool has_hessian() const { return has_hessian_; }

  Jet2& operator+=(const Jet2& rhs);
  Jet2& operator-=(const Jet2& rhs);
  Jet2& operator*=(const Jet2& rhs);
  Jet2& operator+=(double c);
  Jet2& operator*=(double c);

  /// Applies a scalar function g given g(v), g'(v), g''(v) at v = value().
  Jet2 apply(double g, double dg, double d2g) const;

 private:
  void check_same_dim(const Jet2& rhs) const;
  void symmetrize();

  double value_ = 0.0;
  Vector gradient_;
  Matrix hessian_;
  bool has_hessian_ = true;
};

Jet2 operator+(Jet2 a, const Jet2& b);
Jet2 operator-(Jet2 a, const Jet2& b);
Jet2 operator*(Jet2 a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator+(Jet2 a, double c);
Jet2 operator*(Jet2 a, double c);
Jet2 operator*(double c, Jet2 a);

inline Jet2 jet_add(const Jet2& a, const Jet2& b) { return a + b; }
inline Jet2 jet_mul(const Jet2& a, const Jet2& b) { return a * b; }

Jet2 sin(const Jet2& a);
Jet2 cos(const Jet2& a);
Jet2 exp(const Jet2& a);
Jet2 sq(const Jet2& a);
Jet2 smoothstep(const Jet2& a);

/// Scalar C^2 step: 0 below 0, 1 above 1, 6t^5 - 15t^4 + 10t^3 in between.
double smoothstep(double t);

/// Second-order chain rule. `outer` is the jet of F at u = (inner[k].value()),
/// taken with respect to u (dimension p = inner.size()); every inner jet lives
/// in the same dimension d. Returns the jet of F(inner...) in dimension d.
Jet2 chain(const Jet2& outer, std::span<const Jet2> inner);

/// Componentwise closeness used by tests and tools; relative to max(1, |x|).
bool approx_equal(const Jet2& a, const Jet2& b, double rel_tol);

}  // namespace dferr
