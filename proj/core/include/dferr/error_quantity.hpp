#pragma once

#include "dferr/jet2.hpp"
#include "dferr/test_function.hpp"

#include <span>

namespace dferr {

/// Value of a quantity together with the asymptotic bias and square field of
/// its error, both normalized by a common scale.
class ErrorQuantity {
 public:
  /// Throws if gamma is not symmetric positive semidefinite or scale <= 0.
  ErrorQuantity(Vector value, Vector bias, Matrix gamma, double scale = 1.0);

  /// Scalar convenience constructor.
  static ErrorQuantity scalar(double value, double bias, double gamma, double scale = 1.0);

  int dim() const { return static_cast<int>(value_.size()); }
  const Vector& value() const { return value_; }
  const Vector& bias() const { return bias_; }
  const Matrix& gamma() const { return gamma_; }
  double scale() const { return scale_; }

 private:
  Vector value_;
  Vector bias_;
  Matrix gamma_;
  double scale_;
};

/// True when m is symmetric and its smallest eigenvalue is >= -tol * trace.
bool is_psd(const Matrix& m, double tol = 1e-12);

/// First-order propagation: the bias moves with the gradient, the square
/// field is dropped.
ErrorQuantity propagate_weak(const ErrorQuantity& e, std::span<const TestFunction> f);
ErrorQuantity propagate_weak(const ErrorQuantity& e, const TestFunction& f);

/// Second-order propagation: bias' = grad f . bias + 1/2 tr(Hess f gamma),
/// gamma'_ij = grad f_i . gamma grad f_j.
ErrorQuantity propagate_strong(const ErrorQuantity& e, std::span<const TestFunction> f);
ErrorQuantity propagate_strong(const ErrorQuantity& e, const TestFunction& f);

}  // namespace dferr
