#include "dferr/error_quantity.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dferr {

bool is_psd(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) return false;
  const double trace = m.diagonal().cwiseAbs().sum();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol * std::max(trace, 1e-300);
}

ErrorQuantity::ErrorQuantity(Vector value, Vector bias, Matrix gamma, double scale)
    : value_(std::move(value)), bias_(std::move(bias)), gamma_(std::move(gamma)), scale_(scale) {
  const auto d = value_.size();
  if (d < 1) throw std::invalid_argument("error quantity needs dimension >= 1");
  if (bias_.size() != d || gamma_.rows() != d || gamma_.cols() != d) {
    throw std::invalid_argument("error quantity: value, bias and gamma dimensions disagree");
  }
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw std::invalid_argument("error quantity: scale must be positive");
  }
  if (!is_psd(gamma_)) {
    throw std::invalid_argument("error quantity: gamma must be symmetric positive semidefinite");
  }
}

ErrorQuantity ErrorQuantity::scalar(double value, double bias, double gamma, double scale) {
  return ErrorQuantity(Vector::Constant(1, value), Vector::Constant(1, bias),
                       Matrix::Constant(1, 1, gamma), scale);
}

namespace {

std::vector<Jet2> jets_at(const ErrorQuantity& e, std::span<const TestFunction> f,
                          bool second_order) {
  if (f.empty()) throw std::invalid_argument("propagation needs at least one function");
  std::vector<Jet2> jets;
  jets.reserve(f.size());
  for (const auto& fi : f) {
    if (fi.dimension() != e.dim()) {
      throw std::invalid_argument("propagation: function of dimension " +
                                  std::to_string(fi.dimension()) + " applied to a quantity of dimension " +
                                  std::to_string(e.dim()));
    }
    jets.push_back(fi.jet(e.value(), second_order));
  }
  return jets;
}

}  // namespace

ErrorQuantity propagate_weak(const ErrorQuantity& e, std::span<const TestFunction> f) {
  const auto jets = jets_at(e, f, false);
  const int q = static_cast<int>(jets.size());
  Vector value(q);
  Vector bias(q);
  for (int i = 0; i < q; ++i) {
    value[i] = jets[i].value();
    bias[i] = jets[i].gradient().dot(e.bias());
  }
  return ErrorQuantity(std::move(value), std::move(bias), Matrix::Zero(q, q), e.scale());
}

ErrorQuantity propagate_weak(const ErrorQuantity& e, const TestFunction& f) {
  return propagate_weak(e, std::span<const TestFunction>(&f, 1));
}

ErrorQuantity propagate_strong(const ErrorQuantity& e, std::span<const TestFunction> f) {
  const auto jets = jets_at(e, f, true);
  const int q = static_cast<int>(jets.size());
  Vector value(q);
  Vector bias(q);
  Matrix gamma(q, q);
  for (int i = 0; i < q; ++i) {
    value[i] = jets[i].value();
    bias[i] = jets[i].gradient().dot(e.bias()) +
              0.5 * (jets[i].hessian().cwiseProduct(e.gamma())).sum();
  }
  for (int i = 0; i < q; ++i) {
    const Vector gi = e.gamma() * jets[i].gradient();
    for (int j = i; j < q; ++j) {
      gamma(i, j) = jets[j].gradient().dot(gi);
      gamma(j, i) = gamma(i, j);
    }
  }
  // Rounding can push a rank-deficient output a hair below zero.
  for (int i = 0; i < q; ++i) gamma(i, i) = std::max(gamma(i, i), 0.0);
  return ErrorQuantity(std::move(value), std::move(bias), std::move(gamma), e.scale());
}

ErrorQuantity propagate_strong(const ErrorQuantity& e, const TestFunction& f) {
  return propagate_strong(e, std::span<const TestFunction>(&f, 1));
}

}  // namespace dferr
