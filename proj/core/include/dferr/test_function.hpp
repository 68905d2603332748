#pragma once

#include "dferr/jet2.hpp"

#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dferr {

namespace detail {
struct Node;
}

/// Declared sup-norm bounds of a test function and its first two derivatives
/// (gradient and Hessian bounds are on the largest absolute entry).
struct Bounds {
  double value = std::numeric_limits<double>::infinity();
  double gradient = std::numeric_limits<double>::infinity();
  double hessian = std::numeric_limits<double>::infinity();

  bool finite() const;
};

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// An element of the algebra of bounded C^2 test functions on R^d.
///
/// Built from constants, coordinates, + - *, sin, cos, exp, sq, a C^2
/// smooth step and composition. Immutable; copies share the expression tree.
class TestFunction {
 public:
  static TestFunction constant(double c, int dim);
  static TestFunction coordinate(int index, int dim);

  /// Parses `x0..x{d-1}`, numeric literals, `+ - *`, `sin cos exp sq` and
  /// parentheses. Throws ParseError.
  static TestFunction parse(std::string_view text, int dim);

  int dimension() const { return dim_; }
  double operator()(std::span<const double> x) const;
  double operator()(const Vector& x) const;
  Jet2 jet(std::span<const double> x, bool second_order = true) const;
  Jet2 jet(const Vector& x, bool second_order = true) const;

  const Bounds& bounds() const { return bounds_; }
  TestFunction with_bounds(Bounds b) const;
  bool in_cb2() const { return bounds_.finite(); }

  /// Label used in reports; defaults to the printed expression.
  const std::string& name() const { return name_; }
  TestFunction named(std::string name) const;
  std::string expression() const;

  /// F(inner[0], ..., inner[p-1]) where this function is F on R^p and every
  /// inner function lives on a common R^d.
  TestFunction compose(std::span<const TestFunction> inner) const;

  friend TestFunction operator+(const TestFunction& a, const TestFunction& b);
  friend TestFunction operator-(const TestFunction& a, const TestFunction& b);
  friend TestFunction operator*(const TestFunction& a, const TestFunction& b);
  friend TestFunction operator-(const TestFunction& a);
  friend TestFunction operator+(const TestFunction& a, double c);
  friend TestFunction operator*(double c, const TestFunction& a);
  friend TestFunction sin(const TestFunction& a);
  friend TestFunction cos(const TestFunction& a);
  friend TestFunction exp(const TestFunction& a);
  friend TestFunction sq(const TestFunction& a);
  friend TestFunction smoothstep(const TestFunction& a);

 private:
  TestFunction(std::shared_ptr<const detail::Node> root, int dim);

  std::shared_ptr<const detail::Node> root_;
  int dim_ = 1;
  Bounds bounds_;
  std::string name_;
};

/// Jet of f at x. Throws on dimension mismatch.
Jet2 eval(const TestFunction& f, std::span<const double> x);

/// Jet of F(inner...) from the jets of the inner functions at a common point.
Jet2 compose(const TestFunction& outer, std::span<const Jet2> inner);

/// Product of f with a C^2 window equal to 1 on [lo, hi]^d and vanishing
/// outside [lo - margin, hi + margin]^d.
TestFunction window(const TestFunction& f, double lo, double hi, double margin);

/// Bounds found by scanning a regular grid on [lo, hi]^d, inflated by
/// `inflation`. Only meaningful for functions supported in that box.
Bounds scan_bounds(const TestFunction& f, double lo, double hi, int points_per_axis = 401,
                   double inflation = 1.05);

/// `window(f, lo, hi, margin)` with bounds scanned over its support.
TestFunction windowed(const TestFunction& f, double lo, double hi, double margin);

}  // namespace dferr
