#pragma once

// Independent reference computations for the tests: plain composite
// Simpson quadrature, brute-force enumeration and closed forms.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals = 20000) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// E[f(Y)] for Y ~ N(0, 1).
inline double normal_expectation(const std::function<double(double)>& f) {
  return simpson([&](double x) { return f(x) * normal_pdf(x); }, -12.0, 12.0, 40000);
}

/// E[f(Y)] for Y ~ U[a, b].
inline double uniform_expectation(const std::function<double(double)>& f, double a = 0.0, double b = 1.0) {
  return simpson(f, a, b) / (b - a);
}

/// E[v_n] for the urn by walking every sequence of n draws.
inline double polya_enumerated_variance(int n) {
  double total = 0.0;
  std::function<void(int, int, double)> walk = [&](int k, int whites, double prob) {
    if (k == n) {
      const double x = static_cast<double>(whites) / (n + 2);
      total += prob * x * (1.0 - x) / (n + 3);
      return;
    }
    const double p_white = static_cast<double>(whites) / (k + 2);
    walk(k + 1, whites + 1, prob * p_white);
    walk(k + 1, whites, prob * (1.0 - p_white));
  };
  walk(0, 1, 1.0);
  return total;
}

/// E[(X_{n+m} - X_n)^2 | W_n = w] by dynamic programming over the white
/// count between steps n and n + m.
inline double polya_continuation_second_moment(int n, int w, int m) {
  std::vector<double> p(static_cast<std::size_t>(w + m + 1), 0.0);
  p[static_cast<std::size_t>(w)] = 1.0;
  for (int k = n; k < n + m; ++k) {
    std::vector<double> next(p.size(), 0.0);
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      if (p[j] == 0.0) continue;
      const double pw = static_cast<double>(j) / (k + 2);
      next[j + 1] += p[j] * pw;
      next[j] += p[j] * (1.0 - pw);
    }
    p = std::move(next);
  }
  const double xn = static_cast<double>(w) / (n + 2);
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double d = static_cast<double>(j) / (n + m + 2) - xn;
    s += p[j] * d * d;
  }
  return s;
}

/// Random polynomial in x0..x{dim-1} with at most `terms` monomials of
/// degree <= 3, printed in the expression grammar.
inline std::string random_polynomial(std::mt19937_64& rng, int dim, int terms = 4) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> degree(0, 3);
  std::uniform_int_distribution<int> var(0, dim - 1);
  std::string out;
  for (int t = 0; t < terms; ++t) {
    if (!out.empty()) out += " + ";
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%.17g)", coef(rng));
    out += buf;
    const int deg = degree(rng);
    for (int k = 0; k < deg; ++k) out += "*x" + std::to_string(var(rng));
  }
  return out;
}

}  // namespace oracle
