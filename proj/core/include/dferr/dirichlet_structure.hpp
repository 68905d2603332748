#pragma once

#include "dferr/jet2.hpp"
#include "dferr/law.hpp"
#include "dferr/rng.hpp"
#include "dferr/test_function.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dferr {

using MatrixField = std::function<Matrix(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;
using PointSampler = std::function<Vector(CounterRng&)>;

/// Second-order error structure on R^d.
///
/// The symmetric generator is A~[phi] = 1/2 sum diffusion_ij phi''_ij +
/// drift . grad phi, so Gamma[phi] = grad phi' diffusion grad phi. The
/// theoretical generator replaces `drift` with `theoretical_drift`.
struct DirichletStructure {
  int dim = 1;
  MatrixField diffusion;
  /// First-order coefficients of the symmetric generator; empty when the
  /// law's log-derivative terms are unknown.
  VectorField drift;
  /// First-order coefficients of the theoretical generator (conditional
  /// mean of the first-order perturbation).
  VectorField theoretical_drift;
  PointSampler measure;
};

/// A second-order differential operator evaluated from the jet of its
/// argument at y.
using Generator = std::function<double(const Jet2& jet, const Vector& y)>;

Generator symmetric_generator(const DirichletStructure& s);
Generator theoretical_generator(const DirichletStructure& s);

/// Gamma[phi](y) = A[phi^2](y) - 2 phi(y) A[phi](y).
double square_field_from_generator(const Generator& a, const TestFunction& phi, const Vector& y);

/// Gamma[phi, chi](y) = grad phi' diffusion grad chi.
double square_field(const DirichletStructure& s, const TestFunction& phi, const TestFunction& chi,
                    const Vector& y);
double square_field(const DirichletStructure& s, const TestFunction& phi, const Vector& y);

/// Values of the four bias operators applied to phi at y. Only the
/// theoretical one is available when the structure has no drift.
struct OperatorValues {
  double theoretical = 0.0;
  std::optional<double> symmetric;
  std::optional<double> practical;
  std::optional<double> singular;
};

OperatorValues scheme_operators(const DirichletStructure& s, const TestFunction& phi,
                                const Vector& y);
OperatorValues scheme_operators(const DirichletStructure& s, const Jet2& phi, const Vector& y);

/// Expression-backed structure description, the serializable form.
struct StructureSpec {
  int dim = 1;
  std::vector<std::vector<std::string>> diffusion;
  std::vector<std::string> drift;
  std::vector<std::string> theoretical_drift;
  Law measure = Law::uniform(0.0, 1.0);

  DirichletStructure build() const;
};

/// Graduation error structure for a law: diffusion I/12, theoretical drift 0
/// and symmetric drift score/24 per coordinate.
DirichletStructure graduation_structure(const Law& law);

}  // namespace dferr
