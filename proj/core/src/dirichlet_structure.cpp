#include "dferr/dirichlet_structure.hpp"

#include <stdexcept>

namespace dferr {

namespace {

double second_order_part(const DirichletStructure& s, const Jet2& jet, const Vector& y) {
  const Matrix theta = s.diffusion(y);
  return 0.5 * jet.hessian().cwiseProduct(theta).sum();
}

void check_dim(const DirichletStructure& s, int dim) {
  if (dim != s.dim) {
    throw std::invalid_argument("structure of dimension " + std::to_string(s.dim) +
                                " applied to a function of dimension " + std::to_string(dim));
  }
}

}  // namespace

Generator symmetric_generator(const DirichletStructure& s) {
  if (!s.drift) throw std::invalid_argument("structure has no symmetric drift");
  return [s](const Jet2& jet, const Vector& y) {
    return second_order_part(s, jet, y) + s.drift(y).dot(jet.gradient());
  };
}

Generator theoretical_generator(const DirichletStructure& s) {
  if (!s.theoretical_drift) throw std::invalid_argument("structure has no theoretical drift");
  return [s](const Jet2& jet, const Vector& y) {
    return second_order_part(s, jet, y) + s.theoretical_drift(y).dot(jet.gradient());
  };
}

double square_field_from_generator(const Generator& a, const TestFunction& phi, const Vector& y) {
  const Jet2 j = phi.jet(y);
  return a(jet_mul(j, j), y) - 2.0 * j.value() * a(j, y);
}

double square_field(const DirichletStructure& s, const TestFunction& phi, const TestFunction& chi,
                    const Vector& y) {
  check_dim(s, phi.dimension());
  check_dim(s, chi.dimension());
  const Vector gp = phi.jet(y, false).gradient();
  const Vector gc = chi.jet(y, false).gradient();
  return gp.dot(s.diffusion(y) * gc);
}

double square_field(const DirichletStructure& s, const TestFunction& phi, const Vector& y) {
  return square_field(s, phi, phi, y);
}

OperatorValues scheme_operators(const DirichletStructure& s, const Jet2& phi, const Vector& y) {
  check_dim(s, phi.dim());
  if (!s.theoretical_drift) throw std::invalid_argument("structure has no theoretical drift");
  const double second = second_order_part(s, phi, y);
  OperatorValues v;
  v.theoretical = second + s.theoretical_drift(y).dot(phi.gradient());
  if (s.drift) {
    const double sym = second + s.drift(y).dot(phi.gradient());
    v.symmetric = sym;
    v.practical = 2.0 * sym - v.theoretical;
    v.singular = v.theoretical - sym;
  }
  return v;
}

OperatorValues scheme_operators(const DirichletStructure& s, const TestFunction& phi,
                                const Vector& y) {
  return scheme_operators(s, phi.jet(y), y);
}

DirichletStructure StructureSpec::build() const {
  if (dim < 1 || dim > kMaxJetDimension) throw std::invalid_argument("structure dimension out of range");
  if (measure.dimension() != dim) throw std::invalid_argument("structure measure dimension mismatch");
  if (static_cast<int>(diffusion.size()) != dim) {
    throw std::invalid_argument("diffusion must be a " + std::to_string(dim) + "x" +
                                std::to_string(dim) + " matrix of expressions");
  }
  std::vector<std::vector<TestFunction>> theta;
  for (const auto& row : diffusion) {
    if (static_cast<int>(row.size()) != dim) throw std::invalid_argument("diffusion row has wrong length");
    std::vector<TestFunction> r;
    for (const auto& e : row) r.push_back(TestFunction::parse(e, dim));
    theta.push_back(std::move(r));
  }
  auto parse_vector = [this](const std::vector<std::string>& exprs) -> VectorField {
    if (exprs.empty()) return {};
    if (static_cast<int>(exprs.size()) != dim) throw std::invalid_argument("drift has wrong length");
    std::vector<TestFunction> fs;
    for (const auto& e : exprs) fs.push_back(TestFunction::parse(e, dim));
    return [fs](const Vector& y) {
      Vector v(static_cast<int>(fs.size()));
      for (int i = 0; i < v.size(); ++i) v[i] = fs[i](y);
      return v;
    };
  };
  DirichletStructure s;
  s.dim = dim;
  s.diffusion = [theta, d = dim](const Vector& y) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = theta[i][j](y);
    return Matrix(0.5 * (m + m.transpose()));
  };
  s.drift = parse_vector(drift);
  s.theoretical_drift = theoretical_drift.empty()
                            ? VectorField([d = dim](const Vector&) { return Vector(Vector::Zero(d)); })
                            : parse_vector(theoretical_drift);
  s.measure = [law = measure](CounterRng& rng) { return law.sample(rng); };
  return s;
}

DirichletStructure graduation_structure(const Law& law) {
  const int d = law.dimension();
  DirichletStructure s;
  s.dim = d;
  s.diffusion = [d](const Vector&) { return Matrix(Matrix::Identity(d, d) / 12.0); };
  s.theoretical_drift = [d](const Vector&) { return Vector(Vector::Zero(d)); };
  s.drift = [law](const Vector& y) {
    Vector v(y.size());
    for (int i = 0; i < y.size(); ++i) v[i] = law.score(y[i]) / 24.0;
    return v;
  };
  s.measure = [law](CounterRng& rng) { return law.sample(rng); };
  return s;
}

}  // namespace dferr
