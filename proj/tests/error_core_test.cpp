#include "dferr/dirichlet_structure.hpp"
#include "dferr/error_quantity.hpp"
#include "dferr/image_structure.hpp"
#include "dferr/law.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using dferr::ErrorQuantity;
using dferr::Law;
using dferr::Matrix;
using dferr::TestFunction;
using dferr::Vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix random_psd(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = g(rng);
  Matrix m = a * a.transpose();
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST(ErrorQuantity, RejectsInvalidInputs) {
  EXPECT_THROW(ErrorQuantity::scalar(1.0, 0.0, -1.0), std::invalid_argument);
  EXPECT_THROW(ErrorQuantity::scalar(1.0, 0.0, 1.0, 0.0), std::invalid_argument);
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(ErrorQuantity(vec({0, 0}), vec({0, 0}), asym), std::invalid_argument);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(ErrorQuantity(vec({0, 0}), vec({0, 0}), indefinite), std::invalid_argument);
  EXPECT_THROW(ErrorQuantity(vec({0, 0}), vec({0}), Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST(ErrorQuantity, PsdCheck) {
  EXPECT_TRUE(dferr::is_psd(Matrix::Identity(3, 3)));
  EXPECT_TRUE(dferr::is_psd(Matrix::Zero(2, 2)));
  Matrix m(2, 2);
  m << 1.0, 1.0, 1.0, 1.0;
  EXPECT_TRUE(dferr::is_psd(m));
  m(1, 1) = 0.5;
  EXPECT_FALSE(dferr::is_psd(m));
}

TEST(Propagation, StrongSquare) {
  const auto e = ErrorQuantity::scalar(1.0, 0.0, 1.0);
  const auto out = dferr::propagate_strong(e, TestFunction::parse("x0*x0", 1));
  EXPECT_DOUBLE_EQ(out.value()[0], 1.0);
  EXPECT_DOUBLE_EQ(out.bias()[0], 1.0);
  EXPECT_DOUBLE_EQ(out.gamma()(0, 0), 4.0);
}

TEST(Propagation, WeakDropsSquareField) {
  const auto e = ErrorQuantity::scalar(2.0, 0.5, 1.0, 3.0);
  const auto out = dferr::propagate_weak(e, TestFunction::parse("x0*x0", 1));
  EXPECT_DOUBLE_EQ(out.value()[0], 4.0);
  EXPECT_DOUBLE_EQ(out.bias()[0], 2.0);
  EXPECT_EQ(out.gamma()(0, 0), 0.0);
  EXPECT_EQ(out.scale(), 3.0);
}

TEST(Propagation, StrongSumAndProductOfTwoInputs) {
  Matrix g(2, 2);
  g << 2.0, 0.5, 0.5, 1.0;
  const ErrorQuantity e(vec({1.0, 3.0}), vec({0.1, -0.2}), g);
  std::vector<TestFunction> f = {TestFunction::parse("x0 + x1", 2), TestFunction::parse("x0*x1", 2)};
  const auto out = dferr::propagate_strong(e, f);
  EXPECT_DOUBLE_EQ(out.value()[0], 4.0);
  EXPECT_DOUBLE_EQ(out.value()[1], 3.0);
  EXPECT_NEAR(out.bias()[0], -0.1, 1e-15);
  // grad (x0 x1) = (3, 1), Hessian off-diagonal 1.
  EXPECT_NEAR(out.bias()[1], 0.3 - 0.2 + 0.5, 1e-15);
  EXPECT_NEAR(out.gamma()(0, 0), 2.0 + 1.0 + 1.0, 1e-15);
  EXPECT_NEAR(out.gamma()(1, 1), 9 * 2.0 + 2 * 3 * 0.5 + 1.0, 1e-14);
  EXPECT_NEAR(out.gamma()(0, 1), 3 * 2.0 + 3 * 0.5 + 0.5 + 1.0, 1e-14);
  EXPECT_EQ(out.gamma()(0, 1), out.gamma()(1, 0));
}

TEST(Propagation, DimensionMismatchThrows) {
  const auto e = ErrorQuantity::scalar(1.0, 0.0, 1.0);
  EXPECT_THROW(dferr::propagate_strong(e, TestFunction::parse("x0*x1", 2)), std::invalid_argument);
}

// Property: propagating through G then F equals propagating through F o G.
TEST(PropagationProperty, StrongComposition) {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + trial % 3;
    Vector value(d), bias(d);
    for (int i = 0; i < d; ++i) {
      value[i] = 0.5 * n(rng);
      bias[i] = n(rng);
    }
    const ErrorQuantity e(value, bias, random_psd(rng, d));
    std::vector<TestFunction> g = {TestFunction::parse(oracle::random_polynomial(rng, d), d),
                                   TestFunction::parse(oracle::random_polynomial(rng, d), d)};
    const TestFunction f = TestFunction::parse(oracle::random_polynomial(rng, 2), 2);
    const auto stepwise = dferr::propagate_strong(dferr::propagate_strong(e, g), f);
    const auto direct = dferr::propagate_strong(e, f.compose(g));
    const double scale = std::max({1.0, std::abs(direct.bias()[0]), direct.gamma()(0, 0)});
    EXPECT_NEAR(stepwise.value()[0], direct.value()[0], 1e-10 * scale);
    EXPECT_NEAR(stepwise.bias()[0], direct.bias()[0], 1e-10 * scale);
    EXPECT_NEAR(stepwise.gamma()(0, 0), direct.gamma()(0, 0), 1e-10 * scale);
  }
}

// Property: the output square field stays positive semidefinite.
TEST(PropagationProperty, PreservesPsd) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + trial % 4;
    Vector value(d);
    for (int i = 0; i < d; ++i) value[i] = n(rng);
    const ErrorQuantity e(value, Vector::Zero(d), random_psd(rng, d));
    std::vector<TestFunction> f;
    for (int k = 0; k < 3; ++k) f.push_back(TestFunction::parse(oracle::random_polynomial(rng, d), d));
    const auto out = dferr::propagate_strong(e, f);
    EXPECT_TRUE(dferr::is_psd(out.gamma(), 1e-10)) << out.gamma();
  }
}

TEST(DirichletStructure, GraduationOperatorsUnderNormalLaw) {
  const auto s = dferr::graduation_structure(Law::normal(0.0, 1.0));
  const auto phi = TestFunction::parse("cos(x0)", 1);
  for (double y : {-1.3, 0.0, 0.4, 2.0}) {
    const Vector p = vec({y});
    const auto v = dferr::scheme_operators(s, phi, p);
    const double d1 = -std::sin(y), d2 = -std::cos(y);
    EXPECT_NEAR(v.theoretical, d2 / 24.0, 1e-15);
    ASSERT_TRUE(v.symmetric && v.practical && v.singular);
    EXPECT_NEAR(*v.symmetric, d2 / 24.0 - y * d1 / 24.0, 1e-15);
    EXPECT_NEAR(*v.practical, d2 / 24.0 - y * d1 / 12.0, 1e-15);
    EXPECT_NEAR(*v.singular, y * d1 / 24.0, 1e-15);
    EXPECT_NEAR(dferr::square_field(s, phi, p), d1 * d1 / 12.0, 1e-15);
  }
}

TEST(DirichletStructure, OperatorRelationsHold) {
  const auto s = dferr::graduation_structure(Law::normal(0.3, 1.7, 2));
  const auto phi = TestFunction::parse("sin(x0)*cos(x1) + sq(x1)", 2);
  const Vector y = vec({0.2, -0.9});
  const auto v = dferr::scheme_operators(s, phi, y);
  EXPECT_NEAR(*v.symmetric, 0.5 * (v.theoretical + *v.practical), 1e-15);
  EXPECT_NEAR(*v.singular, 0.5 * (v.theoretical - *v.practical), 1e-15);
}

// Property: Gamma recovered from either generator is the same, since the
// first-order parts cancel in A[phi^2] - 2 phi A[phi].
TEST(DirichletStructure, SquareFieldIndependentOfDrift) {
  const auto s = dferr::graduation_structure(Law::normal(0.0, 1.0, 2));
  const auto theo = dferr::theoretical_generator(s);
  const auto sym = dferr::symmetric_generator(s);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 30; ++trial) {
    const auto phi = TestFunction::parse(oracle::random_polynomial(rng, 2), 2);
    const Vector y = vec({n(rng), n(rng)});
    const double direct = dferr::square_field(s, phi, y);
    const double a = dferr::square_field_from_generator(theo, phi, y);
    const double b = dferr::square_field_from_generator(sym, phi, y);
    const double tol = 1e-10 * std::max(1.0, std::abs(direct));
    EXPECT_NEAR(a, direct, tol);
    EXPECT_NEAR(b, direct, tol);
  }
}

TEST(DirichletStructure, SpecBuildsAndValidates) {
  dferr::StructureSpec spec;
  spec.dim = 1;
  spec.diffusion = {{"x0*x0"}};
  spec.drift = {"0.5*x0"};
  spec.theoretical_drift = {"x0"};
  spec.measure = Law::uniform(1.0, 2.0);
  const auto s = spec.build();
  const auto phi = TestFunction::parse("x0*x0", 1);
  const Vector y = vec({1.5});
  EXPECT_DOUBLE_EQ(dferr::square_field(s, phi, y), 2.25 * 9.0);
  const auto v = dferr::scheme_operators(s, phi, y);
  EXPECT_DOUBLE_EQ(v.theoretical, 2.25 + 1.5 * 3.0);
  EXPECT_DOUBLE_EQ(*v.symmetric, 2.25 + 0.75 * 3.0);

  spec.diffusion = {{"1", "0"}};
  EXPECT_THROW(spec.build(), std::invalid_argument);
  spec.diffusion = {{"1"}};
  spec.drift = {"1", "2"};
  EXPECT_THROW(spec.build(), std::invalid_argument);
  spec.drift = {"1"};
  spec.measure = Law::uniform(0.0, 1.0, 2);
  EXPECT_THROW(spec.build(), std::invalid_argument);
}

TEST(ImageStructure, IdentityMapReproducesInput) {
  const auto in = dferr::graduation_structure(Law::uniform(0.0, 1.0));
  const std::vector<TestFunction> phi = {TestFunction::parse("x0", 1)};
  dferr::ImageOptions opt;
  opt.samples = 50000;
  opt.bins = 16;
  const auto img = dferr::image_structure(in, phi, opt);
  const auto u = TestFunction::parse("sin(x0)", 1);
  for (double y : {0.1, 0.5, 0.9}) {
    const Vector p = vec({y});
    const auto g = img.square_field(u, p);
    ASSERT_TRUE(g.has_value());
    EXPECT_NEAR(*g, dferr::square_field(in, u, p), 1e-12);
  }
}

TEST(ImageStructure, SquareMapMatchesConditionalAverages) {
  const auto in = dferr::graduation_structure(Law::uniform(0.0, 1.0));
  const std::vector<TestFunction> phi = {TestFunction::parse("x0*x0", 1)};
  dferr::ImageOptions opt;
  opt.samples = 200000;
  opt.bins = 64;
  opt.seed = 4;
  const auto img = dferr::image_structure(in, phi, opt);
  EXPECT_EQ(img.cell_count(), 64);
  EXPECT_EQ(img.missing_cells(), 0u);
  // Gamma_in[x^2] = 4x^2/12 = y/3 given x^2 = y.
  for (double y : {0.2, 0.5, 0.8}) {
    const auto d = img.diffusion_at(vec({y}));
    ASSERT_TRUE(d.has_value());
    EXPECT_NEAR((*d)(0, 0), y / 3.0, 0.02 * y / 3.0 + 0.01);
  }
  EXPECT_THROW(img.diffusion_at(vec({0.1, 0.2})), std::invalid_argument);
}

TEST(ImageStructure, RejectsBadMaps) {
  const auto in = dferr::graduation_structure(Law::uniform(0.0, 1.0));
  EXPECT_THROW(dferr::image_structure(in, std::vector<TestFunction>{}), std::invalid_argument);
  const std::vector<TestFunction> wrong = {TestFunction::parse("x0*x1", 2)};
  EXPECT_THROW(dferr::image_structure(in, wrong), std::invalid_argument);
}

TEST(Law, MomentsAndQuantiles) {
  const auto u = Law::uniform(-1.0, 3.0);
  EXPECT_DOUBLE_EQ(u.mean(), 1.0);
  EXPECT_DOUBLE_EQ(u.variance(), 16.0 / 12.0);
  EXPECT_DOUBLE_EQ(u.quantile(0.25), 0.0);
  const auto n = Law::normal(1.0, 2.0);
  EXPECT_NEAR(n.quantile(0.975), 1.0 + 2.0 * 1.959963984540054, 1e-10);
  EXPECT_NEAR(n.score(2.0), -0.25, 1e-15);
  EXPECT_NEAR(n.density(1.0), 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi)), 1e-15);
  EXPECT_THROW(Law::uniform(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(Law::normal(0.0, 0.0), std::invalid_argument);
}

TEST(Law, CustomDensityAgreesWithQuadrature) {
  const auto h = TestFunction::parse("exp(-x0)", 1);
  const auto law = Law::custom(h, 0.0, 2.0);
  const double z = oracle::simpson([](double x) { return std::exp(-x); }, 0.0, 2.0);
  const double mean = oracle::simpson([&](double x) { return x * std::exp(-x) / z; }, 0.0, 2.0);
  EXPECT_NEAR(law.mean(), mean, 1e-8);
  EXPECT_NEAR(law.density(0.5), std::exp(-0.5) / z, 1e-8);
  EXPECT_NEAR(law.score(0.5), -1.0, 1e-6);
  const double q = law.quantile(0.5);
  EXPECT_NEAR(oracle::simpson([&](double x) { return std::exp(-x) / z; }, 0.0, q), 0.5, 1e-6);
}

TEST(Law, MarginalExpectationMatchesSimpson) {
  const auto n = Law::normal(0.0, 1.0);
  EXPECT_NEAR(dferr::marginal_expectation(n, [](double x) { return std::cos(x); }),
              oracle::normal_expectation([](double x) { return std::cos(x); }), 1e-12);
  const auto u = Law::uniform(0.0, 1.0);
  EXPECT_NEAR(dferr::marginal_expectation(u, [](double x) { return x * x; }), 1.0 / 3.0, 1e-14);
}
