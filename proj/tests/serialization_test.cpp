#include "dferr/serialization.hpp"

#include <gtest/gtest.h>

#include <cmath>

using dferr::Law;
using nlohmann::json;

TEST(Serialization, ErrorQuantityRoundTrip) {
  dferr::Matrix g(2, 2);
  g << 2.0, 0.5, 0.5, 1.0;
  dferr::Vector v(2), b(2);
  v << 0.1, -3.0;
  b << 1.0 / 3.0, 7.0;
  const dferr::ErrorQuantity e(v, b, g, 0.25);
  const auto j = dferr::error_quantity_to_json(e);
  const auto back = dferr::error_quantity_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.value(), e.value());
  EXPECT_EQ(back.bias(), e.bias());
  EXPECT_EQ(back.gamma(), e.gamma());
  EXPECT_EQ(back.scale(), e.scale());
}

TEST(Serialization, ErrorQuantityRejectsBadInput) {
  EXPECT_THROW(dferr::error_quantity_from_json(json::parse(R"({"d": 1, "value": [0], "bias": [0], "gamma": [[-1]]})")),
               std::invalid_argument);
  EXPECT_THROW(dferr::error_quantity_from_json(json::parse(R"({"d": 2, "value": [0], "bias": [0], "gamma": [[1]]})")),
               std::invalid_argument);
  EXPECT_THROW(dferr::error_quantity_from_json(json::parse(R"([1, 2])")), std::invalid_argument);
}

TEST(Serialization, LawRoundTrip) {
  const std::vector<Law> laws = {Law::uniform(-1.0, 2.0), Law::normal(0.5, 3.0, 2),
                                 Law::custom(dferr::TestFunction::parse("exp(-x0)", 1), 0.0, 2.0)};
  for (const Law& law : laws) {
    const auto back = dferr::law_from_json(json::parse(dferr::law_to_json(law).dump()));
    EXPECT_EQ(back.kind(), law.kind());
    EXPECT_EQ(back.dimension(), law.dimension());
    EXPECT_EQ(back.param_a(), law.param_a());
    EXPECT_EQ(back.param_b(), law.param_b());
    EXPECT_DOUBLE_EQ(back.quantile(0.3), law.quantile(0.3));
  }
}

TEST(Serialization, LawRejectsUnknownKind) {
  EXPECT_THROW(dferr::law_from_json(json::parse(R"({"kind": "cauchy"})")), std::invalid_argument);
  EXPECT_THROW(dferr::law_from_json(json::parse(R"({"kind": "normal", "sd": -1})")), std::invalid_argument);
  EXPECT_THROW(dferr::law_from_json(json::parse(R"({"kind": "custom-expr", "density": "x0 +", "lo": 0, "hi": 1})")),
               std::invalid_argument);
}

TEST(Serialization, StructureSpecRoundTrip) {
  const auto j = json::parse(R"({"d": 1, "diffusion": [["x0*x0"]], "drift": "0.5*x0",
                                 "theoretical_drift": ["x0"], "measure": {"kind": "uniform", "lo": 1, "hi": 2}})");
  const auto spec = dferr::structure_spec_from_json(j);
  EXPECT_EQ(spec.drift, std::vector<std::string>{"0.5*x0"});
  const auto again = dferr::structure_spec_from_json(dferr::structure_spec_to_json(spec));
  EXPECT_EQ(again.diffusion, spec.diffusion);
  EXPECT_EQ(again.drift, spec.drift);
  EXPECT_EQ(again.theoretical_drift, spec.theoretical_drift);
  EXPECT_EQ(again.measure.describe(), spec.measure.describe());
  EXPECT_THROW(dferr::structure_spec_from_json(json::parse(R"({"d": 1, "diffusion": [["1", "2"]]})")),
               std::invalid_argument);
}

TEST(Serialization, SchemesFromJson) {
  EXPECT_EQ(dferr::scheme_from_json(json::parse(R"({"scheme": "binary-digit"})"))->name(), "binary-digit");
  const auto polya = dferr::scheme_from_json(json::parse(R"({"scheme": "polya", "horizon": 500, "continuation": "stepwise"})"));
  EXPECT_EQ(polya->name(), "polya");
  EXPECT_NO_THROW(polya->check_level(500));
  EXPECT_THROW(polya->check_level(501), std::out_of_range);
  const auto grad = dferr::scheme_from_json(json::parse(R"({"scheme": "graduation", "law": {"kind": "normal"}, "d": 2})"));
  EXPECT_EQ(grad->dimension(), 2);
  const auto pert = dferr::scheme_from_json(json::parse(
      R"({"scheme": "perturbation", "law": {"kind": "normal"}, "z": ["x0"], "t": [["1"]], "g": {"kind": "normal"}})"));
  EXPECT_EQ(pert->name(), "perturbation");
  EXPECT_THROW(dferr::scheme_from_json(json::parse(R"({"scheme": "rounding"})")), std::invalid_argument);
  EXPECT_THROW(dferr::scheme_from_json(json::parse(
                   R"({"scheme": "perturbation", "law": {"kind": "normal"}, "z": ["x0"], "t": [["1"]], "g": {"kind": "normal", "mean": 1}})")),
               std::invalid_argument);
}
