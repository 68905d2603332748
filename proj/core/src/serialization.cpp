#include "dferr/serialization.hpp"

#include <stdexcept>
#include <string>

namespace dferr {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

const json& field(const json& j, const char* key, const char* context) {
  if (!j.is_object()) fail(std::string(context) + ": expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) fail(std::string(context) + ": missing field \"" + key + "\"");
  return *it;
}

double number(const json& j, const char* key, const char* context) {
  const json& v = field(j, key, context);
  if (!v.is_number()) fail(std::string(context) + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const char* context) {
  if (!j.contains(key)) return fallback;
  return number(j, key, context);
}

int dimension_or(const json& j, int fallback, const char* context) {
  if (!j.contains("d")) return fallback;
  const json& v = j.at("d");
  if (!v.is_number_integer() || v.get<int>() < 1) fail(std::string(context) + ": \"d\" must be a positive integer");
  return v.get<int>();
}

std::string text(const json& j, const char* key, const char* context) {
  const json& v = field(j, key, context);
  if (!v.is_string()) fail(std::string(context) + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

Vector vector_of(const json& j, const char* context) {
  if (!j.is_array()) fail(std::string(context) + ": expected an array of numbers");
  Vector v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(std::string(context) + ": expected an array of numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

std::vector<std::string> strings_of(const json& j, const char* context) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array()) fail(std::string(context) + ": expected an expression or an array of expressions");
  std::vector<std::string> out;
  for (const json& e : j) {
    if (!e.is_string()) fail(std::string(context) + ": expressions must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<std::vector<std::string>> string_matrix_of(const json& j, const char* context) {
  if (!j.is_array()) fail(std::string(context) + ": expected an array of rows");
  std::vector<std::vector<std::string>> out;
  for (const json& row : j) out.push_back(strings_of(row, context));
  return out;
}

}  // namespace

json error_quantity_to_json(const ErrorQuantity& e) {
  json gamma = json::array();
  for (int i = 0; i < e.dim(); ++i) {
    json row = json::array();
    for (int k = 0; k < e.dim(); ++k) row.push_back(e.gamma()(i, k));
    gamma.push_back(row);
  }
  json value = json::array(), bias = json::array();
  for (int i = 0; i < e.dim(); ++i) {
    value.push_back(e.value()[i]);
    bias.push_back(e.bias()[i]);
  }
  return {{"d", e.dim()}, {"value", value}, {"bias", bias}, {"gamma", gamma}, {"scale", e.scale()}};
}

ErrorQuantity error_quantity_from_json(const json& j) {
  constexpr const char* ctx = "error quantity";
  Vector value = vector_of(field(j, "value", ctx), ctx);
  Vector bias = vector_of(field(j, "bias", ctx), ctx);
  const json& g = field(j, "gamma", ctx);
  if (!g.is_array()) fail("error quantity: \"gamma\" must be a matrix");
  const int d = dimension_or(j, static_cast<int>(value.size()), ctx);
  if (value.size() != d) fail("error quantity: \"value\" does not have d entries");
  if (static_cast<int>(g.size()) != d) fail("error quantity: \"gamma\" must be d x d");
  Matrix gamma(d, d);
  for (int i = 0; i < d; ++i) {
    const Vector row = vector_of(g[static_cast<std::size_t>(i)], ctx);
    if (row.size() != d) fail("error quantity: \"gamma\" must be d x d");
    gamma.row(i) = row.transpose();
  }
  return ErrorQuantity(std::move(value), std::move(bias), std::move(gamma),
                       number_or(j, "scale", 1.0, ctx));
}

json law_to_json(const Law& law) {
  switch (law.kind()) {
    case Law::Kind::kUniform:
      return {{"kind", "uniform"}, {"lo", law.param_a()}, {"hi", law.param_b()}, {"d", law.dimension()}};
    case Law::Kind::kNormal:
      return {{"kind", "normal"}, {"mean", law.param_a()}, {"sd", law.param_b()}, {"d", law.dimension()}};
    case Law::Kind::kCustom:
      return {{"kind", "custom-expr"},
              {"density", law.custom_density()->expression()},
              {"lo", law.param_a()},
              {"hi", law.param_b()},
              {"d", law.dimension()}};
  }
  fail("law: unknown kind");
}

Law law_from_json(const json& j) {
  constexpr const char* ctx = "law";
  const std::string kind = text(j, "kind", ctx);
  const int d = dimension_or(j, 1, ctx);
  if (kind == "uniform") {
    return Law::uniform(number_or(j, "lo", 0.0, ctx), number_or(j, "hi", 1.0, ctx), d);
  }
  if (kind == "normal") {
    return Law::normal(number_or(j, "mean", 0.0, ctx), number_or(j, "sd", 1.0, ctx), d);
  }
  if (kind == "custom-expr") {
    return Law::custom(TestFunction::parse(text(j, "density", ctx), 1), number(j, "lo", ctx),
                       number(j, "hi", ctx), d);
  }
  fail("law: unknown kind \"" + kind + "\" (expected uniform, normal or custom-expr)");
}

json structure_spec_to_json(const StructureSpec& s) {
  json j = {{"d", s.dim}, {"diffusion", s.diffusion}, {"measure", law_to_json(s.measure)}};
  if (!s.drift.empty()) j["drift"] = s.drift;
  if (!s.theoretical_drift.empty()) j["theoretical_drift"] = s.theoretical_drift;
  return j;
}

StructureSpec structure_spec_from_json(const json& j) {
  constexpr const char* ctx = "structure";
  StructureSpec s;
  s.measure = law_from_json(field(j, "measure", ctx));
  s.dim = dimension_or(j, s.measure.dimension(), ctx);
  s.diffusion = string_matrix_of(field(j, "diffusion", ctx), ctx);
  if (j.contains("drift")) s.drift = strings_of(j.at("drift"), ctx);
  if (j.contains("theoretical_drift")) s.theoretical_drift = strings_of(j.at("theoretical_drift"), ctx);
  // Validates the expressions and dimensions.
  (void)s.build();
  return s;
}

SchemePtr scheme_from_json(const json& j) {
  constexpr const char* ctx = "scheme";
  const std::string name = text(j, "scheme", ctx);
  if (name == "binary-digit") return std::make_shared<BinaryDigitScheme>();
  if (name == "polya") {
    const double horizon = number_or(j, "horizon", 100000, ctx);
    auto continuation = PolyaScheme::Continuation::kBetaBinomial;
    if (j.contains("continuation")) {
      const std::string c = text(j, "continuation", ctx);
      if (c == "stepwise") {
        continuation = PolyaScheme::Continuation::kStepwise;
      } else if (c != "beta-binomial") {
        fail("scheme: continuation must be \"beta-binomial\" or \"stepwise\"");
      }
    }
    return std::make_shared<PolyaScheme>(static_cast<int>(horizon), continuation);
  }
  if (name == "graduation") {
    Law law = law_from_json(field(j, "law", ctx));
    if (j.contains("d")) law = law.with_dimension(dimension_or(j, 1, ctx));
    return std::make_shared<GraduationScheme>(std::move(law));
  }
  if (name == "perturbation") {
    Law law = law_from_json(field(j, "law", ctx));
    if (j.contains("d")) law = law.with_dimension(dimension_or(j, 1, ctx));
    const int d = law.dimension();
    std::vector<TestFunction> z;
    for (const auto& e : strings_of(field(j, "z", ctx), ctx)) z.push_back(TestFunction::parse(e, d));
    std::vector<std::vector<TestFunction>> t;
    for (const auto& row : string_matrix_of(field(j, "t", ctx), ctx)) {
      std::vector<TestFunction> r;
      for (const auto& e : row) r.push_back(TestFunction::parse(e, d));
      t.push_back(std::move(r));
    }
    Law g = j.contains("g") ? law_from_json(j.at("g")) : Law::normal(0.0, 1.0, 1);
    return std::make_shared<PerturbationScheme>(std::move(law), std::move(z), std::move(t), std::move(g));
  }
  fail("scheme: unknown scheme \"" + name +
       "\" (expected binary-digit, polya, graduation or perturbation)");
}

}  // namespace dferr
