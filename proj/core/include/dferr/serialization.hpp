#pragma once

#include "dferr/dirichlet_structure.hpp"
#include "dferr/error_quantity.hpp"
#include "dferr/law.hpp"
#include "dferr/schemes.hpp"

#include <nlohmann/json.hpp>

namespace dferr {

/// {"d": 1, "value": [...], "bias": [...], "gamma": [[...]], "scale": 1}
nlohmann::json error_quantity_to_json(const ErrorQuantity& e);
ErrorQuantity error_quantity_from_json(const nlohmann::json& j);

/// {"kind": "uniform", "lo": 0, "hi": 1, "d": 1}
/// {"kind": "normal", "mean": 0, "sd": 1, "d": 1}
/// {"kind": "custom-expr", "density": "<expr in x0>", "lo": a, "hi": b, "d": 1}
nlohmann::json law_to_json(const Law& law);
Law law_from_json(const nlohmann::json& j);

/// {"d": 1, "diffusion": [["<expr>"]], "drift": ["<expr>"],
///  "theoretical_drift": ["<expr>"], "measure": {law}}. A single string is
/// accepted for a one-dimensional drift.
nlohmann::json structure_spec_to_json(const StructureSpec& s);
StructureSpec structure_spec_from_json(const nlohmann::json& j);

/// {"scheme": "graduation", "law": {law}, "d": 1}
/// {"scheme": "binary-digit"}
/// {"scheme": "polya", "horizon": 100000, "continuation": "beta-binomial" | "stepwise"}
/// {"scheme": "perturbation", "law": {law}, "z": ["<expr>"], "t": [["<expr>"]],
///  "g": {law}}
SchemePtr scheme_from_json(const nlohmann::json& j);

}  // namespace dferr
