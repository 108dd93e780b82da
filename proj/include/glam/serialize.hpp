#pragma once

// Model documents (JSON). Layout:
//   {version, role: "glam" | "mf-glam", input: {marginals: [...]},
//    expansions: {lambda1..lambda4: {indices, coefficients, link, degree, qnorm}},
//    discrepancy: {...}, lf_columns: [...]}      (last two for "mf-glam")

#include <string>

#include "glam/model.hpp"
#include "json.hpp"

namespace glam {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const InputModel& input);
InputModel input_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& j);

std::string serialize(const AnyModel& model);
AnyModel deserialize(const std::string& document);

}  // namespace glam
