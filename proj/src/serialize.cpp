#include "glam/serialize.hpp"

#include "glam/error.hpp"

namespace glam {
namespace {

using nlohmann::json;

const char* kLambdaKeys[4] = {"lambda1", "lambda2", "lambda3", "lambda4"};

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError(where + ": missing field '" + key + "'");
  return j.at(key);
}

json expansion_to_json(const LambdaExpansion& e) {
  json idx = json::array();
  for (const auto& a : e.truncation.indices) idx.push_back(a);
  json coef = json::array();
  for (Eigen::Index k = 0; k < e.coefficients.size(); ++k) coef.push_back(e.coefficients[k]);
  return json{{"indices", idx},
              {"coefficients", coef},
              {"link", to_string(e.link)},
              {"degree", e.truncation.degree},
              {"qnorm", e.truncation.qnorm}};
}

LambdaExpansion expansion_from_json(const json& j, std::size_t dim, const std::string& where) {
  LambdaExpansion e;
  const json& link = require(j, "link", where);
  if (!link.is_string()) throw SchemaError(where + ": link must be a string");
  e.link = parse_link(link.get<std::string>());
  const json& idx = require(j, "indices", where);
  const json& coef = require(j, "coefficients", where);
  if (!idx.is_array() || !coef.is_array() || idx.size() != coef.size())
    throw SchemaError(where + ": indices and coefficients must be arrays of equal length");
  e.truncation.dim = static_cast<int>(dim);
  e.truncation.degree = j.value("degree", 0);
  e.truncation.qnorm = j.value("qnorm", 1.0);
  e.coefficients.resize(static_cast<Eigen::Index>(coef.size()));
  try {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      e.truncation.indices.push_back(idx[k].get<MultiIndex>());
      e.coefficients[static_cast<Eigen::Index>(k)] = coef[k].get<double>();
    }
  } catch (const json::exception& ex) {
    throw SchemaError(where + ": " + ex.what());
  }
  return e;
}

json expansions_to_json(const std::array<LambdaExpansion, 4>& es) {
  json out = json::object();
  for (std::size_t i = 0; i < 4; ++i) out[kLambdaKeys[i]] = expansion_to_json(es[i]);
  return out;
}

std::array<LambdaExpansion, 4> expansions_from_json(const json& j, std::size_t dim,
                                                    const std::string& where) {
  std::array<LambdaExpansion, 4> out;
  for (std::size_t i = 0; i < 4; ++i)
    out[i] = expansion_from_json(require(j, kLambdaKeys[i], where), dim,
                                 where + "." + kLambdaKeys[i]);
  return out;
}

}  // namespace

json to_json(const InputModel& input) {
  json ms = json::array();
  for (std::size_t i = 0; i < input.dim(); ++i) {
    const auto& m = input.marginals[i];
    ms.push_back({{"name", input.names[i]}, {"kind", to_string(m.kind)}, {"params", {m.a, m.b}}});
  }
  return json{{"marginals", ms}};
}

InputModel input_model_from_json(const json& j) {
  const json& ms = require(j, "marginals", "input");
  if (!ms.is_array()) throw SchemaError("input.marginals must be an array");
  InputModel in;
  try {
    for (const auto& m : ms) {
      in.names.push_back(require(m, "name", "marginal").get<std::string>());
      Marginal mg;
      mg.kind = parse_marginal_kind(require(m, "kind", "marginal").get<std::string>());
      const auto params = require(m, "params", "marginal").get<std::vector<double>>();
      if (params.size() != 2) throw SchemaError("marginal params must have two entries");
      mg.a = params[0];
      mg.b = params[1];
      in.marginals.push_back(mg);
    }
  } catch (const json::exception& ex) {
    throw SchemaError(std::string("input: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw SchemaError(ex.what());
  }
  try {
    in.validate();
  } catch (const ConfigError& ex) {
    throw SchemaError(ex.what());
  }
  return in;
}

json to_json(const AnyModel& model) {
  json out;
  out["version"] = kModelFormatVersion;
  if (const auto* g = std::get_if<GlamModel>(&model)) {
    out["role"] = "glam";
    out["input"] = to_json(g->input);
    out["expansions"] = expansions_to_json(g->expansions);
  } else {
    const auto& m = std::get<MfGlamModel>(model);
    out["role"] = "mf-glam";
    out["input"] = to_json(m.input);
    out["lf_columns"] = m.lf_columns;
    out["expansions"] = expansions_to_json(m.lf_expansions);
    out["discrepancy"] = expansions_to_json(m.discrepancy_expansions);
  }
  return out;
}

AnyModel model_from_json(const json& j) {
  const json& version = require(j, "version", "model");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion)
    throw SchemaError("model: unsupported version " + version.dump());
  const json& role = require(j, "role", "model");
  if (!role.is_string()) throw SchemaError("model: role must be a string");
  InputModel input = input_model_from_json(require(j, "input", "model"));
  const std::string r = role.get<std::string>();
  if (r == "glam") {
    GlamModel g{input, expansions_from_json(require(j, "expansions", "model"), input.dim(),
                                            "expansions")};
    g.validate();
    return g;
  }
  if (r == "mf-glam") {
    MfGlamModel m;
    m.input = input;
    try {
      m.lf_columns = require(j, "lf_columns", "model").get<std::vector<int>>();
    } catch (const json::exception& ex) {
      throw SchemaError(std::string("lf_columns: ") + ex.what());
    }
    m.lf_expansions =
        expansions_from_json(require(j, "expansions", "model"), m.lf_columns.size(), "expansions");
    m.discrepancy_expansions =
        expansions_from_json(require(j, "discrepancy", "model"), input.dim(), "discrepancy");
    m.validate();
    return m;
  }
  throw SchemaError("model: unknown role '" + r + "'");
}

std::string serialize(const AnyModel& model) { return to_json(model).dump(2); }

AnyModel deserialize(const std::string& document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& ex) {
    throw SchemaError(std::string("model document is not valid JSON: ") + ex.what());
  }
  return model_from_json(j);
}

}  // namespace glam
