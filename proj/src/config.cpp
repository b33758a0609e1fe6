#include "pitr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pitr {

namespace {

using Json = nlohmann::ordered_json;

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ValidationError(where + ": unknown key '" + item.key() + "'");
}

std::vector<std::string> string_list(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ValidationError(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const Json& item : value) {
    if (!item.is_string()) throw ValidationError(where + " must be an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(origin + ": invalid JSON: " + e.what());
  }
  if (!root.is_object()) throw ValidationError(origin + ": config must be a JSON object");
  reject_unknown_keys(root, {"score", "data"}, origin);
  if (!root.contains("score")) throw ValidationError(origin + ": missing 'score' section");
  if (!root.contains("data")) throw ValidationError(origin + ": missing 'data' section");

  RunConfig config;

  const Json& score = root["score"];
  reject_unknown_keys(score, {"levels"}, origin + ": score");
  if (!score.contains("levels") || !score["levels"].is_array() || score["levels"].empty())
    throw ValidationError(origin + ": score.levels must be a nonempty array");
  for (const Json& level : score["levels"]) {
    reject_unknown_keys(level, {"kind", "direction", "threshold"}, origin + ": score level");
    PriorityLevel lvl;
    if (!level.contains("kind") || !level["kind"].is_string())
      throw ValidationError(origin + ": score level needs a 'kind' string");
    lvl.kind = outcome_kind_from_string(level["kind"].get<std::string>());
    if (level.contains("direction")) {
      if (!level["direction"].is_string())
        throw ValidationError(origin + ": 'direction' must be a string");
      lvl.direction = direction_from_string(level["direction"].get<std::string>());
    }
    if (level.contains("threshold")) {
      if (!level["threshold"].is_number())
        throw ValidationError(origin + ": 'threshold' must be a number");
      lvl.threshold = level["threshold"].get<double>();
    }
    config.score.levels.push_back(lvl);
  }
  validate(config.score);

  const Json& data = root["data"];
  reject_unknown_keys(data, {"arm", "outcomes", "covariates", "categorical", "standardize"},
                      origin + ": data");
  if (!data.contains("arm") || !data["arm"].is_string())
    throw ValidationError(origin + ": data.arm must name the arm column");
  config.schema.arm_column = data["arm"].get<std::string>();
  if (!data.contains("outcomes"))
    throw ValidationError(origin + ": data.outcomes must list the outcome columns");
  config.schema.outcome_columns = string_list(data["outcomes"], origin + ": data.outcomes");
  if (!data.contains("covariates"))
    throw ValidationError(origin + ": data.covariates must list the covariate columns");
  config.schema.covariate_columns = string_list(data["covariates"], origin + ": data.covariates");
  if (data.contains("categorical"))
    config.schema.categorical = string_list(data["categorical"], origin + ": data.categorical");
  if (data.contains("standardize")) {
    if (!data["standardize"].is_boolean())
      throw ValidationError(origin + ": data.standardize must be a boolean");
    config.schema.standardize = data["standardize"].get<bool>();
    config.standardize_set = true;
  }
  if (config.schema.outcome_columns.size() != config.score.levels.size())
    throw ValidationError(origin + ": " + std::to_string(config.schema.outcome_columns.size()) +
                          " outcome columns for " + std::to_string(config.score.levels.size()) +
                          " score levels");
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const RunConfig& config) {
  Json root = Json::object();
  Json levels = Json::array();
  for (const PriorityLevel& lvl : config.score.levels) {
    Json level = Json::object();
    level["kind"] = to_string(lvl.kind);
    level["direction"] = to_string(lvl.direction);
    if (lvl.kind == OutcomeKind::continuous) level["threshold"] = lvl.threshold;
    levels.push_back(level);
  }
  root["score"] = Json::object();
  root["score"]["levels"] = levels;
  Json data = Json::object();
  data["arm"] = config.schema.arm_column;
  data["outcomes"] = config.schema.outcome_columns;
  data["covariates"] = config.schema.covariate_columns;
  if (!config.schema.categorical.empty()) data["categorical"] = config.schema.categorical;
  if (config.standardize_set) data["standardize"] = config.schema.standardize;
  root["data"] = data;
  return root.dump(2) + "\n";
}

}  // namespace pitr
