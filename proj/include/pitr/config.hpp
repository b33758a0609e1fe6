#pragma once

#include <string>

#include "pitr/dataset.hpp"
#include "pitr/score.hpp"

namespace pitr {

/// Run configuration read from the JSON config file: the score hierarchy
/// plus the CSV column roles. Unknown keys anywhere are rejected.
struct RunConfig {
  ScoreSpec score;
  CsvSchema schema;
  bool standardize_set = false;  // true when the config pinned "standardize"
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Canonical JSON text for a config; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& config);

}  // namespace pitr
