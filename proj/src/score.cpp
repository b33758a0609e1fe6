#include "pitr/score.hpp"

#include <cmath>

#include "pitr/common.hpp"

namespace pitr {

void validate(const ScoreSpec& spec) {
  if (spec.levels.empty()) throw ValidationError("score spec must have at least one level");
  for (std::size_t k = 0; k < spec.levels.size(); ++k) {
    const PriorityLevel& lvl = spec.levels[k];
    if (!std::isfinite(lvl.threshold) || lvl.threshold < 0.0)
      throw ValidationError("level " + std::to_string(k) + ": threshold must be finite and >= 0");
    if (lvl.kind != OutcomeKind::continuous && lvl.threshold != 0.0)
      throw ValidationError("level " + std::to_string(k) +
                            ": threshold only applies to continuous levels");
  }
}

namespace {
bool is_binary_value(double x) { return x == 0.0 || x == 1.0; }
}  // namespace

int compare_level(const PriorityLevel& level, double y_k, double v_k) {
  if (!std::isfinite(y_k) || !std::isfinite(v_k))
    throw ValidationError("outcome values must be finite");
  if (level.kind == OutcomeKind::binary && (!is_binary_value(y_k) || !is_binary_value(v_k)))
    throw ValidationError("binary outcome value outside {0, 1}");
  if (level.direction == Direction::lower_is_better) {
    y_k = -y_k;
    v_k = -v_k;
  }
  if (level.kind == OutcomeKind::continuous) {
    if (v_k - y_k > level.threshold) return +1;
    if (y_k - v_k > level.threshold) return -1;
    return 0;
  }
  return (v_k > y_k) - (v_k < y_k);
}

int score(const ScoreSpec& spec, std::span<const double> y, std::span<const double> v) {
  if (y.size() != spec.levels.size() || v.size() != spec.levels.size())
    throw ValidationError("outcome vector dimension does not match score spec");
  for (std::size_t k = 0; k < spec.levels.size(); ++k) {
    const int s = compare_level(spec.levels[k], y[k], v[k]);
    if (s != 0) return s;
  }
  return 0;
}

std::string to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::binary:
      return "binary";
    case OutcomeKind::continuous:
      return "continuous";
    case OutcomeKind::ordinal:
      return "ordinal";
  }
  return "binary";
}

std::string to_string(Direction direction) {
  return direction == Direction::higher_is_better ? "higher_is_better" : "lower_is_better";
}

OutcomeKind outcome_kind_from_string(const std::string& s) {
  if (s == "binary") return OutcomeKind::binary;
  if (s == "continuous") return OutcomeKind::continuous;
  if (s == "ordinal") return OutcomeKind::ordinal;
  throw ValidationError("unknown outcome kind '" + s + "' (expected binary|continuous|ordinal)");
}

Direction direction_from_string(const std::string& s) {
  if (s == "higher_is_better") return Direction::higher_is_better;
  if (s == "lower_is_better") return Direction::lower_is_better;
  throw ValidationError("unknown direction '" + s +
                        "' (expected higher_is_better|lower_is_better)");
}

}  // namespace pitr
