#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pitr {

enum class OutcomeKind : std::uint8_t { binary = 0, continuous = 1, ordinal = 2 };
enum class Direction : std::uint8_t { higher_is_better = 0, lower_is_better = 1 };

/// One level of the outcome hierarchy. The threshold applies to continuous
/// outcomes only: differences within +/- threshold are ties.
struct PriorityLevel {
  OutcomeKind kind = OutcomeKind::binary;
  Direction direction = Direction::higher_is_better;
  double threshold = 0.0;
};

/// Ordered hierarchy of outcome levels, index 0 = highest priority. Its
/// length is the outcome-vector dimension of every subject it scores.
struct ScoreSpec {
  std::vector<PriorityLevel> levels;
  std::size_t dim() const { return levels.size(); }
};

/// Throws ValidationError if the spec is empty, a threshold is negative or
/// non-finite, or a binary/ordinal level carries a nonzero threshold.
void validate(const ScoreSpec& spec);

/// Compares one outcome component of a (control y, experimental v) pair.
/// Returns +1 when v beats y, -1 when y beats v, 0 on a tie. A
/// lower_is_better level negates both operands before comparing.
int compare_level(const PriorityLevel& level, double y_k, double v_k);

/// Pairwise comparison score in {-1, 0, +1}: the first nonzero level
/// comparison scanning the hierarchy in priority order, 0 if all levels tie.
/// Antisymmetric: score(spec, a, b) == -score(spec, b, a).
int score(const ScoreSpec& spec, std::span<const double> y, std::span<const double> v);

std::string to_string(OutcomeKind kind);
std::string to_string(Direction direction);
OutcomeKind outcome_kind_from_string(const std::string& s);
Direction direction_from_string(const std::string& s);

}  // namespace pitr
