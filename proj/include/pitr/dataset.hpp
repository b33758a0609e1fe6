#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pitr/common.hpp"
#include "pitr/score.hpp"

namespace pitr {

enum class Arm : std::uint8_t { control = 0, experimental = 1 };

struct Subject {
  std::vector<double> covariates;  // encoded, length d
  std::vector<double> outcomes;    // length = score spec levels
  Arm arm = Arm::control;
};

/// Encoding of one raw covariate column. Categorical columns expand to one
/// indicator per category with the first (reference) category dropped;
/// numeric columns optionally z-scored with pooled-arm mean/sd.
struct ColumnEncoding {
  std::string name;
  bool categorical = false;
  std::vector<std::string> categories;  // sorted; categories[0] = reference
  bool standardized = false;
  double mean = 0.0;
  double sd = 1.0;

  std::size_t width() const { return categorical ? categories.size() - 1 : 1; }
};

struct CovariateEncoding {
  std::vector<ColumnEncoding> columns;

  std::size_t encoded_dim() const;

  /// Encodes one raw row (one string cell per column, in column order).
  /// An unseen category maps to the reference (all-zeros) block and bumps
  /// *unseen_count when provided. Missing or unparseable numeric cells throw.
  std::vector<double> encode(std::span<const std::string> cells,
                             std::size_t* unseen_count = nullptr) const;

  /// Encodes an all-numeric row (requires no categorical columns).
  std::vector<double> encode_numeric(std::span<const double> values) const;

  /// Trivial encoding: named numeric columns, no standardization.
  static CovariateEncoding numeric(const std::vector<std::string>& names);
};

struct TrialDataset {
  std::vector<Subject> control;       // size m
  std::vector<Subject> experimental;  // size n
  CovariateEncoding encoding;

  std::size_t m() const { return control.size(); }
  std::size_t n() const { return experimental.size(); }
  std::size_t covariate_dim() const;
  std::size_t outcome_dim() const;
  const Subject& pooled(std::size_t index) const;  // control first, then experimental
  std::size_t pooled_size() const { return control.size() + experimental.size(); }

  void validate() const;
};

/// Column roles for CSV ingestion. The arm column must hold 0 (control) or
/// 1 (experimental); outcome columns are listed in priority order.
struct CsvSchema {
  std::string arm_column;
  std::vector<std::string> outcome_columns;
  std::vector<std::string> covariate_columns;
  std::vector<std::string> categorical;  // covariate columns forced categorical
  bool standardize = false;
};

struct IngestReport {
  std::vector<std::size_t> dropped_rows;  // 1-based data row numbers with missing cells
};

/// Parses a CSV into a two-arm dataset. Rows with missing outcome or
/// covariate cells are dropped and reported; unparseable cells, unknown
/// schema columns, bad arm values, or an empty arm are errors. Covariate
/// columns not forced categorical are auto-detected: any non-numeric cell
/// makes the column categorical.
TrialDataset ingest_csv(const std::string& path, const CsvSchema& schema,
                        IngestReport* report = nullptr);

struct PairRecord {
  std::vector<double> x;  // control covariates
  std::vector<double> u;  // experimental covariates
  int s = 0;              // score in {-1, 0, +1}
};

inline constexpr std::size_t kDefaultPairBudget = 50'000'000;

/// All m*n cross-arm pairs, i (control) outer and j (experimental) inner.
std::vector<PairRecord> build_pairs(const TrialDataset& data, const ScoreSpec& spec,
                                    std::size_t pair_budget = kDefaultPairBudget);

/// Flattened pair set for classifier training: features are concat(x, u)
/// stored column-major, labels are the pair scores. Same iteration order as
/// build_pairs.
struct PairMatrix {
  FeatureMatrix features;  // rows = m*n, cols = 2d
  std::vector<std::int8_t> labels;
};

PairMatrix build_pair_matrix(const TrialDataset& data, const ScoreSpec& spec,
                             std::size_t pair_budget = kDefaultPairBudget);

/// Mean pairwise score over all m*n cross-arm pairs; always in [-1, 1].
double net_benefit(const TrialDataset& data, const ScoreSpec& spec);

}  // namespace pitr
