#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pitr/dataset.hpp"
#include "pitr/score.hpp"

namespace pitr {

enum class Metric : std::uint8_t { euclidean = 0, max_norm = 1 };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& s);

struct KnnConfig {
  std::size_t c = 0;  // control-arm neighbor count, 1 <= c <= m
  std::size_t e = 0;  // experimental-arm neighbor count, 1 <= e <= n
  Metric metric = Metric::euclidean;
};

/// Neighbor counts that grow like size^(3/5), clamped to the arm sizes.
std::pair<std::size_t, std::size_t> default_neighbor_counts(std::size_t m, std::size_t n);

/// Indices of the k points nearest to the query, ordered by (distance,
/// original index) ascending. Equidistant points: the lower index is deemed
/// closer. Brute-force scan, fully deterministic.
std::vector<std::size_t> neighbors(std::span<const std::vector<double>> points,
                                   std::span<const double> query, std::size_t k,
                                   Metric metric = Metric::euclidean);

std::vector<std::size_t> neighbors(const std::vector<Subject>& subjects,
                                   std::span<const double> query, std::size_t k,
                                   Metric metric = Metric::euclidean);

/// Nearest-neighbor conditional U-statistic estimator of the pairwise
/// benefit. Immutable after construction; queries are thread-safe.
class KnnModel {
 public:
  KnnModel(TrialDataset data, ScoreSpec spec, KnnConfig config);

  /// Weighted mean pair score over the c nearest controls to x and the e
  /// nearest experimentals to u, uniform weights 1/(c*e). In [-1, 1].
  double delta_hat(std::span<const double> x, std::span<const double> u) const;

  /// delta_hat on the diagonal (x, x).
  double ipb_hat(std::span<const double> x) const;

  /// 1 iff ipb_hat(x) > 0 (strict; 0 at the boundary).
  int rule(std::span<const double> x) const;

  const TrialDataset& data() const { return data_; }
  const ScoreSpec& spec() const { return spec_; }
  const KnnConfig& config() const { return config_; }

 private:
  TrialDataset data_;
  ScoreSpec spec_;
  KnnConfig config_;
};

}  // namespace pitr
