#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitr/dataset.hpp"
#include "pitr/forest.hpp"
#include "pitr/knn.hpp"
#include "pitr/rng.hpp"
#include "pitr/score.hpp"

namespace pitr {

struct BaggingConfig {
  std::size_t b = 50;  // bag count
  double q = 0.0;      // subsampling probability; 0 -> min(m,n)^(-1/4)
  std::uint64_t seed = 0;
};

/// One subsample draw: alpha indexes the control arm (distinct, random
/// order), beta indexes the experimental arm (distinct, strictly
/// increasing); equal lengths.
struct Subsample {
  std::vector<std::size_t> alpha;
  std::vector<std::size_t> beta;
};

/// Draws the bag size from Binomial(min(m, n), q), redrawing until it is
/// >= 1, then alpha as a uniform injection into [0, m) and beta as a uniform
/// increasing injection into [0, n).
Subsample draw_subsample(std::size_t m, std::size_t n, double q, Rng& rng);

enum class ItrVariant : std::uint8_t { knn = 0, full_pairs = 1, bagged = 2 };

std::string to_string(ItrVariant variant);

/// A fitted individualized treatment rule model: exposes the estimated
/// individualized pairwise benefit ipb(x) in [-1, 1] and the induced rule
/// 1{ipb(x) > 0}. Immutable after fitting; prediction is thread-safe.
class ItrModel {
 public:
  ItrModel() = default;

  ItrVariant variant() const { return variant_; }
  const ScoreSpec& score_spec() const { return spec_; }
  const CovariateEncoding& encoding() const { return encoding_; }
  const std::vector<RandomForestClassifier>& learners() const { return learners_; }
  const std::optional<BaggingConfig>& bagging() const { return bag_; }
  const KnnModel* knn() const { return knn_ ? &*knn_ : nullptr; }

  /// IPB at an already-encoded covariate vector (the diagonal pair (x, x)).
  double ipb_encoded(std::span<const double> x) const;

  /// IPB for a raw covariate row (one string cell per encoding column).
  double ipb(std::span<const std::string> raw_row, std::size_t* unseen_count = nullptr) const;

  int rule_encoded(std::span<const double> x) const { return ipb_encoded(x) > 0.0 ? 1 : 0; }
  int rule(std::span<const std::string> raw_row, std::size_t* unseen_count = nullptr) const {
    return ipb(raw_row, unseen_count) > 0.0 ? 1 : 0;
  }

  void save(const std::string& path) const;
  static ItrModel load(const std::string& path);

  /// Assembles a classifier-backed model from parts (used by fits and tests).
  static ItrModel from_learners(ItrVariant variant, ScoreSpec spec, CovariateEncoding encoding,
                                std::vector<RandomForestClassifier> learners,
                                std::optional<BaggingConfig> bag = std::nullopt);
  static ItrModel from_knn(KnnModel knn);

 private:
  ItrVariant variant_ = ItrVariant::full_pairs;
  ScoreSpec spec_;
  CovariateEncoding encoding_;
  std::vector<RandomForestClassifier> learners_;
  std::optional<BaggingConfig> bag_;
  std::optional<KnnModel> knn_;
};

/// Trains the classifier on all m*n pair records with features concat(x, u).
ItrModel fit_full_pairs(const TrialDataset& data, const ScoreSpec& spec,
                        const ForestConfig& config,
                        std::size_t pair_budget = kDefaultPairBudget, std::size_t n_threads = 0);

/// Bagging meta-learner: b base learners, each trained on a matched-pair
/// subsample (alpha against sorted beta); ipb averages the per-bag
/// p_plus - p_minus. Bag v draws from streams derived off bag.seed and v.
ItrModel fit_bagged(const TrialDataset& data, const ScoreSpec& spec, const BaggingConfig& bag,
                    const ForestConfig& base, std::size_t n_threads = 0);

ItrModel fit_knn(const TrialDataset& data, const ScoreSpec& spec, const KnnConfig& config);

}  // namespace pitr
