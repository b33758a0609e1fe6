#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "pitr/common.hpp"

namespace pitr {

/// Predicted probabilities for the pair labels -1 / 0 / +1; a simplex point.
struct ClassProbabilities {
  double p_minus = 0.0;
  double p_zero = 0.0;
  double p_plus = 0.0;
};

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t mtry = 0;      // 0 -> ceil(sqrt(n_features))
  std::size_t min_leaf = 5;  // minimum samples per leaf
  std::size_t max_depth = 0; // 0 -> unlimited
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// Multiclass probabilistic classifier over pair features (x, u). Any
/// implementation with a conforming predict_proba can back the ITR pipeline.
class PairClassifier {
 public:
  virtual ~PairClassifier() = default;
  virtual std::size_t feature_dim() const = 0;
  virtual ClassProbabilities predict_proba(std::span<const double> features) const = 0;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1: leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  double threshold = 0.0;
  std::array<double, 3> prob{};  // leaf class proportions for labels -1, 0, +1
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  const std::array<double, 3>& leaf_for(std::span<const double> x) const;
};

/// CART-style classification forest: Gini splits over mtry features sampled
/// per node, thresholds at midpoints between consecutive sorted unique
/// values, leaves hold class proportions. Predictions average the per-tree
/// leaf proportions. Bit-identical results for a given (seed, data) whatever
/// the thread count: tree t draws from the stream splitmix64(seed ^ t).
class RandomForestClassifier final : public PairClassifier {
 public:
  RandomForestClassifier() = default;
  RandomForestClassifier(ForestConfig config, std::size_t n_features, std::vector<Tree> trees)
      : config_(config), n_features_(n_features), trees_(std::move(trees)) {}

  std::size_t feature_dim() const override { return n_features_; }
  ClassProbabilities predict_proba(std::span<const double> features) const override;

  const ForestConfig& config() const { return config_; }
  const std::vector<Tree>& trees() const { return trees_; }

  void save(std::ostream& out) const;
  static RandomForestClassifier load(std::istream& in);

 private:
  ForestConfig config_;
  std::size_t n_features_ = 0;
  std::vector<Tree> trees_;
};

/// Fits the forest on features (column-major) with labels in {-1, 0, +1}.
/// n_threads = 0 uses the default; parallelism is across trees.
RandomForestClassifier fit_forest(const ForestConfig& config, const FeatureMatrix& features,
                                  std::span<const std::int8_t> labels, std::size_t n_threads = 0);

}  // namespace pitr
