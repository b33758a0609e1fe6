#include "pitr/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pitr/rng.hpp"
#include "pitr/serialize.hpp"

namespace pitr {

const std::array<double, 3>& Tree::leaf_for(std::span<const double> x) const {
  std::int32_t id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(id)].prob;
}

ClassProbabilities RandomForestClassifier::predict_proba(std::span<const double> features) const {
  if (features.size() != n_features_)
    throw ValidationError("feature vector has " + std::to_string(features.size()) +
                          " entries, model expects " + std::to_string(n_features_));
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  for (const Tree& tree : trees_) {
    const std::array<double, 3>& p = tree.leaf_for(features);
    acc[0] += p[0];
    acc[1] += p[1];
    acc[2] += p[2];
  }
  const double inv = 1.0 / static_cast<double>(trees_.size());
  return ClassProbabilities{acc[0] * inv, acc[1] * inv, acc[2] * inv};
}

namespace {

struct LevelNode {
  std::int32_t node_id = 0;
  std::array<std::uint64_t, 3> counts{};
  std::uint64_t size = 0;
};

struct SlotState {
  // Scan temporaries for the current feature pass.
  bool started = false;
  double prev_value = 0.0;
  std::array<std::uint64_t, 3> left{};
  std::uint64_t left_size = 0;
  // Best split found so far across features (ascending feature order with
  // strict improvement implements the lowest-feature, lowest-threshold tie
  // rule).
  double best_score = -1.0;
  std::int32_t best_feature = -1;
  double best_threshold = 0.0;
  std::array<std::uint64_t, 3> best_left{};
  std::uint64_t best_left_size = 0;
};

double children_score(const std::array<std::uint64_t, 3>& left, std::uint64_t left_size,
                      const std::array<std::uint64_t, 3>& total, std::uint64_t total_size) {
  // Minimizing the weighted Gini of the children is equivalent to maximizing
  // sum_c lc^2/l_n + sum_c rc^2/r_n.
  const std::uint64_t right_size = total_size - left_size;
  double l = 0.0, r = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double lc = static_cast<double>(left[c]);
    const double rc = static_cast<double>(total[c] - left[c]);
    l += lc * lc;
    r += rc * rc;
  }
  return l / static_cast<double>(left_size) + r / static_cast<double>(right_size);
}

class TreeBuilder {
 public:
  TreeBuilder(const ForestConfig& config, const FeatureMatrix& features,
              std::span<const std::uint8_t> classes, std::span<const std::uint32_t> sorted_idx,
              std::size_t mtry)
      : config_(config),
        features_(features),
        classes_(classes),
        sorted_idx_(sorted_idx),
        mtry_(mtry),
        n_(features.rows),
        p_(features.cols) {}

  Tree build(std::uint64_t tree_index) {
    Rng rng(config_.seed ^ tree_index);
    std::vector<std::uint32_t> weight(n_, 0);
    if (config_.bootstrap) {
      for (std::size_t k = 0; k < n_; ++k) ++weight[rng.uniform_index(n_)];
    } else {
      std::fill(weight.begin(), weight.end(), 1u);
    }

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<std::int32_t> node_of(n_, -1);
    LevelNode root;
    root.node_id = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (weight[i] == 0) continue;
      node_of[i] = 0;
      root.counts[classes_[i]] += weight[i];
      root.size += weight[i];
    }
    std::vector<LevelNode> level{root};

    std::vector<std::size_t> feature_scratch(p_);
    std::size_t depth = 0;
    while (!level.empty()) {
      // Phase 1: finalize leaves, sample candidate features for the rest.
      std::vector<LevelNode> active;
      std::vector<std::uint8_t> sampled;      // active.size() x p_
      std::vector<std::uint8_t> feature_used(p_, 0);
      for (const LevelNode& ln : level) {
        const bool pure = (ln.counts[0] == ln.size) || (ln.counts[1] == ln.size) ||
                          (ln.counts[2] == ln.size);
        const bool depth_stop = config_.max_depth > 0 && depth >= config_.max_depth;
        if (pure || depth_stop || ln.size < 2 * config_.min_leaf) {
          finalize_leaf(tree, ln);
          continue;
        }
        std::iota(feature_scratch.begin(), feature_scratch.end(), std::size_t{0});
        sampled.resize(sampled.size() + p_, 0);
        std::uint8_t* mask = sampled.data() + sampled.size() - p_;
        for (std::size_t k = 0; k < mtry_; ++k) {
          const std::size_t j = k + rng.uniform_index(p_ - k);
          std::swap(feature_scratch[k], feature_scratch[j]);
          mask[feature_scratch[k]] = 1;
          feature_used[feature_scratch[k]] = 1;
        }
        active.push_back(ln);
      }
      if (active.empty()) break;

      std::vector<std::int32_t> slot_of_node(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < active.size(); ++s)
        slot_of_node[static_cast<std::size_t>(active[s].node_id)] = static_cast<std::int32_t>(s);

      // Phase 2: one pass per used feature over the presorted order,
      // accumulating left counts per slot and scoring candidate midpoints.
      std::vector<SlotState> state(active.size());
      for (std::size_t f = 0; f < p_; ++f) {
        if (!feature_used[f]) continue;
        for (SlotState& st : state) st.started = false;
        const double* col = features_.values.data() + f * n_;
        const std::uint32_t* order = sorted_idx_.data() + f * n_;
        for (std::size_t r = 0; r < n_; ++r) {
          const std::uint32_t i = order[r];
          const std::uint32_t w = weight[i];
          if (w == 0) continue;
          const std::int32_t nd = node_of[i];
          if (nd < 0) continue;
          const std::int32_t slot = slot_of_node[static_cast<std::size_t>(nd)];
          if (slot < 0 || !sampled[static_cast<std::size_t>(slot) * p_ + f]) continue;
          SlotState& st = state[static_cast<std::size_t>(slot)];
          const double v = col[i];
          if (!st.started) {
            st.started = true;
            st.prev_value = v;
            st.left = {0, 0, 0};
            st.left_size = 0;
          } else if (v != st.prev_value) {
            const LevelNode& ln = active[static_cast<std::size_t>(slot)];
            if (st.left_size >= config_.min_leaf && ln.size - st.left_size >= config_.min_leaf) {
              const double score = children_score(st.left, st.left_size, ln.counts, ln.size);
              if (score > st.best_score) {
                st.best_score = score;
                st.best_feature = static_cast<std::int32_t>(f);
                st.best_threshold = 0.5 * (st.prev_value + v);
                st.best_left = st.left;
                st.best_left_size = st.left_size;
              }
            }
            st.prev_value = v;
          }
          st.left[classes_[i]] += w;
          st.left_size += w;
        }
      }

      // Phase 3: materialize children (or finalize when no valid split).
      std::vector<LevelNode> next;
      for (std::size_t s = 0; s < active.size(); ++s) {
        const LevelNode& ln = active[s];
        const SlotState& st = state[s];
        if (st.best_feature < 0) {
          finalize_leaf(tree, ln);
          slot_of_node[static_cast<std::size_t>(ln.node_id)] = -1;
          continue;
        }
        const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
        const std::int32_t right_id = left_id + 1;
        {
          // Write the parent before growing the vector: emplace_back may
          // reallocate and invalidate references into tree.nodes.
          TreeNode& parent = tree.nodes[static_cast<std::size_t>(ln.node_id)];
          parent.feature = st.best_feature;
          parent.threshold = st.best_threshold;
          parent.left = left_id;
          parent.right = right_id;
        }
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        LevelNode left_child, right_child;
        left_child.node_id = left_id;
        left_child.counts = st.best_left;
        left_child.size = st.best_left_size;
        right_child.node_id = right_id;
        for (int c = 0; c < 3; ++c) right_child.counts[c] = ln.counts[c] - st.best_left[c];
        right_child.size = ln.size - st.best_left_size;
        next.push_back(left_child);
        next.push_back(right_child);
      }

      // Phase 4: route samples to their children.
      for (std::size_t i = 0; i < n_; ++i) {
        if (weight[i] == 0) continue;
        const std::int32_t nd = node_of[i];
        if (nd < 0) continue;
        if (static_cast<std::size_t>(nd) >= slot_of_node.size()) continue;
        const std::int32_t slot = slot_of_node[static_cast<std::size_t>(nd)];
        if (slot < 0) continue;
        const TreeNode& parent = tree.nodes[static_cast<std::size_t>(nd)];
        if (parent.feature < 0) continue;
        const double v = features_.at(i, static_cast<std::size_t>(parent.feature));
        node_of[i] = v <= parent.threshold ? parent.left : parent.right;
      }

      level = std::move(next);
      ++depth;
    }
    return tree;
  }

 private:
  static void finalize_leaf(Tree& tree, const LevelNode& ln) {
    TreeNode& node = tree.nodes[static_cast<std::size_t>(ln.node_id)];
    node.feature = -1;
    const double inv = 1.0 / static_cast<double>(ln.size);
    for (int c = 0; c < 3; ++c) node.prob[c] = static_cast<double>(ln.counts[c]) * inv;
  }

  const ForestConfig& config_;
  const FeatureMatrix& features_;
  std::span<const std::uint8_t> classes_;
  std::span<const std::uint32_t> sorted_idx_;
  std::size_t mtry_;
  std::size_t n_;
  std::size_t p_;
};

}  // namespace

RandomForestClassifier fit_forest(const ForestConfig& config, const FeatureMatrix& features,
                                  std::span<const std::int8_t> labels, std::size_t n_threads) {
  const std::size_t n = features.rows;
  const std::size_t p = features.cols;
  if (n == 0) throw ValidationError("cannot fit a forest on an empty sample");
  if (p == 0) throw ValidationError("cannot fit a forest with zero features");
  if (labels.size() != n) throw ValidationError("label count does not match feature rows");
  if (config.n_trees < 1) throw ValidationError("n_trees must be >= 1");
  if (config.min_leaf < 1) throw ValidationError("min_leaf must be >= 1");
  const std::size_t mtry =
      config.mtry == 0
          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))))
          : config.mtry;
  if (mtry < 1 || mtry > p)
    throw ValidationError("mtry=" + std::to_string(mtry) + " out of range [1, " +
                          std::to_string(p) + "]");
  for (double v : features.values)
    if (!std::isfinite(v)) throw ValidationError("non-finite feature value");

  std::vector<std::uint8_t> classes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int lab = labels[i];
    if (lab < -1 || lab > 1) throw ValidationError("labels must be in {-1, 0, +1}");
    classes[i] = static_cast<std::uint8_t>(lab + 1);
  }

  // Presort every feature once for the whole forest; per-node split scans
  // then run in a single pass over this order.
  std::vector<std::uint32_t> sorted_idx(p * n);
  parallel_for(p, n_threads, [&](std::size_t f) {
    std::uint32_t* order = sorted_idx.data() + f * n;
    std::iota(order, order + n, 0u);
    const double* col = features.values.data() + f * n;
    std::sort(order, order + n, [col](std::uint32_t a, std::uint32_t b) {
      if (col[a] != col[b]) return col[a] < col[b];
      return a < b;
    });
  });

  ForestConfig effective = config;
  effective.mtry = mtry;
  std::vector<Tree> trees(config.n_trees);
  parallel_for(config.n_trees, n_threads, [&](std::size_t t) {
    TreeBuilder builder(effective, features, classes, sorted_idx, mtry);
    trees[t] = builder.build(static_cast<std::uint64_t>(t));
  });
  return RandomForestClassifier(effective, p, std::move(trees));
}

void RandomForestClassifier::save(std::ostream& out) const {
  bin::write_u64(out, config_.n_trees);
  bin::write_u64(out, config_.mtry);
  bin::write_u64(out, config_.min_leaf);
  bin::write_u64(out, config_.max_depth);
  bin::write_u8(out, config_.bootstrap ? 1 : 0);
  bin::write_u64(out, config_.seed);
  bin::write_u64(out, n_features_);
  bin::write_u64(out, trees_.size());
  for (const Tree& tree : trees_) {
    bin::write_u64(out, tree.nodes.size());
    for (const TreeNode& node : tree.nodes) {
      bin::write_i32(out, node.feature);
      bin::write_i32(out, node.left);
      bin::write_i32(out, node.right);
      bin::write_f64(out, node.threshold);
      for (int c = 0; c < 3; ++c) bin::write_f64(out, node.prob[c]);
    }
  }
}

RandomForestClassifier RandomForestClassifier::load(std::istream& in) {
  ForestConfig config;
  config.n_trees = bin::read_u64(in);
  config.mtry = bin::read_u64(in);
  config.min_leaf = bin::read_u64(in);
  config.max_depth = bin::read_u64(in);
  config.bootstrap = bin::read_u8(in) != 0;
  config.seed = bin::read_u64(in);
  const std::size_t n_features = bin::read_u64(in);
  const std::size_t n_trees = bin::read_u64(in);
  std::vector<Tree> trees(n_trees);
  for (Tree& tree : trees) {
    tree.nodes.resize(bin::read_u64(in));
    for (TreeNode& node : tree.nodes) {
      node.feature = bin::read_i32(in);
      node.left = bin::read_i32(in);
      node.right = bin::read_i32(in);
      node.threshold = bin::read_f64(in);
      for (int c = 0; c < 3; ++c) node.prob[c] = bin::read_f64(in);
    }
  }
  return RandomForestClassifier(config, n_features, std::move(trees));
}

}  // namespace pitr
