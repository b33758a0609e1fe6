#include "pitr/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pitr/rng.hpp"

namespace pitr {

CvSelection cv_select_forest(const PairMatrix& pairs, const ForestConfig& base, const CvGrid& grid,
                             std::size_t folds, std::uint64_t seed, std::size_t n_threads) {
  const std::size_t n = pairs.labels.size();
  if (folds < 2) throw ValidationError("cross-validation needs >= 2 folds");
  if (n < folds) throw ValidationError("not enough pair records for the requested folds");
  if (grid.n_trees.empty() || grid.mtry.empty())
    throw ValidationError("cv grid must list n_trees and mtry candidates");

  // Stratified assignment: shuffle within each label class, deal round-robin.
  std::vector<std::size_t> fold_of(n);
  Rng rng(derive_seed(seed, "cv/folds"));
  for (int label = -1; label <= 1; ++label) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (pairs.labels[i] == label) members.push_back(i);
    for (std::size_t i = 0; i + 1 < members.size(); ++i) {
      const std::size_t j = i + rng.uniform_index(members.size() - i);
      std::swap(members[i], members[j]);
    }
    for (std::size_t pos = 0; pos < members.size(); ++pos) fold_of[members[pos]] = pos % folds;
  }

  const std::size_t d2 = pairs.features.cols;
  CvSelection selection;
  selection.best.log_loss = std::numeric_limits<double>::infinity();
  for (std::size_t trees : grid.n_trees) {
    for (std::size_t mtry : grid.mtry) {
      double total_loss = 0.0;
      std::size_t total_count = 0;
      for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < n; ++i)
          (fold_of[i] == f ? test_rows : train_rows).push_back(i);
        if (train_rows.empty() || test_rows.empty()) continue;
        FeatureMatrix train(train_rows.size(), d2);
        std::vector<std::int8_t> labels(train_rows.size());
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
          for (std::size_t c = 0; c < d2; ++c)
            train.set(r, c, pairs.features.at(train_rows[r], c));
          labels[r] = pairs.labels[train_rows[r]];
        }
        ForestConfig config = base;
        config.n_trees = trees;
        config.mtry = mtry;
        config.seed = derive_seed(seed, "cv/fit", f);
        const RandomForestClassifier forest = fit_forest(config, train, labels, n_threads);
        std::vector<double> row(d2);
        for (std::size_t i : test_rows) {
          for (std::size_t c = 0; c < d2; ++c) row[c] = pairs.features.at(i, c);
          const ClassProbabilities proba = forest.predict_proba(row);
          double p = 0.0;
          switch (pairs.labels[i]) {
            case -1:
              p = proba.p_minus;
              break;
            case 0:
              p = proba.p_zero;
              break;
            default:
              p = proba.p_plus;
          }
          total_loss += -std::log(std::max(p, 1e-15));
          ++total_count;
        }
      }
      CvCell cell;
      cell.n_trees = trees;
      cell.mtry = mtry;
      cell.log_loss = total_loss / static_cast<double>(total_count);
      selection.cells.push_back(cell);
      if (cell.log_loss < selection.best.log_loss) selection.best = cell;
    }
  }
  return selection;
}

}  // namespace pitr
