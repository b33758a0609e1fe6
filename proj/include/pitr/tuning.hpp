#pragma once

#include <cstdint>
#include <vector>

#include "pitr/dataset.hpp"
#include "pitr/forest.hpp"

namespace pitr {

struct CvGrid {
  std::vector<std::size_t> n_trees;
  std::vector<std::size_t> mtry;
};

struct CvCell {
  std::size_t n_trees = 0;
  std::size_t mtry = 0;
  double log_loss = 0.0;
};

struct CvSelection {
  CvCell best;
  std::vector<CvCell> cells;  // grid order: n_trees outer, mtry inner
};

/// Stratified k-fold cross-validated grid selection for the forest, scored
/// by multiclass log-loss on held-out pair records. Ties keep the earlier
/// grid cell.
CvSelection cv_select_forest(const PairMatrix& pairs, const ForestConfig& base, const CvGrid& grid,
                             std::size_t folds = 5, std::uint64_t seed = 0,
                             std::size_t n_threads = 0);

}  // namespace pitr
