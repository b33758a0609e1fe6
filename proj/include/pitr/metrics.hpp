#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitr/dataset.hpp"
#include "pitr/itr.hpp"

namespace pitr {

/// A treatment rule usable in AIPB estimation: constant 0/1, a fitted model,
/// or an explicit per-subject action table (indexed by pooled subject index,
/// control arm first).
struct RuleSpec {
  enum class Kind : std::uint8_t { constant_0, constant_1, model, table };

  Kind kind = Kind::constant_0;
  const ItrModel* model = nullptr;
  std::vector<int> table;

  int action(std::size_t pooled_index, std::span<const double> encoded_x) const;

  static RuleSpec constant0() { return RuleSpec{}; }
  static RuleSpec constant1();
  static RuleSpec from_model(const ItrModel& m);
  static RuleSpec from_table(std::vector<int> actions);
};

double rmse_ipb(std::span<const double> predicted, std::span<const double> oracle);

/// Mean over subjects of (s(x) - r(x)) * ipb(x); antisymmetric in (r, s).
double aipb_hat(std::span<const int> r_actions, std::span<const int> s_actions,
                std::span<const double> ipb_values);

/// Convenience overload: evaluates the rules on the pooled subjects of data.
double aipb_hat(const TrialDataset& data, const RuleSpec& r, const RuleSpec& s,
                std::span<const double> ipb_values);

using FitFn = std::function<ItrModel(const TrialDataset&)>;

/// Cross-fitted AIPB: subjects are partitioned into folds stratified by arm;
/// for each fold the model is fit on the other folds and supplies the ipb
/// values in-fold; fold estimates are averaged.
double aipb_crossfit(const TrialDataset& data, const ScoreSpec& spec, const RuleSpec& r,
                     const RuleSpec& s, std::size_t folds, const FitFn& fit,
                     std::uint64_t seed = 0);

struct BootstrapResult {
  double estimate = 0.0;
  double se = 0.0;
};

/// Nonparametric bootstrap resampling subjects with replacement within each
/// arm. The estimate is the statistic of the original data; se is the sample
/// standard deviation across replicates. A replicate whose statistic throws
/// is redrawn (at most 10 retries).
BootstrapResult bootstrap_se(const TrialDataset& data,
                             const std::function<double(const TrialDataset&)>& statistic,
                             std::size_t b_boot = 200, std::uint64_t seed = 0,
                             std::size_t n_threads = 0);

/// Row = oracle best treatment (0, 1); column = recommended treatment.
/// Entries are proportions of the total and sum to 1.
struct ConfusionMatrix {
  double p[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

struct ClassificationMetrics {
  std::optional<double> auc;          // rank-based, ties count 1/2
  std::optional<double> mcc;
  std::optional<double> sensitivity;  // TP / (TP + FN), positive class = 1
  std::optional<double> specificity;  // TN / (TN + FP)
  ConfusionMatrix confusion;
};

/// AUC/MCC are unset when the oracle labels are single-class.
ClassificationMetrics classification_metrics(std::span<const int> predicted_rule,
                                             std::span<const double> predicted_score,
                                             std::span<const int> oracle_rule);

struct CalibrationBin {
  double center = 0.0;
  double mean_predicted = 0.0;
  double mean_oracle = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins on [-1, 1] over the predicted values; empty bins are
/// omitted. Values outside [-1, 1] are an error.
std::vector<CalibrationBin> calibration_curve(std::span<const double> predicted,
                                              std::span<const double> oracle,
                                              std::size_t bins = 20);

struct GammaResult {
  double value = 0.0;
  std::vector<std::string> dropped_strata;  // not present in both arms
};

/// Stratified proportion in favor of treatment: the p_k^2-weighted
/// combination of within-stratum net benefits, p_k the pooled stratum
/// frequency. Strata labels align with the pooled subject order.
GammaResult gamma_discrete(std::span<const std::string> strata, const TrialDataset& data,
                           const ScoreSpec& spec);

}  // namespace pitr
