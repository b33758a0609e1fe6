#include "pitr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pitr/rng.hpp"

namespace pitr {

int RuleSpec::action(std::size_t pooled_index, std::span<const double> encoded_x) const {
  switch (kind) {
    case Kind::constant_0:
      return 0;
    case Kind::constant_1:
      return 1;
    case Kind::model:
      return model->rule_encoded(encoded_x);
    case Kind::table:
      if (pooled_index >= table.size()) throw ValidationError("rule table too short");
      return table[pooled_index];
  }
  return 0;
}

RuleSpec RuleSpec::constant1() {
  RuleSpec r;
  r.kind = Kind::constant_1;
  return r;
}

RuleSpec RuleSpec::from_model(const ItrModel& m) {
  RuleSpec r;
  r.kind = Kind::model;
  r.model = &m;
  return r;
}

RuleSpec RuleSpec::from_table(std::vector<int> actions) {
  for (int a : actions)
    if (a != 0 && a != 1) throw ValidationError("rule actions must be 0 or 1");
  RuleSpec r;
  r.kind = Kind::table;
  r.table = std::move(actions);
  return r;
}

double rmse_ipb(std::span<const double> predicted, std::span<const double> oracle) {
  if (predicted.size() != oracle.size() || predicted.empty())
    throw ValidationError("rmse needs two aligned nonempty sequences");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double diff = predicted[i] - oracle[i];
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(predicted.size()));
}

double aipb_hat(std::span<const int> r_actions, std::span<const int> s_actions,
                std::span<const double> ipb_values) {
  if (r_actions.size() != ipb_values.size() || s_actions.size() != ipb_values.size() ||
      ipb_values.empty())
    throw ValidationError("aipb_hat needs aligned nonempty sequences");
  double acc = 0.0;
  for (std::size_t i = 0; i < ipb_values.size(); ++i)
    acc += static_cast<double>(s_actions[i] - r_actions[i]) * ipb_values[i];
  return acc / static_cast<double>(ipb_values.size());
}

double aipb_hat(const TrialDataset& data, const RuleSpec& r, const RuleSpec& s,
                std::span<const double> ipb_values) {
  const std::size_t total = data.pooled_size();
  if (ipb_values.size() != total)
    throw ValidationError("ipb values are not aligned with the subjects");
  std::vector<int> ra(total), sa(total);
  for (std::size_t i = 0; i < total; ++i) {
    const Subject& subj = data.pooled(i);
    ra[i] = r.action(i, subj.covariates);
    sa[i] = s.action(i, subj.covariates);
  }
  return aipb_hat(ra, sa, ipb_values);
}

double aipb_crossfit(const TrialDataset& data, const ScoreSpec& spec, const RuleSpec& r,
                     const RuleSpec& s, std::size_t folds, const FitFn& fit, std::uint64_t seed) {
  (void)spec;
  if (folds < 2) throw ValidationError("cross-fitting needs >= 2 folds");
  if (data.m() < folds || data.n() < folds)
    throw ValidationError("both arms need at least one subject per fold");

  // Stratified fold assignment: shuffle each arm, deal round-robin.
  const auto assign = [&](std::size_t count, std::string_view name) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, name));
    for (std::size_t i = 0; i + 1 < count; ++i) {
      const std::size_t j = i + rng.uniform_index(count - i);
      std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> fold(count);
    for (std::size_t pos = 0; pos < count; ++pos) fold[order[pos]] = pos % folds;
    return fold;
  };
  const std::vector<std::size_t> fold_c = assign(data.m(), "crossfit/control");
  const std::vector<std::size_t> fold_e = assign(data.n(), "crossfit/experimental");

  double acc = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    TrialDataset train;
    train.encoding = data.encoding;
    std::vector<std::size_t> heldout;  // pooled indices
    for (std::size_t i = 0; i < data.m(); ++i) {
      if (fold_c[i] == f)
        heldout.push_back(i);
      else
        train.control.push_back(data.control[i]);
    }
    for (std::size_t j = 0; j < data.n(); ++j) {
      if (fold_e[j] == f)
        heldout.push_back(data.m() + j);
      else
        train.experimental.push_back(data.experimental[j]);
    }
    const ItrModel model = fit(train);
    double fold_acc = 0.0;
    for (std::size_t idx : heldout) {
      const Subject& subj = data.pooled(idx);
      const double ipb = model.ipb_encoded(subj.covariates);
      fold_acc += static_cast<double>(s.action(idx, subj.covariates) -
                                      r.action(idx, subj.covariates)) *
                  ipb;
    }
    acc += fold_acc / static_cast<double>(heldout.size());
  }
  return acc / static_cast<double>(folds);
}

BootstrapResult bootstrap_se(const TrialDataset& data,
                             const std::function<double(const TrialDataset&)>& statistic,
                             std::size_t b_boot, std::uint64_t seed, std::size_t n_threads) {
  if (b_boot < 2) throw ValidationError("bootstrap needs >= 2 replicates");
  BootstrapResult result;
  result.estimate = statistic(data);

  std::vector<double> replicates(b_boot);
  parallel_for(b_boot, n_threads, [&](std::size_t rep) {
    for (std::size_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, "bootstrap", rep * 16 + attempt));
      TrialDataset resampled;
      resampled.encoding = data.encoding;
      resampled.control.reserve(data.m());
      resampled.experimental.reserve(data.n());
      for (std::size_t i = 0; i < data.m(); ++i)
        resampled.control.push_back(data.control[rng.uniform_index(data.m())]);
      for (std::size_t j = 0; j < data.n(); ++j)
        resampled.experimental.push_back(data.experimental[rng.uniform_index(data.n())]);
      try {
        replicates[rep] = statistic(resampled);
        return;
      } catch (const std::exception&) {
        if (attempt >= 10)
          throw ValidationError("bootstrap statistic failed on 10 consecutive redraws");
      }
    }
  });

  double mean = 0.0;
  for (double v : replicates) mean += v;
  mean /= static_cast<double>(b_boot);
  double ss = 0.0;
  for (double v : replicates) ss += (v - mean) * (v - mean);
  result.se = std::sqrt(ss / static_cast<double>(b_boot - 1));
  return result;
}

ClassificationMetrics classification_metrics(std::span<const int> predicted_rule,
                                             std::span<const double> predicted_score,
                                             std::span<const int> oracle_rule) {
  const std::size_t n = oracle_rule.size();
  if (predicted_rule.size() != n || predicted_score.size() != n || n == 0)
    throw ValidationError("classification metrics need aligned nonempty sequences");

  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int o = oracle_rule[i], p = predicted_rule[i];
    if (o != 0 && o != 1) throw ValidationError("oracle rule values must be 0 or 1");
    if (p != 0 && p != 1) throw ValidationError("predicted rule values must be 0 or 1");
    if (o == 1)
      (p == 1 ? tp : fn) += 1;
    else
      (p == 1 ? fp : tn) += 1;
  }

  ClassificationMetrics out;
  const double total = static_cast<double>(n);
  out.confusion.p[0][0] = tn / total;
  out.confusion.p[0][1] = fp / total;
  out.confusion.p[1][0] = fn / total;
  out.confusion.p[1][1] = tp / total;
  if (tp + fn > 0) out.sensitivity = tp / (tp + fn);
  if (tn + fp > 0) out.specificity = tn / (tn + fp);

  const bool both_classes = (tp + fn > 0) && (tn + fp > 0);
  if (both_classes) {
    // AUC via midranks (Mann-Whitney; tied scores count 1/2).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return predicted_score[a] < predicted_score[b];
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && predicted_score[order[j]] == predicted_score[order[i]]) ++j;
      const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
      for (std::size_t k = i; k < j; ++k)
        if (oracle_rule[order[k]] == 1) rank_sum_pos += midrank;
      i = j;
    }
    const double n_pos = tp + fn, n_neg = tn + fp;
    out.auc = (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);

    const double denom =
        std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    out.mcc = denom > 0.0 ? (tp * tn - fp * fn) / denom : 0.0;
  }
  return out;
}

std::vector<CalibrationBin> calibration_curve(std::span<const double> predicted,
                                              std::span<const double> oracle, std::size_t bins) {
  if (bins < 2) throw ValidationError("calibration needs >= 2 bins");
  if (predicted.size() != oracle.size() || predicted.empty())
    throw ValidationError("calibration needs aligned nonempty sequences");
  const double width = 2.0 / static_cast<double>(bins);
  std::vector<CalibrationBin> table(bins);
  for (std::size_t b = 0; b < bins; ++b) table[b].center = -1.0 + width * (b + 0.5);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = predicted[i];
    if (!(p >= -1.0 && p <= 1.0) || !(oracle[i] >= -1.0 && oracle[i] <= 1.0))
      throw ValidationError("calibration values must lie in [-1, 1]");
    auto b = static_cast<std::size_t>((p + 1.0) / width);
    if (b >= bins) b = bins - 1;  // p == 1 lands in the last bin
    table[b].mean_predicted += p;
    table[b].mean_oracle += oracle[i];
    table[b].count += 1;
  }
  std::vector<CalibrationBin> out;
  for (CalibrationBin& bin : table) {
    if (bin.count == 0) continue;
    bin.mean_predicted /= static_cast<double>(bin.count);
    bin.mean_oracle /= static_cast<double>(bin.count);
    out.push_back(bin);
  }
  return out;
}

GammaResult gamma_discrete(std::span<const std::string> strata, const TrialDataset& data,
                           const ScoreSpec& spec) {
  const std::size_t total = data.pooled_size();
  if (strata.size() != total)
    throw ValidationError("stratum labels are not aligned with the subjects");

  struct StratumData {
    std::vector<std::size_t> control, experimental;
  };
  std::map<std::string, StratumData> groups;
  for (std::size_t i = 0; i < total; ++i) {
    StratumData& g = groups[std::string(strata[i])];
    if (i < data.m())
      g.control.push_back(i);
    else
      g.experimental.push_back(i - data.m());
  }

  GammaResult result;
  double numerator = 0.0, denominator = 0.0;
  for (const auto& [label, g] : groups) {
    if (g.control.empty() || g.experimental.empty()) {
      result.dropped_strata.push_back(label);
      continue;
    }
    const double pk =
        static_cast<double>(g.control.size() + g.experimental.size()) / static_cast<double>(total);
    std::int64_t sum = 0;
    for (std::size_t i : g.control)
      for (std::size_t j : g.experimental)
        sum += score(spec, data.control[i].outcomes, data.experimental[j].outcomes);
    const double net = static_cast<double>(sum) / (static_cast<double>(g.control.size()) *
                                                   static_cast<double>(g.experimental.size()));
    numerator += pk * pk * net;
    denominator += pk * pk;
  }
  if (denominator == 0.0)
    throw ValidationError("no stratum is present in both arms");
  result.value = numerator / denominator;
  return result;
}

}  // namespace pitr
