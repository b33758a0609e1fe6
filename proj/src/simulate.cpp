#include "pitr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pitr/rng.hpp"

namespace pitr {

namespace {

constexpr int kBinomialN = 25;

ScoreSpec scenario_score_spec(Scenario scenario, double delta) {
  ScoreSpec spec;
  if (scenario == Scenario::one) {
    spec.levels = {PriorityLevel{OutcomeKind::binary, Direction::higher_is_better, 0.0},
                   PriorityLevel{OutcomeKind::binary, Direction::higher_is_better, 0.0}};
  } else {
    spec.levels = {PriorityLevel{OutcomeKind::binary, Direction::higher_is_better, 0.0},
                   PriorityLevel{OutcomeKind::continuous, Direction::higher_is_better, delta}};
  }
  return spec;
}

std::vector<std::array<double, 2>> scenario_outcome_grid(Scenario scenario) {
  std::vector<std::array<double, 2>> grid;
  if (scenario == Scenario::one) {
    // Category order (1,1), (1,0), (0,1), (0,0); the last has the zero
    // coefficient block.
    grid = {{1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}};
  } else {
    grid.reserve(2 * (kBinomialN + 1));
    for (int y1 = 0; y1 <= 1; ++y1)
      for (int y2 = 0; y2 <= kBinomialN; ++y2)
        grid.push_back({static_cast<double>(y1), static_cast<double>(y2)});
  }
  return grid;
}

double dot9(const std::array<double, 9>& w, std::span<const double> x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < 9; ++k) acc += w[k] * x[k];
  return acc;
}

double logistic_of(double t) {
  // 1 / (1 + exp(t)); exp overflow saturates cleanly to 0.
  return 1.0 / (1.0 + std::exp(t));
}

const std::array<double, kBinomialN + 1>& binomial_coefficients() {
  static const std::array<double, kBinomialN + 1> coeffs = [] {
    std::array<double, kBinomialN + 1> c{};
    c[0] = 1.0;
    for (int k = 1; k <= kBinomialN; ++k)
      c[k] = c[k - 1] * static_cast<double>(kBinomialN - k + 1) / static_cast<double>(k);
    return c;
  }();
  return coeffs;
}

std::array<double, kBinomialN + 1> binomial_pmf(double p) {
  const std::array<double, kBinomialN + 1>& c = binomial_coefficients();
  std::array<double, kBinomialN + 1> pmf{};
  for (int k = 0; k <= kBinomialN; ++k)
    pmf[k] = c[k] * std::pow(p, k) * std::pow(1.0 - p, kBinomialN - k);
  return pmf;
}

std::array<double, 4> softmax_probs(const ScenarioParams& params, std::span<const double> x,
                                    int side) {
  // Blocks 0..2 (control) or 3..5 (experimental) are the coefficients of the
  // categories (1,1), (1,0), (0,1); category (0,0) has the zero vector.
  std::array<double, 4> logits{};
  const std::size_t base = side == 0 ? 0 : 3;
  for (std::size_t a = 0; a < 3; ++a) logits[a] = dot9(params.coefficients[base + a], x);
  logits[3] = 0.0;
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  std::array<double, 4> probs{};
  for (std::size_t a = 0; a < 4; ++a) {
    probs[a] = std::exp(logits[a] - max_logit);
    denom += probs[a];
  }
  for (double& p : probs) p /= denom;
  return probs;
}

struct ScenarioTwoLaw {
  double p1 = 0.0;                              // P(first outcome = 1)
  std::array<double, kBinomialN + 1> pmf0{};    // second outcome given first = 0
  std::array<double, kBinomialN + 1> pmf1{};    // second outcome given first = 1
};

ScenarioTwoLaw scenario_two_law(const ScenarioParams& params, std::span<const double> x,
                                int side) {
  const std::size_t base = side == 0 ? 0 : 3;
  ScenarioTwoLaw law;
  law.p1 = logistic_of(dot9(params.coefficients[base + 0], x));
  const double base_term = dot9(params.coefficients[base + 1], x);
  const double interaction = dot9(params.coefficients[base + 2], x);
  law.pmf0 = binomial_pmf(logistic_of(base_term));
  law.pmf1 = binomial_pmf(logistic_of(base_term + interaction));
  return law;
}

}  // namespace

void ScenarioParams::rebuild_tables() {
  score_spec = scenario_score_spec(scenario, delta);
  outcome_grid = scenario_outcome_grid(scenario);
  const std::size_t g = outcome_grid.size();
  sigma_table.assign(g * g, 0);
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = 0; b < g; ++b)
      sigma_table[a * g + b] =
          static_cast<std::int8_t>(score(score_spec, outcome_grid[a], outcome_grid[b]));
}

ScenarioParams make_params(Scenario scenario, std::uint64_t seed, double delta) {
  ScenarioParams params;
  params.scenario = scenario;
  params.seed = seed;
  params.delta = delta;

  // Haar rotation: QR of a standard Gaussian matrix with the signs of R's
  // diagonal folded into Q.
  Rng rot_rng(derive_seed(seed, "rotation"));
  Eigen::Matrix<double, 8, 8> gauss;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) gauss(i, j) = rot_rng.normal();
  const Eigen::HouseholderQR<Eigen::Matrix<double, 8, 8>> qr(gauss);
  Eigen::Matrix<double, 8, 8> q = qr.householderQ();
  const Eigen::Matrix<double, 8, 8> r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < 8; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  params.rotation = q;
  Eigen::Matrix<double, 8, 8> sqrt_d = Eigen::Matrix<double, 8, 8>::Zero();
  for (int i = 0; i < 8; ++i) sqrt_d(i, i) = std::sqrt(1.0 + 0.3 * (i + 1));
  params.factor = q * sqrt_d;

  Rng coef_rng(derive_seed(seed, "coefficients"));
  for (std::array<double, 9>& block : params.coefficients)
    for (double& w : block) w = coef_rng.uniform(-1.0, 1.0);

  params.rebuild_tables();
  return params;
}

Eigen::MatrixXd draw_latent(const ScenarioParams& params, std::size_t size, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "latent"));
  Eigen::MatrixXd z(static_cast<Eigen::Index>(size), 8);
  Eigen::Matrix<double, 8, 1> g;
  for (std::size_t i = 0; i < size; ++i) {
    for (int k = 0; k < 8; ++k) g(k) = rng.normal();
    z.row(static_cast<Eigen::Index>(i)) = (params.factor * g).transpose();
  }
  return z;
}

std::vector<double> outcome_distribution(const ScenarioParams& params, std::span<const double> x,
                                         int side) {
  if (x.size() != 9) throw ValidationError("covariate vector must have 9 entries (with intercept)");
  std::vector<double> dist(params.outcome_grid.size(), 0.0);
  if (params.scenario == Scenario::one) {
    const std::array<double, 4> probs = softmax_probs(params, x, side);
    std::copy(probs.begin(), probs.end(), dist.begin());
  } else {
    const ScenarioTwoLaw law = scenario_two_law(params, x, side);
    for (int y2 = 0; y2 <= kBinomialN; ++y2) {
      dist[static_cast<std::size_t>(y2)] = (1.0 - law.p1) * law.pmf0[y2];
      dist[static_cast<std::size_t>(kBinomialN + 1 + y2)] = law.p1 * law.pmf1[y2];
    }
  }
  return dist;
}

double oracle_delta(const ScenarioParams& params, std::span<const double> x,
                    std::span<const double> u) {
  const std::vector<double> p = outcome_distribution(params, x, 0);
  const std::vector<double> q = outcome_distribution(params, u, 1);
  const std::size_t g = params.outcome_grid.size();
  double acc = 0.0;
  for (std::size_t a = 0; a < g; ++a) {
    if (p[a] == 0.0) continue;
    const std::int8_t* row = params.sigma_table.data() + a * g;
    double inner = 0.0;
    for (std::size_t b = 0; b < g; ++b) inner += static_cast<double>(row[b]) * q[b];
    acc += p[a] * inner;
  }
  return acc;
}

std::vector<SimulatedSubject> sample_population(const ScenarioParams& params, std::size_t size,
                                                std::uint64_t seed) {
  if (size < 1) throw ValidationError("population size must be >= 1");
  const Eigen::MatrixXd z = draw_latent(params, size, seed);
  Rng out_rng(derive_seed(seed, "outcomes"));

  std::vector<SimulatedSubject> population(size);
  for (std::size_t i = 0; i < size; ++i) {
    SimulatedSubject& s = population[i];
    const auto row = z.row(static_cast<Eigen::Index>(i));
    s.covariates[0] = 1.0;
    s.covariates[1] = row(0);
    for (int k = 1; k <= 3; ++k) s.covariates[1 + k] = std::exp(row(k));
    for (int k = 4; k <= 7; ++k) s.covariates[1 + k] = row(k) > 0.0 ? 1.0 : 0.0;

    if (params.scenario == Scenario::one) {
      for (int side = 0; side < 2; ++side) {
        const std::array<double, 4> probs = softmax_probs(params, s.covariates, side);
        const double roll = out_rng.uniform01();
        double cum = 0.0;
        std::size_t cat = 3;
        for (std::size_t a = 0; a < 4; ++a) {
          cum += probs[a];
          if (roll < cum) {
            cat = a;
            break;
          }
        }
        (side == 0 ? s.y0 : s.y1) = params.outcome_grid[cat];
      }
    } else {
      for (int side = 0; side < 2; ++side) {
        const ScenarioTwoLaw law = scenario_two_law(params, s.covariates, side);
        const double first = out_rng.bernoulli(law.p1) ? 1.0 : 0.0;
        const std::array<double, kBinomialN + 1>& pmf = first == 1.0 ? law.pmf1 : law.pmf0;
        // Inversion on the conditional pmf keeps one uniform per outcome.
        const double roll = out_rng.uniform01();
        double cum = 0.0;
        int second = kBinomialN;
        for (int k = 0; k <= kBinomialN; ++k) {
          cum += pmf[k];
          if (roll < cum) {
            second = k;
            break;
          }
        }
        (side == 0 ? s.y0 : s.y1) = {first, static_cast<double>(second)};
      }
    }
    s.oracle_ipb = oracle_delta(params, s.covariates, s.covariates);
  }
  return population;
}

TrialDataset to_trial_dataset(std::span<const SimulatedSubject> population) {
  if (population.size() < 2) throw ValidationError("population too small to split into two arms");
  TrialDataset data;
  data.encoding = CovariateEncoding::numeric(
      {"x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"});
  const std::size_t half = population.size() / 2;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const SimulatedSubject& s = population[i];
    Subject subj;
    subj.covariates.assign(s.covariates.begin(), s.covariates.end());
    if (i < half) {
      subj.arm = Arm::control;
      subj.outcomes.assign(s.y0.begin(), s.y0.end());
      data.control.push_back(std::move(subj));
    } else {
      subj.arm = Arm::experimental;
      subj.outcomes.assign(s.y1.begin(), s.y1.end());
      data.experimental.push_back(std::move(subj));
    }
  }
  return data;
}

std::string to_string(BenchmarkMethod method) {
  switch (method) {
    case BenchmarkMethod::full_pairs:
      return "forest";
    case BenchmarkMethod::bagged:
      return "bagged";
    case BenchmarkMethod::knn:
      return "knn";
  }
  return "forest";
}

namespace {

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  if (config.iterations < 1) throw ValidationError("benchmark needs >= 1 iteration");
  if (config.eval_size < 2) throw ValidationError("benchmark needs an evaluation population");

  BenchmarkReport report;
  report.config = config;

  const ScenarioParams params =
      make_params(config.scenario, derive_seed(config.seed, "params"), config.delta);
  const std::vector<SimulatedSubject> eval =
      sample_population(params, config.eval_size, derive_seed(config.seed, "eval"));

  std::vector<double> oracle_ipb(eval.size());
  std::vector<int> oracle_rule(eval.size());
  double oracle_aipb = 0.0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    oracle_ipb[i] = eval[i].oracle_ipb;
    oracle_rule[i] = oracle_ipb[i] > 0.0 ? 1 : 0;
    if (oracle_rule[i] == 1) oracle_aipb += oracle_ipb[i];
  }
  oracle_aipb /= static_cast<double>(eval.size());
  report.oracle_aipb = oracle_aipb;

  for (std::size_t size : config.train_sizes) {
    BenchmarkCell cell;
    cell.train_size = size;
    std::vector<double> rmses, biases, aucs, mccs, sens, specs, agreements;
    std::vector<double> conf[2][2];
    std::vector<double> pooled_pred, pooled_oracle;
    const std::uint64_t size_seed = derive_seed(config.seed, "size", size);

    for (std::size_t it = 0; it < config.iterations; ++it) {
      const std::uint64_t iter_seed = derive_seed(size_seed, "iteration", it);
      const std::vector<SimulatedSubject> population =
          sample_population(params, size, derive_seed(iter_seed, "train"));
      const TrialDataset data = to_trial_dataset(population);

      ItrModel model;
      switch (config.method) {
        case BenchmarkMethod::full_pairs: {
          ForestConfig forest = config.forest;
          forest.seed = derive_seed(iter_seed, "forest");
          model = fit_full_pairs(data, params.score_spec, forest, config.pair_budget,
                                 config.n_threads);
          break;
        }
        case BenchmarkMethod::bagged: {
          ForestConfig forest = config.forest;
          forest.seed = derive_seed(iter_seed, "forest");
          BaggingConfig bag = config.bag;
          bag.seed = derive_seed(iter_seed, "bag");
          model = fit_bagged(data, params.score_spec, bag, forest, config.n_threads);
          break;
        }
        case BenchmarkMethod::knn: {
          model = fit_knn(data, params.score_spec, config.knn);
          break;
        }
      }

      std::vector<double> pred(eval.size());
      std::vector<int> pred_rule(eval.size());
      parallel_for(eval.size(), config.n_threads, [&](std::size_t i) {
        pred[i] = model.ipb_encoded(eval[i].covariates);
        pred_rule[i] = pred[i] > 0.0 ? 1 : 0;
      });

      rmses.push_back(rmse_ipb(pred, oracle_ipb));
      double est_aipb = 0.0;
      for (std::size_t i = 0; i < eval.size(); ++i)
        if (pred_rule[i] == 1) est_aipb += pred[i];
      est_aipb /= static_cast<double>(eval.size());
      biases.push_back(est_aipb - oracle_aipb);

      const ClassificationMetrics cm = classification_metrics(pred_rule, pred, oracle_rule);
      aucs.push_back(cm.auc.value_or(std::numeric_limits<double>::quiet_NaN()));
      mccs.push_back(cm.mcc.value_or(std::numeric_limits<double>::quiet_NaN()));
      sens.push_back(cm.sensitivity.value_or(std::numeric_limits<double>::quiet_NaN()));
      specs.push_back(cm.specificity.value_or(std::numeric_limits<double>::quiet_NaN()));
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) conf[a][b].push_back(cm.confusion.p[a][b]);

      double agree = 0.0;
      for (std::size_t i = 0; i < eval.size(); ++i)
        if (pred_rule[i] == oracle_rule[i]) agree += 1.0;
      agreements.push_back(agree / static_cast<double>(eval.size()));

      pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
      pooled_oracle.insert(pooled_oracle.end(), oracle_ipb.begin(), oracle_ipb.end());
    }

    cell.rmse = summarize(rmses);
    cell.aipb_bias = summarize(biases);
    cell.auc = summarize(aucs);
    cell.mcc = summarize(mccs);
    cell.sensitivity = summarize(sens);
    cell.specificity = summarize(specs);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) cell.confusion[a][b] = summarize(conf[a][b]);
    cell.calibration = calibration_curve(pooled_pred, pooled_oracle, config.calibration_bins);
    cell.per_iteration_auc = aucs;
    cell.per_iteration_rmse = rmses;
    cell.per_iteration_sign_agreement = agreements;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace pitr
