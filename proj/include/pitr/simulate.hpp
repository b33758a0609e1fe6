#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pitr/dataset.hpp"
#include "pitr/itr.hpp"
#include "pitr/knn.hpp"
#include "pitr/metrics.hpp"
#include "pitr/score.hpp"

namespace pitr {

enum class Scenario : std::uint8_t { one = 1, two = 2 };

/// Synthetic-population parameters: a Haar rotation inducing the covariate
/// covariance O D O^T with D = diag(1.3, 1.6, ..., 3.4), plus six
/// coefficient vectors in [-1, 1]^9 (with intercept slot). Scenario one uses
/// them as the softmax blocks (alpha_11, alpha_10, alpha_01, beta_11,
/// beta_10, beta_01); scenario two as (alpha, beta, gamma, theta, xi, rho).
struct ScenarioParams {
  Scenario scenario = Scenario::one;
  std::uint64_t seed = 0;
  double delta = 3.0;  // scenario-two score threshold
  Eigen::Matrix<double, 8, 8> rotation;
  Eigen::Matrix<double, 8, 8> factor;  // rotation * D^(1/2); Z = factor * g
  std::array<std::array<double, 9>, 6> coefficients{};

  ScoreSpec score_spec;                             // the scenario's scorer
  std::vector<std::array<double, 2>> outcome_grid;  // all outcome values
  std::vector<std::int8_t> sigma_table;             // score of grid pairs (y, v)

  /// Rebuilds score_spec / outcome_grid / sigma_table from scenario and
  /// delta (needed after hand-editing fields in tests).
  void rebuild_tables();
};

ScenarioParams make_params(Scenario scenario, std::uint64_t seed, double delta = 3.0);

struct SimulatedSubject {
  std::array<double, 9> covariates{};  // X0 = 1, X1 normal, X2..X4 log-normal, X5..X8 binary
  std::array<double, 2> y0{};          // potential outcome under control
  std::array<double, 2> y1{};          // potential outcome under treatment
  double oracle_ipb = 0.0;
};

/// Latent Gaussian draws Z ~ N(0, O D O^T), one row per subject; exposed so
/// the transform and the covariance can be checked independently.
Eigen::MatrixXd draw_latent(const ScenarioParams& params, std::size_t size, std::uint64_t seed);

std::vector<SimulatedSubject> sample_population(const ScenarioParams& params, std::size_t size,
                                                std::uint64_t seed);

/// Outcome distribution over the grid for one covariate vector: scenario-one
/// softmax over the four categories, or the Bernoulli x Binomial(25) product
/// law. side 0 = control coefficients, side 1 = experimental.
std::vector<double> outcome_distribution(const ScenarioParams& params, std::span<const double> x,
                                         int side);

/// Exact pairwise benefit: sum over the outcome grid of sigma(y, v) P(y|x)
/// Q(v|u). 16 terms in scenario one, 52 x 52 in scenario two.
double oracle_delta(const ScenarioParams& params, std::span<const double> x,
                    std::span<const double> u);

/// Builds a two-arm dataset from a simulated population: the first half is
/// the control arm observing y0, the second half the experimental arm
/// observing y1.
TrialDataset to_trial_dataset(std::span<const SimulatedSubject> population);

enum class BenchmarkMethod : std::uint8_t { full_pairs = 0, bagged = 1, knn = 2 };

std::string to_string(BenchmarkMethod method);

struct BenchmarkConfig {
  Scenario scenario = Scenario::one;
  std::vector<std::size_t> train_sizes{400, 2000};
  std::size_t iterations = 20;
  std::size_t eval_size = 10000;
  std::uint64_t seed = 0;
  BenchmarkMethod method = BenchmarkMethod::full_pairs;
  ForestConfig forest;
  BaggingConfig bag;
  KnnConfig knn;  // c = e = 0 -> default neighbor counts
  std::size_t pair_budget = kDefaultPairBudget;
  std::size_t n_threads = 0;
  std::size_t calibration_bins = 20;
  double delta = 3.0;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct BenchmarkCell {
  std::size_t train_size = 0;
  MetricSummary rmse, aipb_bias, auc, mcc, sensitivity, specificity;
  MetricSummary confusion[2][2];
  std::vector<CalibrationBin> calibration;  // pooled over iterations
  std::vector<double> per_iteration_auc;
  std::vector<double> per_iteration_rmse;
  std::vector<double> per_iteration_sign_agreement;  // fraction rule == oracle rule
};

struct BenchmarkReport {
  BenchmarkConfig config;
  double oracle_aipb = 0.0;  // AIPB(r0, r_opt) under the oracle on the eval set
  std::vector<BenchmarkCell> cells;
};

/// One coefficient draw per campaign; a shared evaluation population; per
/// train size, `iterations` independent training draws fitted and scored
/// against the oracle.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

}  // namespace pitr
