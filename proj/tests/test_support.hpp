#pragma once

// Shared helpers for the test suites: independent brute-force oracles and
// small dataset builders. The oracles deliberately avoid the library code
// paths they are used to check.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "pitr/dataset.hpp"
#include "pitr/score.hpp"

namespace testsup {

// Brute-force net benefit: enumerate every cross-arm pair, accumulate the
// integer score sum, divide once.
inline double brute_net_benefit(const pitr::TrialDataset& data, const pitr::ScoreSpec& spec) {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < data.m(); ++i)
    for (std::size_t j = 0; j < data.n(); ++j)
      sum += pitr::score(spec, data.control[i].outcomes, data.experimental[j].outcomes);
  return static_cast<double>(sum) /
         (static_cast<double>(data.m()) * static_cast<double>(data.n()));
}

// Neighbor set via explicit (distance, index) ranking with stable_sort;
// returns a 0/1 membership mask over the points.
inline std::vector<int> brute_knn_mask(const std::vector<pitr::Subject>& points,
                                       const std::vector<double>& query, std::size_t k,
                                       bool max_norm) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double dist = 0.0;
    if (max_norm) {
      for (std::size_t c = 0; c < query.size(); ++c)
        dist = std::max(dist, std::abs(points[i].covariates[c] - query[c]));
    } else {
      for (std::size_t c = 0; c < query.size(); ++c) {
        const double diff = points[i].covariates[c] - query[c];
        dist += diff * diff;
      }
    }
    ranked.emplace_back(dist, i);
  }
  std::stable_sort(ranked.begin(), ranked.end());  // pair ordering breaks ties by index
  std::vector<int> mask(points.size(), 0);
  for (std::size_t r = 0; r < k; ++r) mask[ranked[r].second] = 1;
  return mask;
}

// Brute-force conditional U-statistic: enumerate the full weight matrix
// (numerators over the common denominator c*e) and the pair scores.
inline double brute_delta_hat(const pitr::TrialDataset& data, const pitr::ScoreSpec& spec,
                              const std::vector<double>& x, const std::vector<double>& u,
                              std::size_t c, std::size_t e, bool max_norm) {
  const std::vector<int> in_c = brute_knn_mask(data.control, x, c, max_norm);
  const std::vector<int> in_e = brute_knn_mask(data.experimental, u, e, max_norm);
  std::int64_t weight_total = 0;
  std::int64_t numerator = 0;
  for (std::size_t i = 0; i < data.m(); ++i) {
    for (std::size_t j = 0; j < data.n(); ++j) {
      const int w = in_c[i] * in_e[j];
      weight_total += w;
      if (w != 0)
        numerator += pitr::score(spec, data.control[i].outcomes, data.experimental[j].outcomes);
    }
  }
  // Sanity of the weight matrix itself: the c*e selected pairs carry 1/(c*e).
  if (weight_total != static_cast<std::int64_t>(c * e)) return std::nan("");
  return static_cast<double>(numerator) / (static_cast<double>(c) * static_cast<double>(e));
}

inline pitr::ScoreSpec single_binary_spec() {
  pitr::ScoreSpec spec;
  spec.levels = {{pitr::OutcomeKind::binary, pitr::Direction::higher_is_better, 0.0}};
  return spec;
}

inline pitr::ScoreSpec two_binary_spec() {
  pitr::ScoreSpec spec;
  spec.levels = {{pitr::OutcomeKind::binary, pitr::Direction::higher_is_better, 0.0},
                 {pitr::OutcomeKind::binary, pitr::Direction::higher_is_better, 0.0}};
  return spec;
}

// Random two-arm dataset with the given outcome generator.
template <typename OutcomeFn>
pitr::TrialDataset random_dataset(std::mt19937_64& rng, std::size_t m, std::size_t n,
                                  std::size_t d, std::size_t outcome_dim, OutcomeFn&& outcome) {
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  pitr::TrialDataset data;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < d; ++c) names.push_back("x" + std::to_string(c));
  data.encoding = pitr::CovariateEncoding::numeric(names);
  const auto make_subject = [&](pitr::Arm arm) {
    pitr::Subject s;
    s.arm = arm;
    for (std::size_t c = 0; c < d; ++c) s.covariates.push_back(unif(rng));
    for (std::size_t k = 0; k < outcome_dim; ++k) s.outcomes.push_back(outcome(rng, k));
    return s;
  };
  for (std::size_t i = 0; i < m; ++i) data.control.push_back(make_subject(pitr::Arm::control));
  for (std::size_t j = 0; j < n; ++j)
    data.experimental.push_back(make_subject(pitr::Arm::experimental));
  return data;
}

inline pitr::TrialDataset random_binary_dataset(std::mt19937_64& rng, std::size_t m, std::size_t n,
                                                std::size_t d, std::size_t outcome_dim) {
  std::bernoulli_distribution coin(0.5);
  return random_dataset(rng, m, n, d, outcome_dim,
                        [&coin](std::mt19937_64& r, std::size_t) { return coin(r) ? 1.0 : 0.0; });
}

}  // namespace testsup
