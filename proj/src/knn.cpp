#include "pitr/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pitr {

std::string to_string(Metric metric) {
  return metric == Metric::euclidean ? "euclidean" : "max";
}

Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "max" || s == "max-norm" || s == "max_norm") return Metric::max_norm;
  throw ValidationError("unknown metric '" + s + "' (expected euclidean|max)");
}

std::pair<std::size_t, std::size_t> default_neighbor_counts(std::size_t m, std::size_t n) {
  // ceil(size^0.6) with a nudge so exact powers (1024^0.6 = 64) do not round up.
  const auto grow = [](std::size_t size) -> std::size_t {
    if (size <= 1) return size;
    const double t = std::pow(static_cast<double>(size), 0.6);
    const auto k = static_cast<std::size_t>(std::ceil(t - 1e-9));
    return std::min(size, std::max<std::size_t>(1, k));
  };
  return {grow(m), grow(n)};
}

namespace {

double distance_value(std::span<const double> a, std::span<const double> b, Metric metric) {
  // Euclidean compares squared distances; ties under the true distance are
  // exactly ties under the square.
  double acc = 0.0;
  if (metric == Metric::euclidean) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double diff = a[k] - b[k];
      acc += diff * diff;
    }
  } else {
    for (std::size_t k = 0; k < a.size(); ++k) acc = std::max(acc, std::abs(a[k] - b[k]));
  }
  return acc;
}

template <typename GetPoint>
std::vector<std::size_t> neighbors_impl(std::size_t count, const GetPoint& point,
                                        std::span<const double> query, std::size_t k,
                                        Metric metric) {
  if (k == 0 || k > count)
    throw ValidationError("neighbor count " + std::to_string(k) + " out of range [1, " +
                          std::to_string(count) + "]");
  std::vector<double> dist(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const double> p = point(i);
    if (p.size() != query.size()) throw ValidationError("query dimension mismatch");
    dist[i] = distance_value(p, query, metric);
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  const auto closer = [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;  // equidistant: lower original index is closer
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    closer);
  order.resize(k);
  return order;
}

}  // namespace

std::vector<std::size_t> neighbors(std::span<const std::vector<double>> points,
                                   std::span<const double> query, std::size_t k, Metric metric) {
  return neighbors_impl(
      points.size(), [&](std::size_t i) { return std::span<const double>(points[i]); }, query, k,
      metric);
}

std::vector<std::size_t> neighbors(const std::vector<Subject>& subjects,
                                   std::span<const double> query, std::size_t k, Metric metric) {
  return neighbors_impl(
      subjects.size(), [&](std::size_t i) { return std::span<const double>(subjects[i].covariates); },
      query, k, metric);
}

KnnModel::KnnModel(TrialDataset data, ScoreSpec spec, KnnConfig config)
    : data_(std::move(data)), spec_(std::move(spec)), config_(config) {
  data_.validate();
  validate(spec_);
  if (data_.outcome_dim() != spec_.dim())
    throw ValidationError("outcome dimension does not match score spec");
  if (config_.c < 1 || config_.c > data_.m())
    throw ValidationError("knn c=" + std::to_string(config_.c) + " out of range [1, m=" +
                          std::to_string(data_.m()) + "]");
  if (config_.e < 1 || config_.e > data_.n())
    throw ValidationError("knn e=" + std::to_string(config_.e) + " out of range [1, n=" +
                          std::to_string(data_.n()) + "]");
}

double KnnModel::delta_hat(std::span<const double> x, std::span<const double> u) const {
  const std::vector<std::size_t> nn_c = neighbors(data_.control, x, config_.c, config_.metric);
  const std::vector<std::size_t> nn_e = neighbors(data_.experimental, u, config_.e, config_.metric);
  std::int64_t sum = 0;
  for (std::size_t i : nn_c)
    for (std::size_t j : nn_e)
      sum += score(spec_, data_.control[i].outcomes, data_.experimental[j].outcomes);
  return static_cast<double>(sum) /
         (static_cast<double>(config_.c) * static_cast<double>(config_.e));
}

double KnnModel::ipb_hat(std::span<const double> x) const { return delta_hat(x, x); }

int KnnModel::rule(std::span<const double> x) const { return ipb_hat(x) > 0.0 ? 1 : 0; }

}  // namespace pitr
