#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pitr {

/// Bad user input: malformed files, out-of-range parameters, shape mismatches.
/// The CLI maps this to exit code 3.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A request that would exceed a configured resource limit (e.g. the pair
/// budget). Carries a remedy in the message.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense column-major matrix of doubles. Column-major so that tree training
/// and distance scans stream over contiguous memory per feature.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // values[c * rows + r]

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double at(std::size_t r, std::size_t c) const { return values[c * rows + r]; }
  void set(std::size_t r, std::size_t c, double v) { values[c * rows + r] = v; }
  std::span<const double> column(std::size_t c) const {
    return std::span<const double>(values.data() + c * rows, rows);
  }
  std::span<double> column(std::size_t c) {
    return std::span<double>(values.data() + c * rows, rows);
  }
};

/// Thread count used when a caller passes 0: the PITR_THREADS environment
/// variable if set, otherwise the hardware concurrency.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, count) across at most n_threads threads
/// (0 = default_thread_count()). Indices are strided so the assignment of
/// work to threads is fixed; results must be written to per-index slots,
/// which keeps every downstream reduction order-deterministic.
void parallel_for(std::size_t count, std::size_t n_threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace pitr
