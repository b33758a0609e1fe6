#include "pitr/common.hpp"

#include <cstdlib>
#include <exception>
#include <thread>

namespace pitr {

std::size_t default_thread_count() {
  if (const char* env = std::getenv("PITR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, std::size_t n_threads,
                  const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  if (n_threads == 0) n_threads = default_thread_count();
  if (n_threads > count) n_threads = count;
  if (n_threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(n_threads);
  workers.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < count; i += n_threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pitr
