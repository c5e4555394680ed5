#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qsoc/core/errors.hpp"
#include "qsoc/core/rng.hpp"

namespace qsoc {

// Point estimate with a standard error, or an exactness flag when the value
// is deterministic. Warnings accumulate diagnostic notes (heavy tails etc).
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = false;
  std::vector<std::string> warnings;
};

inline Estimate summarize(const std::vector<double>& samples) {
  Estimate e;
  const std::size_t n = samples.size();
  if (n == 0) return e;
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  e.value = mean;
  e.std_error = n > 1 ? std::sqrt(ss / (static_cast<double>(n) * (n - 1.0))) : 0.0;
  return e;
}

// Runs fn(i) for i in [0, n). Work items own their state (per-path RNG
// streams), so the result is independent of the thread count; callers must
// write results by index.
inline void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n_threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(n_threads, n);
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct McOptions {
  int n_paths = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Evaluates per-path functionals under independent substreams of the master
// seed and keeps the per-path values (needed for common-random-number paired
// comparisons).
struct McResult {
  Estimate estimate;
  std::vector<double> per_path;
};

inline McResult monte_carlo(const McOptions& opt,
                            const std::function<double(int, std::uint64_t)>& path_value) {
  if (opt.n_paths < 2) throw ValidationError("monte_carlo: n_paths must be >= 2");
  McResult result;
  result.per_path.resize(opt.n_paths);
  parallel_for(opt.n_paths, opt.threads, [&](int i) {
    result.per_path[i] = path_value(i, substream_seed(opt.seed, static_cast<std::uint64_t>(i)));
  });
  result.estimate = summarize(result.per_path);
  return result;
}

}  // namespace qsoc
