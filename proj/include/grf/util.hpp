#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace grf {

// Streaming log(sum(exp(x_i))) with running-max rescaling and Kahan
// compensation, so million-term oracle sums hold ~1e-12 relative accuracy.
class LogSumAccumulator {
 public:
  void add(double log_x) {
    if (!std::isfinite(log_x) && log_x < 0) return;  // exp() == 0 contributes nothing
    if (count_ == 0 || log_x > max_) {
      const double rescale = std::exp(max_ - log_x);
      sum_ *= rescale;
      comp_ *= rescale;
      max_ = log_x;
      kahan_add(1.0);
    } else {
      kahan_add(std::exp(log_x - max_));
    }
    ++count_;
  }

  std::size_t count() const { return count_; }

  double log_sum() const {
    if (count_ == 0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_ - comp_);
  }

  double log_mean() const { return log_sum() - std::log(static_cast<double>(count_)); }

 private:
  void kahan_add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }

  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::size_t count_ = 0;
};

inline double log_sum_exp(std::span<const double> xs) {
  LogSumAccumulator acc;
  for (double x : xs) acc.add(x);
  return acc.log_sum();
}

inline double log_mean_exp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("log_mean_exp: empty input");
  return log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator).
inline double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_sd: need at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Work-stealing loop over [0, count). Results must not depend on the
// execution order; callers achieve that with per-index substreams and
// per-index output slots.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Empirical quantile by linear interpolation of order statistics.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace grf
