#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

// Shared statistical helpers for the test suite.
namespace testutil {

// Standard error of the chain mean via batch means; robust to
// autocorrelation as long as batches are much longer than the mixing time.
inline double batch_se(std::span<const double> xs, std::size_t n_batches = 50) {
  if (xs.size() < 2 * n_batches) throw std::invalid_argument("batch_se: chain too short");
  const std::size_t len = xs.size() / n_batches;
  std::vector<double> batch_means(n_batches, 0.0);
  for (std::size_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += xs[b * len + i];
    batch_means[b] = s / static_cast<double>(len);
  }
  double m = 0.0;
  for (double x : batch_means) m += x;
  m /= static_cast<double>(n_batches);
  double var = 0.0;
  for (double x : batch_means) var += (x - m) * (x - m);
  var /= static_cast<double>(n_batches - 1);
  return std::sqrt(var / static_cast<double>(n_batches));
}

// Total variation distance between two discrete distributions.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

}  // namespace testutil
