#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "grf/core.hpp"
#include "grf/util.hpp"

namespace grf {

// Silverman's rule per dimension: h_d = sd_d * (4 / ((d+2) n))^(1/(d+4)).
inline std::vector<double> silverman_bandwidths(const std::vector<ParamVec>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("silverman_bandwidths: need >= 2 samples");
  const std::size_t d = samples[0].size();
  if (d == 0 || d > 3) throw std::invalid_argument("silverman_bandwidths: dimension must be 1..3");
  const double n = static_cast<double>(samples.size());
  std::vector<double> h(d);
  std::vector<double> column(samples.size());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < samples.size(); ++i) column[i] = samples[i][k];
    const double sd = sample_sd(column);
    if (!(sd > 0.0))
      throw std::runtime_error("silverman_bandwidths: degenerate sample (zero variance)");
    h[k] = sd * std::pow(4.0 / ((static_cast<double>(d) + 2.0) * n),
                         1.0 / (static_cast<double>(d) + 4.0));
  }
  return h;
}

inline double kde_log_density(const std::vector<ParamVec>& samples,
                              const std::vector<double>& bandwidths, const ParamVec& point) {
  check_same_dim(point, bandwidths, "kde_log_density");
  constexpr double half_log_two_pi = 0.91893853320467274178032973640562;
  double log_norm = 0.0;
  for (double h : bandwidths) log_norm -= std::log(h) + half_log_two_pi;
  LogSumAccumulator acc;
  for (const auto& x : samples) {
    double e = 0.0;
    for (std::size_t k = 0; k < point.size(); ++k) {
      const double z = (point[k] - x[k]) / bandwidths[k];
      e -= 0.5 * z * z;
    }
    acc.add(e + log_norm);
  }
  return acc.log_mean();
}

// Gaussian product-kernel density estimate at `point`.
inline double kde_log_density(const std::vector<ParamVec>& samples, const ParamVec& point) {
  return kde_log_density(samples, silverman_bandwidths(samples), point);
}

}  // namespace grf
