#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "grf/rng.hpp"

namespace grf {

// Exponential-family Gibbs random field: f(y|theta) proportional to
// exp(theta . s(y)). Parameters and sufficient statistics are plain real
// vectors of matching dimension; everything downstream works in log domain.
using ParamVec = std::vector<double>;
using StatVec = std::vector<double>;

inline void check_same_dim(const std::vector<double>& a, const std::vector<double>& b,
                           const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// log q(y|theta) = theta . s(y), the log of the unnormalised likelihood.
inline double log_q(const StatVec& stats, const ParamVec& theta) {
  check_same_dim(stats, theta, "log_q");
  double acc = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) acc += stats[i] * theta[i];
  return acc;
}

// Tempered parameter: f(y|theta)^t has unnormalised part q(y|t*theta), so
// tempering a chain is just scaling its parameter.
inline ParamVec temper(const ParamVec& theta, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("temper: t outside [0,1]");
  ParamVec out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = t * theta[i];
  return out;
}

// Independent Gaussian prior per component.
struct GaussianPrior {
  std::vector<double> mean;
  std::vector<double> sd;

  GaussianPrior(std::vector<double> mean_in, std::vector<double> sd_in)
      : mean(std::move(mean_in)), sd(std::move(sd_in)) {
    check_same_dim(mean, sd, "GaussianPrior");
    for (double s : sd)
      if (!(s > 0.0)) throw std::invalid_argument("GaussianPrior: sd must be positive");
  }

  // Isotropic N(mean, sd^2) in `dim` dimensions.
  static GaussianPrior isotropic(std::size_t dim, double sd, double mean = 0.0) {
    return GaussianPrior(std::vector<double>(dim, mean), std::vector<double>(dim, sd));
  }

  std::size_t dim() const { return mean.size(); }

  double log_density(const ParamVec& theta) const {
    check_same_dim(theta, mean, "GaussianPrior::log_density");
    constexpr double half_log_two_pi = 0.91893853320467274178032973640562;
    double acc = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double z = (theta[i] - mean[i]) / sd[i];
      acc -= 0.5 * z * z + std::log(sd[i]) + half_log_two_pi;
    }
    return acc;
  }

  ParamVec sample(RngStream& rng) const {
    ParamVec out(dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.normal(mean[i], sd[i]);
    return out;
  }
};

// A model usable by the exchange-family samplers: it can report its
// parameter dimension, produce (approximate) draws of sufficient statistics
// from f(.|theta), and knows log z(0) in closed form.
template <typename M>
concept GibbsModel = requires(const M& m, const ParamVec& theta, int sweeps, RngStream& rng) {
  { m.dim() } -> std::convertible_to<std::size_t>;
  { m.log_z0() } -> std::convertible_to<double>;
  { m.sample_stats(theta, sweeps, rng) } -> std::same_as<StatVec>;
};

}  // namespace grf
