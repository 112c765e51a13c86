#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "grf/core.hpp"
#include "grf/rng.hpp"
#include "grf/util.hpp"

namespace grf {

struct ProposalSpec {
  enum class Kind { random_walk, neighbor_mean };

  Kind kind = Kind::random_walk;
  std::vector<double> sigma;  // per-dimension scale

  ProposalSpec(Kind k, std::vector<double> sigma_in) : kind(k), sigma(std::move(sigma_in)) {
    for (double s : sigma)
      if (!(s > 0.0)) throw std::invalid_argument("ProposalSpec: sigma must be positive");
    if (sigma.empty()) throw std::invalid_argument("ProposalSpec: empty sigma");
  }

  static ProposalSpec random_walk(std::size_t dim, double sigma) {
    return ProposalSpec(Kind::random_walk, std::vector<double>(dim, sigma));
  }
};

// Augmented exchange state: current parameter, last auxiliary parameter,
// and the sufficient statistics of the current auxiliary draw.
struct ExchangeState {
  ParamVec theta;
  ParamVec theta_aux;
  StatVec aux_stats;
};

// Log of the exchange acceptance ratio, Murray's swap move with a
// symmetric proposal: pi(th')/pi(th) * q(y|th')/q(y|th) * q(y'|th)/q(y'|th').
// No partition function appears anywhere on this code path.
inline double exchange_log_ratio(const StatVec& stats_y, const ParamVec& theta_cur,
                                 const ParamVec& theta_prop, const StatVec& stats_yprime,
                                 const GaussianPrior& prior) {
  return prior.log_density(theta_prop) - prior.log_density(theta_cur) +
         log_q(stats_y, theta_prop) - log_q(stats_y, theta_cur) +
         log_q(stats_yprime, theta_cur) - log_q(stats_yprime, theta_prop);
}

inline double exchange_log_accept(const StatVec& stats_y, const ParamVec& theta_cur,
                                  const ParamVec& theta_prop, const StatVec& stats_yprime,
                                  const GaussianPrior& prior) {
  return std::min(0.0, exchange_log_ratio(stats_y, theta_cur, theta_prop, stats_yprime, prior));
}

// One exchange iteration: propose theta', simulate y' ~ f(.|theta') with
// aux_sweeps MCMC passes, accept/reject. On rejection the state is left
// unchanged. Returns whether the move was accepted.
template <GibbsModel M>
bool exchange_step(ExchangeState& state, const StatVec& y_stats, const M& model,
                   const GaussianPrior& prior, const ProposalSpec& prop, int aux_sweeps,
                   RngStream& rng) {
  if (prop.kind != ProposalSpec::Kind::random_walk)
    throw std::invalid_argument("exchange_step: expects a symmetric random-walk proposal");
  check_same_dim(state.theta, prop.sigma, "exchange_step");

  ParamVec theta_prop(state.theta.size());
  for (std::size_t d = 0; d < theta_prop.size(); ++d)
    theta_prop[d] = rng.normal(state.theta[d], prop.sigma[d]);

  StatVec aux = model.sample_stats(theta_prop, aux_sweeps, rng);
  const double log_alpha = exchange_log_accept(y_stats, state.theta, theta_prop, aux, prior);
  if (std::log(rng.uniform_pos()) < log_alpha) {
    state.theta_aux = state.theta;
    state.theta = std::move(theta_prop);
    state.aux_stats = std::move(aux);
    return true;
  }
  return false;
}

struct ChainSummary {
  std::vector<ParamVec> draws;  // post burn-in
  double acceptance_rate = 0.0;
  ParamVec mean, sd;
};

// Convenience runner: `iters` exchange steps from a prior draw, first
// `burn_in` discarded. `on_step(iteration, state, accepted)` is invoked for
// every post-burn-in iteration when provided.
template <GibbsModel M>
ChainSummary run_exchange(const StatVec& y_stats, const M& model, const GaussianPrior& prior,
                          const ProposalSpec& prop, long iters, long burn_in, int aux_sweeps,
                          RngStream& rng,
                          const std::function<void(long, const ExchangeState&, bool)>& on_step = {}) {
  if (iters <= burn_in) throw std::invalid_argument("run_exchange: iters must exceed burn_in");
  ExchangeState state;
  state.theta = prior.sample(rng);
  state.theta_aux = state.theta;
  state.aux_stats = model.sample_stats(state.theta, aux_sweeps, rng);

  ChainSummary out;
  out.draws.reserve(static_cast<std::size_t>(iters - burn_in));
  long accepted = 0;
  for (long i = 0; i < iters; ++i) {
    const bool acc = exchange_step(state, y_stats, model, prior, prop, aux_sweeps, rng);
    if (i < burn_in) continue;
    accepted += acc ? 1 : 0;
    out.draws.push_back(state.theta);
    if (on_step) on_step(i, state, acc);
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(iters - burn_in);

  const std::size_t dim = model.dim();
  out.mean.assign(dim, 0.0);
  out.sd.assign(dim, 0.0);
  std::vector<double> column(out.draws.size());
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < out.draws.size(); ++i) column[i] = out.draws[i][d];
    out.mean[d] = mean(column);
    out.sd[d] = sample_sd(column);
  }
  return out;
}

// Metropolis-Hastings with the exact z-ratio, Eq.-(7)-style; only feasible
// where a z oracle is. Validation baseline for the exchange sampler.
template <typename LogZFn>
bool exact_mh_step(ParamVec& theta, const StatVec& y_stats, const GaussianPrior& prior,
                   const ProposalSpec& prop, LogZFn&& log_z, RngStream& rng) {
  check_same_dim(theta, prop.sigma, "exact_mh_step");
  ParamVec theta_prop(theta.size());
  for (std::size_t d = 0; d < theta.size(); ++d)
    theta_prop[d] = rng.normal(theta[d], prop.sigma[d]);

  const double log_ratio = prior.log_density(theta_prop) - prior.log_density(theta) +
                           log_q(y_stats, theta_prop) - log_q(y_stats, theta) +
                           log_z(theta) - log_z(theta_prop);
  if (std::log(rng.uniform_pos()) < std::min(0.0, log_ratio)) {
    theta = std::move(theta_prop);
    return true;
  }
  return false;
}

}  // namespace grf
