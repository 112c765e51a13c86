#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "grf/core.hpp"
#include "grf/kde.hpp"
#include "grf/population.hpp"
#include "grf/rng.hpp"
#include "grf/util.hpp"

namespace grf {

// Geometric bridge between nested models m1 (theta1, statistic s1) and
// m2 (theta1, theta2; statistics s1, s2): only the extra parameter is
// tempered, so the t-target's unnormalised likelihood is q(y|theta1, t*theta2).

// log q(y|theta1, t*theta2) = theta1 s1(y) + t theta2 s2(y).
inline double bridged_log_q(const StatVec& y_stats, double theta1, double theta2, double t) {
  if (y_stats.size() != 2) throw std::invalid_argument("bridged_log_q: needs both s1 and s2");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("bridged_log_q: t outside [0,1]");
  return theta1 * y_stats[0] + t * theta2 * y_stats[1];
}

struct BridgePriors {
  GaussianPrior m1;  // prior for theta1 under m1
  GaussianPrior m2;  // joint prior for (theta1, theta2) under m2

  BridgePriors(GaussianPrior m1_in, GaussianPrior m2_in)
      : m1(std::move(m1_in)), m2(std::move(m2_in)) {
    if (m1.dim() != 1 || m2.dim() != 2) throw std::invalid_argument("BridgePriors: dims must be 1 and 2");
  }

  // m2's theta2 marginal, used to anchor theta2 where the geometric
  // interpolation leaves it free.
  double log_anchor(double theta2) const {
    const GaussianPrior marg({m2.mean[1]}, {m2.sd[1]});
    return marg.log_density({theta2});
  }
};

// Geometric prior interpolation (1-t) log pi(theta1|m1) + t log pi(theta1,theta2|m2).
// Improper in theta2 at t = 0; the sampler multiplies in the anchor below.
inline double bridged_log_prior(double theta1, double theta2, double t,
                                const BridgePriors& priors) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("bridged_log_prior: t outside [0,1]");
  return (1.0 - t) * priors.m1.log_density({theta1}) +
         t * priors.m2.log_density({theta1, theta2});
}

// Proper tempered prior: the anchor factor pi(theta2|m2)^(1-t) keeps theta2
// integrable at every rung and cancels from the Bayes-factor identity.
inline double bridged_log_prior_anchored(double theta1, double theta2, double t,
                                         const BridgePriors& priors) {
  return bridged_log_prior(theta1, theta2, t, priors) + (1.0 - t) * priors.log_anchor(theta2);
}

struct BayesFactorEstimate {
  double log_bf_12 = 0.0;
  std::vector<double> draws_m1;     //  theta1* per kept sweep (chain t=0)
  std::vector<ParamVec> draws_m2;   // (theta1+, theta2+) per kept sweep (chain t=1)
  std::vector<double> log_z_ratios; // log zhat(theta1+,theta2+)/zhat(theta1*) per kept sweep
  std::vector<double> per_sweep_log_bf;  // identity assembled per selected sweep
  std::vector<double> acceptance_rates;
  ParamVec mean_m1, mean_m2;
};

using BfTraceFn =
    std::function<void(long iter, const PopulationState&, const std::vector<bool>&, double log_z_ratio)>;

namespace detail {

inline ParamVec bridged_param(const ParamVec& theta, double t) {
  return {theta[0], t * theta[1]};
}

}  // namespace detail

// Population exchange over the bridged targets. Every sweep yields a draw
// from each model's posterior (chains t=0 and t=1) and a telescoped
// estimate of z(theta1+,theta2+)/z(theta1*); the Bayes-factor identity is
// assembled per sweep and averaged over the r sweeps whose draws lie
// closest (standardised Euclidean, both models jointly) to the posterior
// means.
template <GibbsModel M2>
BayesFactorEstimate run_popx_bf(const M2& model2, const StatVec& y_stats,
                                const BridgePriors& priors, const PopxConfig& config,
                                RngStream& rng, const BfTraceFn& trace = {}) {
  if (model2.dim() != 2 || y_stats.size() != 2)
    throw std::invalid_argument("run_popx_bf: needs the two-statistic model");
  const TemperatureLadder ladder = make_ladder(config.n, config.ladder_p);
  const std::vector<double> sigma(2, config.sigma);
  if (config.s < 1 || config.aux_sweeps < 1 || !(config.sigma > 0.0))
    throw std::invalid_argument("run_popx_bf: bad settings");

  const long burn = static_cast<long>(static_cast<double>(config.iters) * config.burn_in_fraction);
  if (config.iters <= burn) throw std::invalid_argument("run_popx_bf: no post-burn-in sweeps");

  PopulationState pop;
  pop.chains.resize(ladder.n_chains());
  RngStream init_rng = rng.fork("init");
  for (std::size_t j = 0; j < pop.chains.size(); ++j) {
    RngStream chain_rng = init_rng.fork(j);
    pop.chains[j].theta = priors.m2.sample(chain_rng);
    const ParamVec bp = detail::bridged_param(pop.chains[j].theta, ladder.t(j));
    pop.chains[j].aux_stats.resize(static_cast<std::size_t>(config.s));
    for (int k = 0; k < config.s; ++k) {
      RngStream draw_rng = chain_rng.fork(static_cast<std::uint64_t>(k) + 1);
      pop.chains[j].aux_stats[static_cast<std::size_t>(k)] =
          model2.sample_stats(bp, config.aux_sweeps, draw_rng);
    }
  }

  BayesFactorEstimate out;
  std::vector<long> accept_counts(ladder.n_chains(), 0);
  RngStream sweeps_rng = rng.fork("sweeps");
  for (long i = 0; i < config.iters; ++i) {
    RngStream it_rng = sweeps_rng.fork(static_cast<std::uint64_t>(i));
    std::vector<bool> accepted(pop.chains.size(), false);

    for (std::size_t j = 0; j < pop.chains.size(); ++j) {
      RngStream chain_rng = it_rng.fork(j);
      const double t = ladder.t(j);
      ChainState& chain = pop.chains[j];

      const ParamVec fwd_mean = interacting_mean(j, pop);
      ParamVec theta_prop(2);
      for (std::size_t d = 0; d < 2; ++d)
        theta_prop[d] = chain_rng.normal(fwd_mean[d], sigma[d]);

      const ParamVec bp_prop = detail::bridged_param(theta_prop, t);
      std::vector<StatVec> aux(static_cast<std::size_t>(config.s));
      for (int k = 0; k < config.s; ++k) {
        RngStream draw_rng = chain_rng.fork(static_cast<std::uint64_t>(k) + 1);
        aux[static_cast<std::size_t>(k)] = model2.sample_stats(bp_prop, config.aux_sweeps, draw_rng);
      }

      ParamVec rev_mean = fwd_mean;
      if (j > 0)
        for (std::size_t d = 0; d < 2; ++d)
          rev_mean[d] = 0.5 * (pop.chains[j - 1].theta[d] + theta_prop[d]);
      else
        rev_mean = theta_prop;

      const ParamVec bp_cur = detail::bridged_param(chain.theta, t);
      const double log_ratio =
          bridged_log_q(y_stats, theta_prop[0], theta_prop[1], t) -
          bridged_log_q(y_stats, chain.theta[0], chain.theta[1], t) +
          bridged_log_prior_anchored(theta_prop[0], theta_prop[1], t, priors) -
          bridged_log_prior_anchored(chain.theta[0], chain.theta[1], t, priors) +
          log_q(aux[0], bp_cur) - log_q(aux[0], bp_prop) +
          detail::gaussian_logpdf_diff(theta_prop, fwd_mean, chain.theta, rev_mean, sigma);

      if (std::log(chain_rng.uniform_pos()) < std::min(0.0, log_ratio)) {
        chain.theta = theta_prop;
        chain.aux_stats = std::move(aux);
        accepted[j] = true;
      }
    }
    ++pop.iteration;
    if (i < burn) continue;

    // telescoped log z(theta1+, theta2+) - log z(theta1*)
    double log_zr = 0.0;
    for (std::size_t j = 0; j + 1 < pop.chains.size(); ++j) {
      const ParamVec low = detail::bridged_param(pop.chains[j].theta, ladder.t(j));
      const ParamVec high = detail::bridged_param(pop.chains[j + 1].theta, ladder.t(j + 1));
      LogSumAccumulator lse;
      const auto& aux = pop.chains[j].aux_stats;
      for (std::size_t k = config.exclude_first_aux && aux.size() > 1 ? 1 : 0; k < aux.size(); ++k)
        lse.add(log_q(aux[k], high) - log_q(aux[k], low));
      log_zr += lse.log_mean();
    }

    for (std::size_t j = 0; j < accepted.size(); ++j) accept_counts[j] += accepted[j] ? 1 : 0;
    out.draws_m1.push_back(pop.chains.front().theta[0]);
    out.draws_m2.push_back(pop.chains.back().theta);
    out.log_z_ratios.push_back(log_zr);
    if (trace) trace(i, pop, accepted, log_zr);
  }

  const auto kept = static_cast<long>(out.draws_m1.size());
  if (config.r < 1 || config.r > kept)
    throw std::invalid_argument("run_popx_bf: r exceeds retained draws");
  out.acceptance_rates.resize(ladder.n_chains());
  for (std::size_t j = 0; j < accept_counts.size(); ++j)
    out.acceptance_rates[j] = static_cast<double>(accept_counts[j]) / static_cast<double>(kept);

  // posterior means and standardised distances, both models jointly
  const double mean1 = mean(out.draws_m1);
  const double sd1 = sample_sd(out.draws_m1);
  out.mean_m1 = {mean1};
  out.mean_m2.assign(2, 0.0);
  for (const auto& th : out.draws_m2)
    for (std::size_t d = 0; d < 2; ++d) out.mean_m2[d] += th[d];
  for (std::size_t d = 0; d < 2; ++d) out.mean_m2[d] /= static_cast<double>(kept);
  ParamVec sd2(2, 0.0);
  for (const auto& th : out.draws_m2)
    for (std::size_t d = 0; d < 2; ++d) {
      const double delta = th[d] - out.mean_m2[d];
      sd2[d] += delta * delta;
    }
  for (std::size_t d = 0; d < 2; ++d)
    sd2[d] = std::sqrt(sd2[d] / static_cast<double>(kept - 1));

  std::vector<std::size_t> order(static_cast<std::size_t>(kept));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(static_cast<std::size_t>(kept));
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double z1 = (out.draws_m1[i] - mean1) / sd1;
    double d2 = 0.0;
    for (std::size_t d = 0; d < 2; ++d) {
      const double z = (out.draws_m2[i][d] - out.mean_m2[d]) / sd2[d];
      d2 += z * z;
    }
    dist[i] = std::abs(z1) + std::sqrt(d2);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&dist](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  std::vector<ParamVec> m1_draws_vec;
  m1_draws_vec.reserve(out.draws_m1.size());
  for (double x : out.draws_m1) m1_draws_vec.push_back({x});
  const std::vector<double> bw1 = silverman_bandwidths(m1_draws_vec);
  const std::vector<double> bw2 = silverman_bandwidths(out.draws_m2);

  for (int b = 0; b < config.r; ++b) {
    const std::size_t i = order[static_cast<std::size_t>(b)];
    const double th1 = out.draws_m1[i];
    const ParamVec& th2 = out.draws_m2[i];
    const double a_part = th1 * y_stats[0] + priors.m1.log_density({th1}) -
                          kde_log_density(m1_draws_vec, bw1, {th1});
    const double b_part = log_q(y_stats, th2) + priors.m2.log_density(th2) -
                          kde_log_density(out.draws_m2, bw2, th2);
    out.per_sweep_log_bf.push_back(a_part - b_part + out.log_z_ratios[i]);
  }
  out.log_bf_12 = log_mean_exp(out.per_sweep_log_bf);
  return out;
}

}  // namespace grf
