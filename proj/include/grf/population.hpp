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
#include "grf/rng.hpp"
#include "grf/util.hpp"

namespace grf {

// Temperatures t_0 = 0 < t_1 < ... < t_n = 1, default t_i = (i/n)^p with
// p = 5 so that most rungs sit near the prior.
struct TemperatureLadder {
  std::vector<double> temps;
  double exponent = 5.0;

  std::size_t n_chains() const { return temps.size(); }
  double t(std::size_t j) const { return temps[j]; }
};

inline TemperatureLadder make_ladder(int n, double p = 5.0) {
  if (n < 1) throw std::invalid_argument("make_ladder: n must be >= 1");
  if (!(p > 0.0)) throw std::invalid_argument("make_ladder: p must be positive");
  TemperatureLadder ladder;
  ladder.exponent = p;
  ladder.temps.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i)
    ladder.temps[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i) / n, p);
  ladder.temps.front() = 0.0;
  ladder.temps.back() = 1.0;
  return ladder;
}

// Chain j's state: its parameter and the sufficient statistics of the s
// auxiliary realisations drawn at the tempered parameter t_j * theta_j.
// The pair always updates or rolls back together, so the stored statistics
// are always distributed per f(.|t_j theta_j).
struct ChainState {
  ParamVec theta;
  std::vector<StatVec> aux_stats;
};

struct PopulationState {
  std::vector<ChainState> chains;
  long iteration = 0;
};

// Interacting proposal mean: midpoint of the lower neighbour (already
// updated this sweep) and the chain's own previous value. Chain 0 has no
// lower neighbour and uses a plain random walk.
inline ParamVec interacting_mean(std::size_t j, const PopulationState& pop) {
  const ParamVec& own = pop.chains[j].theta;
  if (j == 0) return own;
  const ParamVec& below = pop.chains[j - 1].theta;
  ParamVec m(own.size());
  for (std::size_t d = 0; d < m.size(); ++d) m[d] = 0.5 * (below[d] + own[d]);
  return m;
}

inline ParamVec propose_interacting(std::size_t j, const PopulationState& pop,
                                    const std::vector<double>& sigma, RngStream& rng) {
  ParamVec m = interacting_mean(j, pop);
  check_same_dim(m, sigma, "propose_interacting");
  for (std::size_t d = 0; d < m.size(); ++d) m[d] = rng.normal(m[d], sigma[d]);
  return m;
}

// Tempered exchange ratio at temperature t (h-ratio handled separately):
// t*[log q(y|th') - log q(y|th)] + log-prior difference
// + t*[log q(y'_1|th) - log q(y'_1|th')].
inline double tempered_exchange_log_ratio(const StatVec& y_stats, const ParamVec& theta_cur,
                                          const ParamVec& theta_prop, const StatVec& aux1_stats,
                                          double t, const GaussianPrior& prior) {
  return t * (log_q(y_stats, theta_prop) - log_q(y_stats, theta_cur)) +
         prior.log_density(theta_prop) - prior.log_density(theta_cur) +
         t * (log_q(aux1_stats, theta_cur) - log_q(aux1_stats, theta_prop));
}

struct PopxSettings {
  int s = 200;             // auxiliary draws per chain update
  int aux_sweeps = 200;    // MCMC passes per auxiliary draw
  std::vector<double> sigma;
  bool exclude_first_aux = false;  // drop y'_1 from the z-ratio average

  void validate(std::size_t dim) const {
    if (s < 1) throw std::invalid_argument("PopxSettings: s must be >= 1");
    if (aux_sweeps < 1) throw std::invalid_argument("PopxSettings: aux_sweeps must be >= 1");
    if (sigma.size() != dim) throw std::invalid_argument("PopxSettings: sigma dimension mismatch");
    for (double x : sigma)
      if (!(x > 0.0)) throw std::invalid_argument("PopxSettings: sigma must be positive");
    if (exclude_first_aux && s < 2)
      throw std::invalid_argument("PopxSettings: exclude_first_aux needs s >= 2");
  }
};

namespace detail {

inline double gaussian_logpdf_diff(const ParamVec& fwd_point, const ParamVec& fwd_mean,
                                   const ParamVec& rev_point, const ParamVec& rev_mean,
                                   const std::vector<double>& sigma) {
  // log N(rev_point; rev_mean, sigma) - log N(fwd_point; fwd_mean, sigma)
  double acc = 0.0;
  for (std::size_t d = 0; d < sigma.size(); ++d) {
    const double zf = (fwd_point[d] - fwd_mean[d]) / sigma[d];
    const double zr = (rev_point[d] - rev_mean[d]) / sigma[d];
    acc += 0.5 * (zf * zf - zr * zr);
  }
  return acc;
}

}  // namespace detail

// One full pass of Algorithm-2 updates over chains j = 0..n. Acceptance
// uses the first auxiliary draw only; all s draws are stored for the path
// estimator and roll back together with theta on rejection.
template <GibbsModel M>
std::vector<bool> popx_sweep(PopulationState& pop, const StatVec& y_stats, const M& model,
                             const GaussianPrior& prior, const TemperatureLadder& ladder,
                             const PopxSettings& cfg, RngStream& sweep_rng) {
  cfg.validate(model.dim());
  if (pop.chains.size() != ladder.n_chains())
    throw std::invalid_argument("popx_sweep: population does not match ladder");

  std::vector<bool> accepted(pop.chains.size(), false);
  for (std::size_t j = 0; j < pop.chains.size(); ++j) {
    RngStream chain_rng = sweep_rng.fork(j);
    const double t = ladder.t(j);
    ChainState& chain = pop.chains[j];

    const ParamVec fwd_mean = interacting_mean(j, pop);
    ParamVec theta_prop(fwd_mean.size());
    for (std::size_t d = 0; d < theta_prop.size(); ++d)
      theta_prop[d] = chain_rng.normal(fwd_mean[d], cfg.sigma[d]);

    const ParamVec tempered = temper(theta_prop, t);
    std::vector<StatVec> aux(static_cast<std::size_t>(cfg.s));
    for (int k = 0; k < cfg.s; ++k) {
      RngStream draw_rng = chain_rng.fork(static_cast<std::uint64_t>(k) + 1);
      aux[static_cast<std::size_t>(k)] = model.sample_stats(tempered, cfg.aux_sweeps, draw_rng);
    }

    // reverse proposal mean: lower neighbour (current sweep) with theta'_j
    ParamVec rev_mean = fwd_mean;
    if (j > 0)
      for (std::size_t d = 0; d < rev_mean.size(); ++d)
        rev_mean[d] = 0.5 * (pop.chains[j - 1].theta[d] + theta_prop[d]);
    else
      rev_mean = theta_prop;

    const double log_ratio =
        tempered_exchange_log_ratio(y_stats, chain.theta, theta_prop, aux[0], t, prior) +
        detail::gaussian_logpdf_diff(theta_prop, fwd_mean, chain.theta, rev_mean, cfg.sigma);

    if (std::log(chain_rng.uniform_pos()) < std::min(0.0, log_ratio)) {
      chain.theta = theta_prop;
      chain.aux_stats = std::move(aux);
      accepted[j] = true;
    }
  }
  ++pop.iteration;
  return accepted;
}

// Path estimate of log z(theta_n): telescoping product of per-rung
// importance-sampling ratio estimates, anchored at the closed-form z(0).
//
//   log zhat = sum_j log[ (1/s) sum_k exp( q-log-ratio at draw s_jk ) ] + log z(0)
inline double log_z_hat_path(const PopulationState& pop, const TemperatureLadder& ladder,
                             double log_z0, bool exclude_first_aux = false) {
  const std::size_t n_chains = ladder.n_chains();
  if (pop.chains.size() != n_chains)
    throw std::invalid_argument("log_z_hat_path: population does not match ladder");
  double acc = log_z0;
  for (std::size_t j = 0; j + 1 < n_chains; ++j) {
    const auto& aux = pop.chains[j].aux_stats;
    if (aux.empty()) throw std::invalid_argument("log_z_hat_path: chain has no auxiliary stats");
    const ParamVec low = temper(pop.chains[j].theta, ladder.t(j));
    const ParamVec high = temper(pop.chains[j + 1].theta, ladder.t(j + 1));
    LogSumAccumulator lse;
    for (std::size_t k = exclude_first_aux && aux.size() > 1 ? 1 : 0; k < aux.size(); ++k)
      lse.add(log_q(aux[k], high) - log_q(aux[k], low));
    acc += lse.log_mean();
  }
  return acc;
}

// Same estimator with a fixed parameter path and freshly simulated draws;
// decoupled from any accept/reject decision.
template <GibbsModel M>
double log_z_hat_fixed_path(const M& model, const TemperatureLadder& ladder,
                            const std::vector<ParamVec>& thetas, int s, int aux_sweeps,
                            RngStream& rng) {
  if (thetas.size() != ladder.n_chains())
    throw std::invalid_argument("log_z_hat_fixed_path: path does not match ladder");
  PopulationState pop;
  pop.chains.resize(thetas.size());
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    pop.chains[j].theta = thetas[j];
    const ParamVec tempered = temper(thetas[j], ladder.t(j));
    RngStream chain_rng = rng.fork(j);
    pop.chains[j].aux_stats.resize(static_cast<std::size_t>(s));
    for (int k = 0; k < s; ++k) {
      RngStream draw_rng = chain_rng.fork(static_cast<std::uint64_t>(k));
      pop.chains[j].aux_stats[static_cast<std::size_t>(k)] =
          model.sample_stats(tempered, aux_sweeps, draw_rng);
    }
  }
  return log_z_hat_path(pop, ladder, model.log_z0());
}

// Bayes-identity evidence estimate at theta*:
// log pi(y) = log q(y|theta*) + log pi(theta*) - log z(theta*) - log pi(theta*|y).
inline double log_evidence_chib(const ParamVec& theta_star, const StatVec& y_stats,
                                const GaussianPrior& prior, double log_z_hat,
                                double log_post_hat) {
  return log_q(y_stats, theta_star) + prior.log_density(theta_star) - log_z_hat - log_post_hat;
}

struct PerThetaEstimate {
  ParamVec theta;
  double log_evidence;
};

struct EvidenceEstimate {
  double log_evidence = 0.0;
  std::vector<PerThetaEstimate> per_theta;
  std::vector<double> acceptance_rates;  // per chain
  double log_z_mean = 0.0;
  double log_z_sd = 0.0;
  std::vector<ParamVec> posterior_draws;  // chain-n draws, post burn-in
  std::vector<double> log_z_hats;         // matching posterior_draws
  ParamVec posterior_mean;
};

struct PopxConfig {
  int n = 10;              // ladder has n+1 chains
  double ladder_p = 5.0;
  long iters = 20000;
  double burn_in_fraction = 0.1;
  int s = 200;
  int aux_sweeps = 200;
  double sigma = 0.2;
  int r = 100;
  bool exclude_first_aux = false;
};

using PopxTraceFn =
    std::function<void(long iter, const PopulationState&, const std::vector<bool>&, double log_z_hat)>;

// Full evidence pipeline: population exchange sweeps, per-sweep (theta_n,
// log zhat) records, then the averaged Bayes-identity estimate over the r
// retained draws closest to the posterior mean.
template <GibbsModel M>
EvidenceEstimate run_popx_evidence(const M& model, const StatVec& y_stats,
                                   const GaussianPrior& prior, const PopxConfig& config,
                                   RngStream& rng, const PopxTraceFn& trace = {}) {
  const std::size_t dim = model.dim();
  check_same_dim(y_stats, std::vector<double>(dim), "run_popx_evidence");
  const TemperatureLadder ladder = make_ladder(config.n, config.ladder_p);
  PopxSettings settings;
  settings.s = config.s;
  settings.aux_sweeps = config.aux_sweeps;
  settings.sigma.assign(dim, config.sigma);
  settings.exclude_first_aux = config.exclude_first_aux;
  settings.validate(dim);

  const long burn = static_cast<long>(static_cast<double>(config.iters) * config.burn_in_fraction);
  if (config.iters <= burn) throw std::invalid_argument("run_popx_evidence: no post-burn-in sweeps");

  PopulationState pop;
  pop.chains.resize(ladder.n_chains());
  RngStream init_rng = rng.fork("init");
  for (std::size_t j = 0; j < pop.chains.size(); ++j) {
    RngStream chain_rng = init_rng.fork(j);
    pop.chains[j].theta = prior.sample(chain_rng);
    const ParamVec tempered = temper(pop.chains[j].theta, ladder.t(j));
    pop.chains[j].aux_stats.resize(static_cast<std::size_t>(config.s));
    for (int k = 0; k < config.s; ++k) {
      RngStream draw_rng = chain_rng.fork(static_cast<std::uint64_t>(k) + 1);
      pop.chains[j].aux_stats[static_cast<std::size_t>(k)] =
          model.sample_stats(tempered, config.aux_sweeps, draw_rng);
    }
  }

  EvidenceEstimate out;
  std::vector<long> accept_counts(ladder.n_chains(), 0);
  RngStream sweeps_rng = rng.fork("sweeps");
  for (long i = 0; i < config.iters; ++i) {
    RngStream it_rng = sweeps_rng.fork(static_cast<std::uint64_t>(i));
    const std::vector<bool> acc = popx_sweep(pop, y_stats, model, prior, ladder, settings, it_rng);
    if (i < burn) continue;
    const double lzh = log_z_hat_path(pop, ladder, model.log_z0(), config.exclude_first_aux);
    for (std::size_t j = 0; j < acc.size(); ++j) accept_counts[j] += acc[j] ? 1 : 0;
    out.posterior_draws.push_back(pop.chains.back().theta);
    out.log_z_hats.push_back(lzh);
    if (trace) trace(i, pop, acc, lzh);
  }

  const auto kept = static_cast<long>(out.posterior_draws.size());
  if (config.r < 1 || config.r > kept)
    throw std::invalid_argument("run_popx_evidence: r exceeds retained draws");

  out.acceptance_rates.resize(ladder.n_chains());
  for (std::size_t j = 0; j < accept_counts.size(); ++j)
    out.acceptance_rates[j] = static_cast<double>(accept_counts[j]) / static_cast<double>(kept);
  out.log_z_mean = mean(out.log_z_hats);
  out.log_z_sd = sample_sd(out.log_z_hats);

  // r draws closest to the posterior mean (Euclidean; ties keep the
  // earliest-recorded draw)
  out.posterior_mean.assign(dim, 0.0);
  for (const auto& th : out.posterior_draws)
    for (std::size_t d = 0; d < dim; ++d) out.posterior_mean[d] += th[d];
  for (std::size_t d = 0; d < dim; ++d) out.posterior_mean[d] /= static_cast<double>(kept);

  std::vector<std::size_t> order(static_cast<std::size_t>(kept));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist2(static_cast<std::size_t>(kept), 0.0);
  for (std::size_t i = 0; i < dist2.size(); ++i)
    for (std::size_t d = 0; d < dim; ++d) {
      const double delta = out.posterior_draws[i][d] - out.posterior_mean[d];
      dist2[i] += delta * delta;
    }
  std::stable_sort(order.begin(), order.end(),
                   [&dist2](std::size_t a, std::size_t b) { return dist2[a] < dist2[b]; });

  const std::vector<double> bandwidths = silverman_bandwidths(out.posterior_draws);
  std::vector<double> per_theta_logs;
  for (int b = 0; b < config.r; ++b) {
    const std::size_t i = order[static_cast<std::size_t>(b)];
    const ParamVec& theta_b = out.posterior_draws[i];
    const double log_post = kde_log_density(out.posterior_draws, bandwidths, theta_b);
    const double le = log_evidence_chib(theta_b, y_stats, prior, out.log_z_hats[i], log_post);
    out.per_theta.push_back({theta_b, le});
    per_theta_logs.push_back(le);
  }
  out.log_evidence = log_mean_exp(per_theta_logs);
  return out;
}

}  // namespace grf
