#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "grf/bridge.hpp"
#include "grf/exchange.hpp"
#include "grf/ising.hpp"
#include "grf/ising_exact.hpp"

using Catch::Approx;
using grf::BridgePriors;
using grf::GaussianPrior;
using grf::IsingModel;
using grf::Neighborhood;
using grf::ParamVec;
using grf::StatVec;

namespace {

BridgePriors default_priors() {
  return BridgePriors(GaussianPrior::isotropic(1, 5.0), GaussianPrior::isotropic(2, 5.0));
}

}  // namespace

TEST_CASE("bridged log q interpolates the two likelihoods", "[bridge]") {
  const StatVec stats{12.0, 8.0};
  REQUIRE(grf::bridged_log_q(stats, 0.1, -0.2, 0.0) == Approx(1.2));
  REQUIRE(grf::bridged_log_q(stats, 0.1, -0.2, 1.0) == Approx(1.2 - 1.6));
  REQUIRE(grf::bridged_log_q(stats, 0.1, -0.2, 0.5) == Approx(0.4));
  REQUIRE_THROWS_AS(grf::bridged_log_q({12.0}, 0.1, -0.2, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(grf::bridged_log_q(stats, 0.1, -0.2, 1.5), std::invalid_argument);
}

TEST_CASE("bridged prior endpoints and anchored constancy", "[bridge]") {
  const BridgePriors priors = default_priors();

  // t = 0: only the m1 prior enters the geometric interpolation
  REQUIRE(grf::bridged_log_prior(0.7, 123.0, 0.0, priors) ==
          Approx(priors.m1.log_density({0.7})).epsilon(1e-13));
  // t = 1: the joint m2 prior
  REQUIRE(grf::bridged_log_prior(0.7, -0.4, 1.0, priors) ==
          Approx(priors.m2.log_density({0.7, -0.4})).epsilon(1e-13));

  // with equal priors the anchored interpolation is constant in t
  const double at0 = grf::bridged_log_prior_anchored(0.0, 0.0, 0.0, priors);
  for (double t : {0.25, 0.5, 0.75, 1.0})
    REQUIRE(grf::bridged_log_prior_anchored(0.0, 0.0, t, priors) == Approx(at0).epsilon(1e-13));
}

TEST_CASE("at t = 0 a theta1 move reduces to the m1 exchange ratio", "[bridge]") {
  const BridgePriors priors = default_priors();
  grf::RngStream rng(199);
  for (int rep = 0; rep < 50; ++rep) {
    const double th1 = rng.normal(0.0, 1.0);
    const double th1p = rng.normal(0.0, 1.0);
    const double th2 = rng.normal(0.0, 1.0);  // held fixed by the move
    const StatVec y{std::floor(rng.normal(0, 10)), std::floor(rng.normal(0, 10))};
    const StatVec aux{std::floor(rng.normal(0, 10)), std::floor(rng.normal(0, 10))};

    const double bridged =
        grf::bridged_log_q(y, th1p, th2, 0.0) - grf::bridged_log_q(y, th1, th2, 0.0) +
        grf::bridged_log_prior_anchored(th1p, th2, 0.0, priors) -
        grf::bridged_log_prior_anchored(th1, th2, 0.0, priors) +
        grf::log_q(aux, {th1, 0.0}) - grf::log_q(aux, {th1p, 0.0});

    const double m1_ratio =
        grf::exchange_log_ratio({y[0]}, {th1}, {th1p}, {aux[0]}, priors.m1);
    REQUIRE(bridged == Approx(m1_ratio).margin(1e-12));
  }
}

TEST_CASE("exact per-rung ratios telescope to the endpoint z ratio", "[bridge]") {
  const auto ladder = grf::make_ladder(5, 5.0);
  grf::RngStream rng(211);
  std::vector<ParamVec> path;
  for (std::size_t j = 0; j < ladder.n_chains(); ++j)
    path.push_back({rng.normal(0.3, 0.1), rng.normal(0.0, 0.1)});

  const auto log_z = [](const ParamVec& bp) {
    return grf::log_z_brute(bp, 2, 2, Neighborhood::second);
  };
  double telescoped = 0.0;
  for (std::size_t j = 0; j + 1 < ladder.n_chains(); ++j) {
    const ParamVec low{path[j][0], ladder.t(j) * path[j][1]};
    const ParamVec high{path[j + 1][0], ladder.t(j + 1) * path[j + 1][1]};
    telescoped += log_z(high) - log_z(low);
  }
  const ParamVec start{path.front()[0], 0.0};
  const ParamVec end{path.back()[0], path.back()[1]};
  REQUIRE(telescoped == Approx(log_z(end) - log_z(start)).margin(1e-10));
}

TEST_CASE("Bayes-factor identity is exact with oracle inputs", "[bridge]") {
  grf::RngStream data_rng(223);
  const grf::Lattice y = grf::sample_lattice({0.4, 0.05}, 2, 2, Neighborhood::second, 300, data_rng);
  const StatVec y_stats = grf::suff_stats(y, Neighborhood::second);
  const BridgePriors priors = default_priors();

  grf::GridSpec spec1;
  spec1.axes = {{-3.0, 3.0, 0.01}};
  spec1.check_coverage = false;
  const grf::PosteriorGrid grid1 =
      grf::exact_posterior_grid({y_stats[0]}, priors.m1, spec1, [](const ParamVec& th) {
        return grf::log_z_transfer(th, 2, 2, Neighborhood::first);
      });

  grf::GridSpec spec2;
  spec2.axes = {{-3.0, 3.0, 0.05}, {-3.0, 3.0, 0.05}};
  spec2.check_coverage = false;
  const grf::PosteriorGrid grid2 =
      grf::exact_posterior_grid(y_stats, priors.m2, spec2, [](const ParamVec& th) {
        return grf::log_z_transfer(th, 2, 2, Neighborhood::second);
      });

  const double oracle_log_bf = grid1.log_evidence - grid2.log_evidence;

  grf::RngStream rng(227);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t node1 = 1 + rng.uniform_below(grid1.n_nodes() - 2);
    // keep the 2-d point in the interior
    const std::size_t n2 = grid2.axes[0].size();
    const std::size_t i2 = 1 + rng.uniform_below(n2 - 2);
    const std::size_t j2 = 1 + rng.uniform_below(n2 - 2);
    const std::size_t node2 = i2 * n2 + j2;

    const ParamVec th1 = grid1.theta_at(node1);
    const ParamVec th2 = grid2.theta_at(node2);

    const double a_part = th1[0] * y_stats[0] + priors.m1.log_density(th1) - grid1.log_post[node1];
    const double b_part = grf::log_q(y_stats, th2) + priors.m2.log_density(th2) - grid2.log_post[node2];
    const double log_z_ratio = grid2.log_z[node2] - grid1.log_z[node1];
    REQUIRE(a_part - b_part + log_z_ratio == Approx(oracle_log_bf).margin(1e-4));
  }
}

TEST_CASE("bridged runner is deterministic and lands near the oracle on 2x2", "[bridge]") {
  grf::RngStream data_rng(229);
  const grf::Lattice y = grf::sample_lattice({0.4, 0.0}, 2, 2, Neighborhood::second, 300, data_rng);
  const StatVec y_stats = grf::suff_stats(y, Neighborhood::second);
  const BridgePriors priors = default_priors();
  const IsingModel model2{2, 2, Neighborhood::second};

  grf::GridSpec spec1;
  spec1.axes = {{-40.0, 40.0, 0.02}};
  const grf::PosteriorGrid grid1 =
      grf::exact_posterior_grid({y_stats[0]}, priors.m1, spec1, [](const ParamVec& th) {
        return grf::log_z_transfer(th, 2, 2, Neighborhood::first);
      });
  grf::GridSpec spec2;
  spec2.axes = {{-40.0, 40.0, 0.1}, {-40.0, 40.0, 0.1}};
  const grf::PosteriorGrid grid2 =
      grf::exact_posterior_grid(y_stats, priors.m2, spec2, [](const ParamVec& th) {
        return grf::log_z_transfer(th, 2, 2, Neighborhood::second);
      });
  const double oracle_log_bf = grid1.log_evidence - grid2.log_evidence;

  grf::PopxConfig config;
  config.n = 6;
  config.iters = 25000;
  config.s = 20;
  config.aux_sweeps = 20;
  config.sigma = 1.5;
  config.r = 100;

  grf::RngStream rng_a(233), rng_b(233);
  const auto bf_a = grf::run_popx_bf(model2, y_stats, priors, config, rng_a);
  const auto bf_b = grf::run_popx_bf(model2, y_stats, priors, config, rng_b);
  REQUIRE(bf_a.log_bf_12 == bf_b.log_bf_12);
  REQUIRE(bf_a.draws_m1.size() == bf_a.draws_m2.size());
  REQUIRE(std::abs(bf_a.log_bf_12 - oracle_log_bf) < 0.6);
}
