#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "grf/ising.hpp"
#include "grf/ising_exact.hpp"

using Catch::Approx;
using grf::GridSpec;
using grf::Lattice;
using grf::Neighborhood;

TEST_CASE("brute-force z on the 2x2 lattice", "[ising-exact]") {
  REQUIRE(grf::log_z_brute({0.0}, 2, 2, Neighborhood::first) == Approx(std::log(16.0)).epsilon(1e-14));
  // s1 histogram over the 16 states is {+4: 2, 0: 12, -4: 2}
  const double expected = std::log(2.0 * std::exp(2.0) + 2.0 * std::exp(-2.0) + 12.0);
  REQUIRE(grf::log_z_brute({0.5}, 2, 2, Neighborhood::first) == Approx(expected).epsilon(1e-14));
  REQUIRE(grf::log_z_brute({0.0}, 3, 3, Neighborhood::first) == Approx(std::log(512.0)).epsilon(1e-14));
  REQUIRE_THROWS_AS(grf::log_z_brute({0.1}, 5, 5, Neighborhood::first), std::invalid_argument);
}

TEST_CASE("z dominates the contribution of any single configuration", "[ising-exact]") {
  grf::RngStream rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const grf::ParamVec theta{rng.normal(0.0, 0.5), rng.normal(0.0, 0.3)};
    const Lattice y = Lattice::uniform_random(3, 4, rng);
    const double log_z = grf::log_z_brute(theta, 3, 4, Neighborhood::second);
    REQUIRE(log_z >= grf::log_q(grf::suff_stats(y, Neighborhood::second), theta));
  }
}

TEST_CASE("transfer recursion agrees with brute force", "[ising-exact]") {
  const std::vector<double> thetas{-0.4, -0.1, 0.0, 0.1, 0.4};
  for (int size : {2, 3, 4}) {
    for (double t1 : thetas) {
      const double brute = grf::log_z_brute({t1}, size, size, Neighborhood::first);
      const double transfer = grf::log_z_transfer({t1}, size, size, Neighborhood::first);
      REQUIRE(transfer == Approx(brute).margin(1e-10));
    }
  }
  const double brute2 = grf::log_z_brute({0.3, 0.1}, 3, 3, Neighborhood::second);
  REQUIRE(grf::log_z_transfer({0.3, 0.1}, 3, 3, Neighborhood::second) ==
          Approx(brute2).margin(1e-10));
}

TEST_CASE("z(0) = 2^N via the transfer recursion at 10x10", "[ising-exact]") {
  REQUIRE(grf::log_z_transfer({0.0}, 10, 10, Neighborhood::first) ==
          Approx(100.0 * std::log(2.0)).margin(1e-9));
}

TEST_CASE("transfer recursion is transpose-invariant and guards its limits", "[ising-exact]") {
  REQUIRE(grf::log_z_transfer({0.25}, 3, 5, Neighborhood::first) ==
          Approx(grf::log_z_transfer({0.25}, 5, 3, Neighborhood::first)).margin(1e-11));
  REQUIRE(grf::log_z_transfer({0.2, -0.1}, 2, 6, Neighborhood::second) ==
          Approx(grf::log_z_transfer({0.2, -0.1}, 6, 2, Neighborhood::second)).margin(1e-11));
  REQUIRE_THROWS_AS(grf::log_z_transfer({0.1}, 15, 15, Neighborhood::first),
                    std::invalid_argument);
  REQUIRE_NOTHROW(grf::log_z_transfer({0.1}, 15, 3, Neighborhood::first));
}

namespace {

Lattice zero_stat_2x2() {
  Lattice y(2, 2);
  y.set_spin(1, 1, -1);  // s1 = 0 for this configuration
  return y;
}

}  // namespace

TEST_CASE("grid evidence matches an independent quadrature with brute-force z", "[ising-exact]") {
  const Lattice y = zero_stat_2x2();
  const grf::StatVec stats = grf::suff_stats(y, Neighborhood::first);
  const grf::GaussianPrior prior = grf::GaussianPrior::isotropic(1, 5.0);

  GridSpec spec;
  spec.axes = {{-3.0, 3.0, 0.005}};
  spec.check_coverage = false;  // oracle-vs-oracle comparison over a fixed range
  const grf::PosteriorGrid grid = grf::ising_posterior_grid(y, Neighborhood::first, prior, spec);

  // independent trapezoid quadrature of q(y|theta) pi(theta) / z(theta)
  double integral = 0.0;
  const int n = 1200;
  for (int i = 0; i <= n; ++i) {
    const double theta = -3.0 + 6.0 * i / n;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    integral += w * std::exp(stats[0] * theta - grf::log_z_brute({theta}, 2, 2, Neighborhood::first) +
                             prior.log_density({theta}));
  }
  integral *= 6.0 / n;
  REQUIRE(grid.log_evidence == Approx(std::log(integral)).margin(1e-6));
}

TEST_CASE("grid posterior normalises to one", "[ising-exact]") {
  GridSpec spec;
  spec.axes = {{-3.0, 3.0, 0.01}};
  spec.check_coverage = false;
  const grf::PosteriorGrid grid = grf::ising_posterior_grid(
      zero_stat_2x2(), Neighborhood::first, grf::GaussianPrior::isotropic(1, 5.0), spec);
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) mass += grid.node_mass(i);
  REQUIRE(mass == Approx(1.0).margin(1e-8));
}

TEST_CASE("halving the grid step barely moves the evidence", "[ising-exact]") {
  const Lattice y = zero_stat_2x2();
  const grf::GaussianPrior prior = grf::GaussianPrior::isotropic(1, 5.0);
  GridSpec coarse, fine;
  coarse.axes = {{-3.0, 3.0, 0.005}};
  coarse.check_coverage = false;
  fine.axes = {{-3.0, 3.0, 0.0025}};
  fine.check_coverage = false;
  const double a = grf::ising_posterior_grid(y, Neighborhood::first, prior, coarse).log_evidence;
  const double b = grf::ising_posterior_grid(y, Neighborhood::first, prior, fine).log_evidence;
  REQUIRE(std::abs(a - b) < 1e-6);
}

TEST_CASE("a grid that misses posterior mass is rejected", "[ising-exact]") {
  GridSpec spec;
  spec.axes = {{-3.0, 3.0, 0.01}};  // 2x2 posterior has prior-like tails far beyond this
  REQUIRE_THROWS_AS(grf::ising_posterior_grid(zero_stat_2x2(), Neighborhood::first,
                                              grf::GaussianPrior::isotropic(1, 5.0), spec),
                    grf::GridCoverageError);
}

TEST_CASE("grid node bookkeeping", "[ising-exact]") {
  GridSpec spec;
  spec.axes = {{-1.0, 1.0, 0.5}, {-2.0, 2.0, 1.0}};
  spec.check_coverage = false;
  const grf::StatVec stats{2.0, 1.0};
  const grf::PosteriorGrid grid = grf::exact_posterior_grid(
      stats, grf::GaussianPrior::isotropic(2, 5.0), spec,
      [](const grf::ParamVec&) { return 1.0; });
  REQUIRE(grid.n_nodes() == 25);
  const grf::ParamVec theta = grid.theta_at(7);  // row 1 (=-0.5), col 2 (=0)
  REQUIRE(theta[0] == Approx(-0.5));
  REQUIRE(theta[1] == Approx(0.0));
  REQUIRE(grid.nearest_node({-0.48, 0.1}) == 7);
  REQUIRE(grid.nearest_node({-10.0, 10.0}) == 4);  // clamped to the corner
}
