#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "grf/abc.hpp"
#include "grf/ising.hpp"
#include "grf/ising_exact.hpp"

using Catch::Approx;
using grf::AbcTable;
using grf::GaussianPrior;
using grf::IsingModel;
using grf::Neighborhood;
using grf::StatVec;

TEST_CASE("tolerance selection keeps exactly the quantile count", "[abc]") {
  REQUIRE(grf::select_tolerance({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.0);

  std::vector<double> big(500000);
  std::iota(big.begin(), big.end(), 1.0);
  std::reverse(big.begin(), big.end());
  REQUIRE(grf::select_tolerance(big, 0.005) == 2500.0);
  REQUIRE(grf::select_tolerance(big, 0.001) == 500.0);

  REQUIRE_THROWS_AS(grf::select_tolerance({}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(grf::select_tolerance({1.0}, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(grf::select_tolerance({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("standardised distance is a metric on statistic vectors", "[abc]") {
  const StatVec scale{2.0, 4.0};
  REQUIRE(grf::abc_distance({3.0, -1.0}, {3.0, -1.0}, scale) == 0.0);
  REQUIRE(grf::abc_distance({3.0, -1.0}, {1.0, 2.0}, scale) ==
          grf::abc_distance({1.0, 2.0}, {3.0, -1.0}, scale));
  REQUIRE(grf::abc_distance({2.0, 0.0}, {0.0, 0.0}, scale) == Approx(1.0));
}

TEST_CASE("reference table: determinism, model prior, zero distance", "[abc]") {
  const IsingModel full{2, 2, Neighborhood::second};
  const std::vector<GaussianPrior> priors{GaussianPrior::isotropic(1, 5.0),
                                          GaussianPrior::isotropic(2, 5.0)};
  const StatVec observed{4.0, 2.0};

  grf::RngStream rng_a(241), rng_b(241);
  const AbcTable a = grf::abc_reference_table(observed, full, priors, 10000, 10, rng_a);
  const AbcTable b = grf::abc_reference_table(observed, full, priors, 10000, 10, rng_b);
  REQUIRE(a.draws.size() == 10000);
  for (std::size_t i = 0; i < 100; ++i) REQUIRE(a.draws[i].distance == b.draws[i].distance);

  long m1_count = 0;
  for (const auto& d : a.draws) {
    m1_count += d.model == 0 ? 1 : 0;
    REQUIRE(d.theta.size() == (d.model == 0 ? 1u : 2u));
    if (d.pseudo_stats == observed) REQUIRE(d.distance == 0.0);
  }
  // uniform model prior: 3 se band around one half
  const double freq = static_cast<double>(m1_count) / 10000.0;
  REQUIRE(std::abs(freq - 0.5) < 3.0 * 0.5 / std::sqrt(10000.0));
}

TEST_CASE("acceptance sets nest as the tolerance shrinks", "[abc]") {
  const IsingModel full{2, 2, Neighborhood::second};
  const std::vector<GaussianPrior> priors{GaussianPrior::isotropic(1, 5.0),
                                          GaussianPrior::isotropic(2, 5.0)};
  grf::RngStream rng(251);
  const AbcTable table = grf::abc_reference_table({4.0, 2.0}, full, priors, 5000, 10, rng);

  std::vector<double> distances;
  for (const auto& d : table.draws) distances.push_back(d.distance);
  const double eps_wide = grf::select_tolerance(distances, 0.2);
  const double eps_narrow = grf::select_tolerance(distances, 0.05);
  REQUIRE(eps_narrow <= eps_wide);

  std::vector<std::size_t> narrow, wide;
  for (std::size_t i = 0; i < table.draws.size(); ++i) {
    if (table.draws[i].distance <= eps_narrow) narrow.push_back(i);
    if (table.draws[i].distance <= eps_wide) wide.push_back(i);
  }
  REQUIRE(std::includes(wide.begin(), wide.end(), narrow.begin(), narrow.end()));
}

TEST_CASE("posterior model probabilities count accepted draws", "[abc]") {
  AbcTable table;
  table.draws = {{0, {0.1}, {1.0, 1.0}, 0.5},
                 {0, {0.2}, {1.0, 1.0}, 0.7},
                 {0, {0.3}, {1.0, 1.0}, 0.9},
                 {1, {0.4, 0.1}, {1.0, 1.0}, 0.2},
                 {1, {0.5, 0.2}, {1.0, 1.0}, 7.0}};
  const auto probs = grf::posterior_model_prob(table, 1.0, 2);
  REQUIRE(probs[0] == Approx(0.75));
  REQUIRE(probs[1] == Approx(0.25));
  REQUIRE_THROWS_AS(grf::posterior_model_prob(table, 0.01, 2), std::runtime_error);
}

TEST_CASE("accepting everything recovers the model prior", "[abc]") {
  const IsingModel full{2, 2, Neighborhood::second};
  const std::vector<GaussianPrior> priors{GaussianPrior::isotropic(1, 5.0),
                                          GaussianPrior::isotropic(2, 5.0)};
  grf::RngStream rng(257);
  const AbcTable table = grf::abc_reference_table({0.0, 0.0}, full, priors, 20000, 5, rng);
  double max_dist = 0.0;
  for (const auto& d : table.draws) max_dist = std::max(max_dist, d.distance);
  const auto probs = grf::posterior_model_prob(table, max_dist, 2);
  REQUIRE(std::abs(probs[0] - 0.5) < 3.0 * 0.5 / std::sqrt(20000.0));
}

TEST_CASE("table CSV round-trips", "[abc]") {
  namespace fs = std::filesystem;
  const IsingModel full{2, 2, Neighborhood::second};
  const std::vector<GaussianPrior> priors{GaussianPrior::isotropic(1, 5.0),
                                          GaussianPrior::isotropic(2, 5.0)};
  grf::RngStream rng(263);
  const AbcTable table = grf::abc_reference_table({4.0, 2.0}, full, priors, 500, 5, rng);

  const fs::path dir = fs::temp_directory_path() / "grf_abc_io_test";
  fs::create_directories(dir);
  const fs::path file = dir / "table.csv";
  grf::save_abc_table(table, 2, file);
  const AbcTable loaded = grf::load_abc_table(file, 2, 2);
  REQUIRE(loaded.draws.size() == table.draws.size());
  for (std::size_t i = 0; i < table.draws.size(); ++i) {
    REQUIRE(loaded.draws[i].model == table.draws[i].model);
    REQUIRE(loaded.draws[i].theta.size() == table.draws[i].theta.size());
    REQUIRE(loaded.draws[i].distance == Approx(table.draws[i].distance).epsilon(1e-12));
    REQUIRE(loaded.draws[i].pseudo_stats == table.draws[i].pseudo_stats);
  }
  fs::remove_all(dir);
}

TEST_CASE("ABC recovers the exact model probability on 2x2", "[abc]") {
  grf::RngStream data_rng(269);
  const grf::Lattice y = grf::sample_lattice({0.8}, 2, 2, Neighborhood::first, 300, data_rng);
  const StatVec observed = grf::suff_stats(y, Neighborhood::second);
  const GaussianPrior prior1 = GaussianPrior::isotropic(1, 5.0);
  const GaussianPrior prior2 = GaussianPrior::isotropic(2, 5.0);

  // exact posterior model probability from the grid oracles
  grf::GridSpec spec1;
  spec1.axes = {{-40.0, 40.0, 0.02}};
  const double log_ev1 =
      grf::exact_posterior_grid({observed[0]}, prior1, spec1, [](const grf::ParamVec& th) {
        return grf::log_z_transfer(th, 2, 2, Neighborhood::first);
      }).log_evidence;
  grf::GridSpec spec2;
  spec2.axes = {{-40.0, 40.0, 0.1}, {-40.0, 40.0, 0.1}};
  const double log_ev2 =
      grf::exact_posterior_grid(observed, prior2, spec2, [](const grf::ParamVec& th) {
        return grf::log_z_transfer(th, 2, 2, Neighborhood::second);
      }).log_evidence;
  const double exact_post_m1 = 1.0 / (1.0 + std::exp(log_ev2 - log_ev1));

  const IsingModel full{2, 2, Neighborhood::second};
  const std::vector<GaussianPrior> priors{prior1, prior2};
  int hits = 0;
  for (int seed = 0; seed < 10; ++seed) {
    grf::RngStream rng(1000 + static_cast<std::uint64_t>(seed));
    const AbcTable table = grf::abc_reference_table(observed, full, priors, 100000, 30, rng);
    std::vector<double> distances;
    for (const auto& d : table.draws) distances.push_back(d.distance);
    const double eps = grf::select_tolerance(distances, 0.005);
    const auto probs = grf::posterior_model_prob(table, eps, 2);
    if (std::abs(probs[0] - exact_post_m1) < 0.1) ++hits;
  }
  REQUIRE(hits >= 8);
}
