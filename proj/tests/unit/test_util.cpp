#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "grf/util.hpp"

using Catch::Approx;

TEST_CASE("log_sum_exp agrees with the direct sum on benign values", "[util]") {
  const std::vector<double> xs{0.1, -1.5, 2.0, 0.0};
  double direct = 0.0;
  for (double x : xs) direct += std::exp(x);
  REQUIRE(grf::log_sum_exp(xs) == Approx(std::log(direct)).epsilon(1e-14));
}

TEST_CASE("log_sum_exp survives values that would overflow exp", "[util]") {
  const std::vector<double> xs{1000.0, 1001.0};
  REQUIRE(grf::log_sum_exp(xs) == Approx(1001.0 + std::log1p(std::exp(-1.0))).epsilon(1e-14));
}

TEST_CASE("accumulator ignores -inf terms and reports counts", "[util]") {
  grf::LogSumAccumulator acc;
  acc.add(-std::numeric_limits<double>::infinity());
  acc.add(0.0);
  acc.add(0.0);
  REQUIRE(acc.log_sum() == Approx(std::log(2.0)));
}

TEST_CASE("log_mean_exp of identical values is the value", "[util]") {
  const std::vector<double> xs(17, -3.25);
  REQUIRE(grf::log_mean_exp(xs) == Approx(-3.25).epsilon(1e-14));
  REQUIRE_THROWS_AS(grf::log_mean_exp({}), std::invalid_argument);
}

TEST_CASE("mean, sample_sd and quantile basics", "[util]") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  REQUIRE(grf::mean(xs) == Approx(2.5));
  REQUIRE(grf::sample_sd(xs) == Approx(std::sqrt(5.0 / 3.0)));
  REQUIRE(grf::quantile(xs, 0.0) == Approx(1.0));
  REQUIRE(grf::quantile(xs, 1.0) == Approx(4.0));
  REQUIRE(grf::quantile(xs, 0.5) == Approx(2.5));
  REQUIRE_THROWS_AS(grf::quantile({}, 0.5), std::invalid_argument);
}
