#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grf/core.hpp"
#include "grf/ising.hpp"
#include "grf/util.hpp"

namespace grf {

// Exact log z(theta) by enumerating all 2^N spin configurations.
// Feasible up to N = 20 sites.
inline double log_z_brute(const ParamVec& theta, int rows, int cols, Neighborhood order) {
  if (theta.size() != stat_dim(order))
    throw std::invalid_argument("log_z_brute: theta dimension does not match order");
  const int n = rows * cols;
  if (n > 20) throw std::invalid_argument("log_z_brute: lattice too large for enumeration");

  // Unordered pairs as (site, site) index pairs; site = col*rows + row.
  std::vector<std::pair<int, int>> first, diag;
  const auto site = [rows](int r, int c) { return c * rows + r; };
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      if (r + 1 < rows) first.emplace_back(site(r, c), site(r + 1, c));
      if (c + 1 < cols) first.emplace_back(site(r, c), site(r, c + 1));
      if (c + 1 < cols && r + 1 < rows) diag.emplace_back(site(r, c), site(r + 1, c + 1));
      if (c + 1 < cols && r > 0) diag.emplace_back(site(r, c), site(r - 1, c + 1));
    }

  const double t1 = theta[0];
  const double t2 = order == Neighborhood::second ? theta[1] : 0.0;
  LogSumAccumulator acc;
  for (std::uint32_t u = 0; u < (std::uint32_t{1} << n); ++u) {
    int s1 = 0, s2 = 0;
    for (const auto& [i, j] : first) s1 += ((u >> i ^ u >> j) & 1u) ? -1 : 1;
    if (order == Neighborhood::second)
      for (const auto& [i, j] : diag) s2 += ((u >> i ^ u >> j) & 1u) ? -1 : 1;
    acc.add(t1 * s1 + t2 * s2);
  }
  return acc.log_sum();
}

// Exact log z(theta) by a column-to-column transfer recursion over 2^h
// column states, h = min(rows, cols); the lattice is transposed first if
// that makes columns shorter (both statistics are transpose-invariant).
// Log-domain rescaling after every column keeps the values representable.
inline double log_z_transfer(const ParamVec& theta, int rows, int cols, Neighborhood order) {
  if (theta.size() != stat_dim(order))
    throw std::invalid_argument("log_z_transfer: theta dimension does not match order");
  const int h = rows <= cols ? rows : cols;
  const int w = rows <= cols ? cols : rows;
  if (h > 14) throw std::invalid_argument("log_z_transfer: column height too large");

  const std::uint32_t n_states = std::uint32_t{1} << h;
  const std::uint32_t pair_mask = (std::uint32_t{1} << (h - 1)) - 1;
  const bool second = order == Neighborhood::second;
  const double t1 = theta[0];
  const double t2 = second ? theta[1] : 0.0;

  // sum of s_k*s_{k+1} within a column, per state
  std::vector<int> within(n_states);
  for (std::uint32_t s = 0; s < n_states; ++s)
    within[s] = (h - 1) - 2 * std::popcount((s ^ (s >> 1)) & pair_mask);

  // exp tables over the integer pair-sum ranges
  const int k1max = 2 * h - 1;            // within (h-1) + between (h)
  const int k2max = 2 * (h - 1);          // two diagonal families
  std::vector<double> e1(2 * k1max + 1), e2(2 * k2max + 1);
  for (int k = -k1max; k <= k1max; ++k) e1[k + k1max] = std::exp(t1 * k);
  for (int k = -k2max; k <= k2max; ++k) e2[k + k2max] = std::exp(t2 * k);

  std::vector<double> v(n_states), next(n_states);
  for (std::uint32_t s = 0; s < n_states; ++s) v[s] = e1[within[s] + k1max];

  double log_scale = 0.0;
  for (int c = 1; c < w; ++c) {
    for (std::uint32_t to = 0; to < n_states; ++to) {
      double acc = 0.0;
      for (std::uint32_t from = 0; from < n_states; ++from) {
        const int between = h - 2 * std::popcount(from ^ to);
        double weight = e1[within[to] + between + k1max];
        if (second) {
          const int d = 2 * (h - 1) -
                        2 * static_cast<int>(std::popcount((from ^ (to >> 1)) & pair_mask) +
                                             std::popcount(((from >> 1) ^ to) & pair_mask));
          weight *= e2[d + k2max];
        }
        acc += v[from] * weight;
      }
      next[to] = acc;
    }
    double vmax = 0.0;
    for (double x : next) vmax = x > vmax ? x : vmax;
    for (std::uint32_t s = 0; s < n_states; ++s) v[s] = next[s] / vmax;
    log_scale += std::log(vmax);
  }

  double total = 0.0;
  for (double x : v) total += x;
  return std::log(total) + log_scale;
}

// --- gridded exact posterior -------------------------------------------

struct GridAxis {
  double lo;
  double hi;
  double step;
};

struct GridSpec {
  std::vector<GridAxis> axes;
  double boundary_tol = 1e-8;  // max unnormalised density at a boundary node, relative to peak
  bool check_coverage = true;

  void validate() const {
    if (axes.empty()) throw std::invalid_argument("GridSpec: no axes");
    for (const auto& a : axes) {
      if (!(a.lo < a.hi)) throw std::invalid_argument("GridSpec: lo must be < hi");
      if (!(a.step > 0.0)) throw std::invalid_argument("GridSpec: step must be positive");
    }
  }
};

struct GridCoverageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact posterior evaluated on a rectangular grid, normalised by the
// trapezoidal integral of q(y|theta) pi(theta) / z(theta); that integral
// is the exact evidence pi(y) up to quadrature error.
struct PosteriorGrid {
  std::vector<std::vector<double>> axes;  // node coordinates per dimension
  std::vector<double> log_post;           // normalised log density, flattened (last axis fastest)
  std::vector<double> log_z;              // log z(theta) per node
  std::vector<double> log_weight;         // log trapezoid weight incl. volume element, per node
  double log_evidence = 0.0;
  std::vector<double> mean, sd;
  double boundary_ratio = 0.0;

  std::size_t n_nodes() const { return log_post.size(); }
  std::size_t dims() const { return axes.size(); }

  ParamVec theta_at(std::size_t flat) const {
    ParamVec theta(dims());
    for (std::size_t d = dims(); d-- > 0;) {
      const std::size_t n = axes[d].size();
      theta[d] = axes[d][flat % n];
      flat /= n;
    }
    return theta;
  }

  std::size_t nearest_node(const ParamVec& theta) const {
    check_same_dim(theta, mean, "PosteriorGrid::nearest_node");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dims(); ++d) {
      const auto& ax = axes[d];
      const double pos = (theta[d] - ax.front()) / (ax[1] - ax[0]);
      long i = std::lround(pos);
      i = i < 0 ? 0 : (i >= static_cast<long>(ax.size()) ? static_cast<long>(ax.size()) - 1 : i);
      flat = flat * ax.size() + static_cast<std::size_t>(i);
    }
    return flat;
  }

  // posterior mass attributed to a node by its trapezoid weight
  double node_mass(std::size_t flat) const {
    return std::exp(log_post[flat] + log_weight[flat]);
  }
};

template <typename LogZFn>
PosteriorGrid exact_posterior_grid(const StatVec& y_stats, const GaussianPrior& prior,
                                   const GridSpec& spec, LogZFn&& log_z_fn) {
  spec.validate();
  if (spec.axes.size() != y_stats.size() || prior.dim() != y_stats.size())
    throw std::invalid_argument("exact_posterior_grid: dimension mismatch");

  PosteriorGrid grid;
  std::size_t total = 1;
  double log_volume_element = 0.0;
  for (const auto& a : spec.axes) {
    const auto n = static_cast<std::size_t>(std::llround((a.hi - a.lo) / a.step)) + 1;
    if (n < 3) throw std::invalid_argument("exact_posterior_grid: axis has fewer than 3 nodes");
    std::vector<double> nodes(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = a.lo + static_cast<double>(i) * a.step;
    grid.axes.push_back(std::move(nodes));
    total *= n;
    log_volume_element += std::log(a.step);
  }

  grid.log_post.resize(total);
  grid.log_z.resize(total);
  grid.log_weight.resize(total);

  double peak = -std::numeric_limits<double>::infinity();
  double boundary_peak = -std::numeric_limits<double>::infinity();
  LogSumAccumulator evidence;
  for (std::size_t flat = 0; flat < total; ++flat) {
    ParamVec theta = grid.theta_at(flat);
    const double lz = log_z_fn(theta);
    const double lp = log_q(y_stats, theta) - lz + prior.log_density(theta);
    double log_w = log_volume_element;
    bool on_boundary = false;
    std::size_t rem = flat;
    for (std::size_t d = grid.dims(); d-- > 0;) {
      const std::size_t n = grid.axes[d].size();
      const std::size_t i = rem % n;
      rem /= n;
      if (i == 0 || i == n - 1) {
        log_w += std::log(0.5);
        on_boundary = true;
      }
    }
    grid.log_z[flat] = lz;
    grid.log_post[flat] = lp;  // unnormalised for now
    grid.log_weight[flat] = log_w;
    peak = lp > peak ? lp : peak;
    if (on_boundary && lp > boundary_peak) boundary_peak = lp;
    evidence.add(lp + log_w);
  }

  grid.boundary_ratio = std::exp(boundary_peak - peak);
  if (spec.check_coverage && !(grid.boundary_ratio <= spec.boundary_tol))
    throw GridCoverageError("exact_posterior_grid: grid too narrow (boundary density " +
                            std::to_string(grid.boundary_ratio) + " of peak)");

  grid.log_evidence = evidence.log_sum();
  for (double& lp : grid.log_post) lp -= grid.log_evidence;

  // grid moments
  grid.mean.assign(grid.dims(), 0.0);
  grid.sd.assign(grid.dims(), 0.0);
  std::vector<double> m2(grid.dims(), 0.0);
  double mass = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    const double w = grid.node_mass(flat);
    const ParamVec theta = grid.theta_at(flat);
    mass += w;
    for (std::size_t d = 0; d < grid.dims(); ++d) {
      grid.mean[d] += w * theta[d];
      m2[d] += w * theta[d] * theta[d];
    }
  }
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    grid.mean[d] /= mass;
    grid.sd[d] = std::sqrt(std::max(0.0, m2[d] / mass - grid.mean[d] * grid.mean[d]));
  }
  return grid;
}

inline PosteriorGrid ising_posterior_grid(const Lattice& y, Neighborhood order,
                                          const GaussianPrior& prior, const GridSpec& spec) {
  const StatVec stats = suff_stats(y, order);
  const int rows = y.rows(), cols = y.cols();
  return exact_posterior_grid(stats, prior, spec, [rows, cols, order](const ParamVec& theta) {
    return log_z_transfer(theta, rows, cols, order);
  });
}

}  // namespace grf
