#pragma once

#include <algorithm>
#include <stdexcept>

#include "grf/exchange.hpp"
#include "grf/ising.hpp"
#include "grf/ising_exact.hpp"

namespace grf {

struct PilotGridOptions {
  long pilot_iters = 3000;
  int pilot_aux_sweeps = 50;
  double pilot_sigma = 0.2;
  long nodes_per_dim = 501;
  double span_sd = 7.0;   // grid half-width in pilot standard deviations
  int widen_attempts = 6; // x1.5 per attempt when coverage fails
};

// Exact Ising posterior grid placed by a short pilot exchange run: the grid
// spans the pilot mean by span_sd pilot standard deviations per dimension
// and widens until the boundary-coverage check passes.
inline PosteriorGrid pilot_posterior_grid(const Lattice& y, Neighborhood order,
                                          const GaussianPrior& prior,
                                          const PilotGridOptions& opts, RngStream& rng) {
  const IsingModel model{y.rows(), y.cols(), order};
  const StatVec y_stats = suff_stats(y, order);
  const auto pilot = run_exchange(y_stats, model, prior,
                                  ProposalSpec::random_walk(model.dim(), opts.pilot_sigma),
                                  opts.pilot_iters, opts.pilot_iters / 5, opts.pilot_aux_sweeps,
                                  rng);

  const long nodes = std::max<long>(opts.nodes_per_dim, 51);
  double span = opts.span_sd;
  for (int attempt = 0; attempt < opts.widen_attempts; ++attempt) {
    GridSpec spec;
    for (std::size_t d = 0; d < model.dim(); ++d) {
      const double sd = std::max(pilot.sd[d], 0.02);
      const double lo = pilot.mean[d] - span * sd;
      const double hi = pilot.mean[d] + span * sd;
      spec.axes.push_back({lo, hi, (hi - lo) / static_cast<double>(nodes - 1)});
    }
    try {
      return ising_posterior_grid(y, order, prior, spec);
    } catch (const GridCoverageError&) {
      span *= 1.5;
    }
  }
  throw std::runtime_error("pilot_posterior_grid: coverage not reached while widening");
}

}  // namespace grf
