#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grf/core.hpp"
#include "grf/rng.hpp"
#include "grf/util.hpp"

namespace grf {

// One rejection-sampling draw: model index, its parameter, the full
// concatenated statistic vector of the pseudo-data, and the standardised
// distance to the observed statistics.
struct AbcDraw {
  int model = 0;
  ParamVec theta;
  StatVec pseudo_stats;
  double distance = 0.0;
};

struct AbcTable {
  std::vector<AbcDraw> draws;
  StatVec observed;
  StatVec stat_sd;  // per-coordinate sd of the pseudo statistics, used to standardise
};

inline double abc_distance(const StatVec& a, const StatVec& b, const StatVec& scale) {
  check_same_dim(a, b, "abc_distance");
  check_same_dim(a, scale, "abc_distance");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double z = (a[k] - b[k]) / scale[k];
    acc += z * z;
  }
  return std::sqrt(acc);
}

// Reference table for nested Gibbs random field models: model m uses the
// first priors[m].dim() statistics of the full model; simulating from it
// means running the full model with the trailing parameters at zero.
// Distances are standardised Euclidean on the concatenated statistics,
// with scales taken from the table itself.
template <GibbsModel M>
AbcTable abc_reference_table(const StatVec& observed, const M& full_model,
                             const std::vector<GaussianPrior>& priors, long n_draws,
                             int aux_sweeps, RngStream& rng) {
  if (n_draws < 1) throw std::invalid_argument("abc_reference_table: n_draws must be >= 1");
  const std::size_t full_dim = full_model.dim();
  check_same_dim(observed, std::vector<double>(full_dim), "abc_reference_table");
  if (priors.empty()) throw std::invalid_argument("abc_reference_table: no models");
  for (const auto& p : priors)
    if (p.dim() > full_dim)
      throw std::invalid_argument("abc_reference_table: model dimension exceeds full model");

  AbcTable table;
  table.observed = observed;
  table.draws.resize(static_cast<std::size_t>(n_draws));
  const auto n_models = static_cast<std::uint64_t>(priors.size());
  for (long i = 0; i < n_draws; ++i) {
    RngStream draw_rng = rng.fork(static_cast<std::uint64_t>(i));
    AbcDraw& d = table.draws[static_cast<std::size_t>(i)];
    d.model = static_cast<int>(draw_rng.uniform_below(n_models));
    d.theta = priors[static_cast<std::size_t>(d.model)].sample(draw_rng);
    ParamVec padded(full_dim, 0.0);
    for (std::size_t k = 0; k < d.theta.size(); ++k) padded[k] = d.theta[k];
    d.pseudo_stats = full_model.sample_stats(padded, aux_sweeps, draw_rng);
  }

  // standardisation scales from the table's own pseudo statistics
  table.stat_sd.assign(full_dim, 0.0);
  std::vector<double> column(table.draws.size());
  for (std::size_t k = 0; k < full_dim; ++k) {
    for (std::size_t i = 0; i < table.draws.size(); ++i) column[i] = table.draws[i].pseudo_stats[k];
    const double sd = table.draws.size() > 1 ? sample_sd(column) : 0.0;
    table.stat_sd[k] = sd > 0.0 ? sd : 1.0;
  }
  for (auto& d : table.draws) d.distance = abc_distance(d.pseudo_stats, observed, table.stat_sd);
  return table;
}

// Tolerance = the ceil(quantile*n)-th smallest distance, so that accepting
// "distance <= epsilon" keeps exactly that many draws (barring ties).
inline double select_tolerance(std::vector<double> distances, double quantile) {
  if (distances.empty()) throw std::invalid_argument("select_tolerance: empty distances");
  if (!(quantile > 0.0 && quantile <= 1.0))
    throw std::invalid_argument("select_tolerance: quantile outside (0,1]");
  const auto k = static_cast<std::size_t>(
      std::ceil(quantile * static_cast<double>(distances.size())));
  const std::size_t idx = std::max<std::size_t>(k, 1) - 1;
  std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(idx),
                   distances.end());
  return distances[idx];
}

// pi_hat(m|y) = accepted draws from model m / total accepted, acceptance
// rule distance <= epsilon.
inline std::vector<double> posterior_model_prob(const AbcTable& table, double epsilon,
                                                std::size_t n_models) {
  std::vector<long> counts(n_models, 0);
  long total = 0;
  for (const auto& d : table.draws)
    if (d.distance <= epsilon) {
      if (d.model < 0 || static_cast<std::size_t>(d.model) >= n_models)
        throw std::invalid_argument("posterior_model_prob: model index out of range");
      ++counts[static_cast<std::size_t>(d.model)];
      ++total;
    }
  if (total == 0) throw std::runtime_error("posterior_model_prob: zero accepted draws");
  std::vector<double> probs(n_models);
  for (std::size_t m = 0; m < n_models; ++m)
    probs[m] = static_cast<double>(counts[m]) / static_cast<double>(total);
  return probs;
}

// CSV persistence (model, theta components, statistic components, distance);
// lets a table be re-thresholded without re-simulation.
inline void save_abc_table(const AbcTable& table, std::size_t max_theta_dim,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_abc_table: cannot open " + path.string());
  out << "model";
  for (std::size_t k = 0; k < max_theta_dim; ++k) out << ",theta" << k + 1;
  for (std::size_t k = 0; k < table.observed.size(); ++k) out << ",s" << k + 1;
  out << ",distance\n";
  out.precision(17);
  for (const auto& d : table.draws) {
    out << d.model + 1;
    for (std::size_t k = 0; k < max_theta_dim; ++k) {
      out << ',';
      if (k < d.theta.size()) out << d.theta[k];
    }
    for (double s : d.pseudo_stats) out << ',' << s;
    out << ',' << d.distance << '\n';
  }
  if (!out) throw std::runtime_error("save_abc_table: write failed for " + path.string());
}

inline AbcTable load_abc_table(const std::filesystem::path& path, std::size_t max_theta_dim,
                               std::size_t stat_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_abc_table: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_abc_table: empty file");
  AbcTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    AbcDraw d;
    if (!std::getline(row, cell, ',')) throw std::runtime_error("load_abc_table: bad row");
    d.model = std::stoi(cell) - 1;
    for (std::size_t k = 0; k < max_theta_dim; ++k) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("load_abc_table: bad row");
      if (!cell.empty()) d.theta.push_back(std::stod(cell));
    }
    for (std::size_t k = 0; k < stat_dim; ++k) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("load_abc_table: bad row");
      d.pseudo_stats.push_back(std::stod(cell));
    }
    if (!std::getline(row, cell, ',')) throw std::runtime_error("load_abc_table: bad row");
    d.distance = std::stod(cell);
    table.draws.push_back(std::move(d));
  }
  return table;
}

}  // namespace grf
