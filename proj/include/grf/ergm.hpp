#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grf/core.hpp"
#include "grf/rng.hpp"
#include "grf/util.hpp"

namespace grf {

// Undirected simple graph: symmetric adjacency, empty diagonal. Node
// degrees and the edge count are maintained incrementally.
class Graph {
 public:
  explicit Graph(int n) : n_(n), adj_(static_cast<std::size_t>(n) * n, 0), deg_(n, 0) {
    if (n < 1) throw std::invalid_argument("Graph: need at least one node");
  }

  int nodes() const { return n_; }
  int degree(int i) const { return deg_[static_cast<std::size_t>(i)]; }
  long edges() const { return edges_; }
  long dyads() const { return static_cast<long>(n_) * (n_ - 1) / 2; }

  bool edge(int i, int j) const { return adj_[idx(i, j)] != 0; }

  void set_edge(int i, int j, bool present) {
    if (i == j) throw std::invalid_argument("Graph: self-loops are not permitted");
    if (i < 0 || j < 0 || i >= n_ || j >= n_) throw std::out_of_range("Graph: node out of range");
    if (edge(i, j) == present) return;
    adj_[idx(i, j)] = adj_[idx(j, i)] = present ? 1 : 0;
    const int d = present ? 1 : -1;
    deg_[static_cast<std::size_t>(i)] += d;
    deg_[static_cast<std::size_t>(j)] += d;
    edges_ += d;
  }

  void toggle(int i, int j) { set_edge(i, j, !edge(i, j)); }

  bool operator==(const Graph&) const = default;

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j);
  }

  int n_;
  std::vector<std::uint8_t> adj_;
  std::vector<int> deg_;
  long edges_ = 0;
};

// (edges) or (edges, two_stars); two-stars counted as sum_k C(deg(k), 2),
// i.e. pairs of edges sharing a common node, every centre included.
inline StatVec graph_stats(const Graph& g, bool two_stars) {
  if (!two_stars) return {static_cast<double>(g.edges())};
  long ts = 0;
  for (int k = 0; k < g.nodes(); ++k) {
    const long d = g.degree(k);
    ts += d * (d - 1) / 2;
  }
  return {static_cast<double>(g.edges()), static_cast<double>(ts)};
}

namespace detail {

// Metropolis accept probabilities for toggling a dyad, indexed by the sum
// of the endpoint degrees before the toggle. Adding edge (i,j) changes the
// two-star count by deg(i)+deg(j); deleting it changes it by
// -(deg(i)+deg(j)-2).
struct ToggleTables {
  std::vector<double> p_add;  // indexed by deg(i)+deg(j), edge absent
  std::vector<double> p_del;  // indexed by deg(i)+deg(j), edge present

  ToggleTables(const ParamVec& theta, int n, bool two_stars) {
    if (theta.size() != (two_stars ? 2u : 1u))
      throw std::invalid_argument("ergm: theta dimension does not match model");
    const double t1 = theta[0];
    const double t2 = two_stars ? theta[1] : 0.0;
    p_add.resize(2 * n - 1);
    p_del.resize(2 * n - 1);
    for (int d = 0; d <= 2 * n - 2; ++d) {
      p_add[static_cast<std::size_t>(d)] = std::min(1.0, std::exp(t1 + t2 * d));
      p_del[static_cast<std::size_t>(d)] = std::min(1.0, std::exp(-t1 - t2 * (d - 2)));
    }
  }
};

inline void ergm_sweep_impl(Graph& g, const ToggleTables& tab, RngStream& rng) {
  const int n = g.nodes();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const std::size_t d = static_cast<std::size_t>(g.degree(i) + g.degree(j));
      if (g.edge(i, j)) {
        if (rng.uniform() < tab.p_del[d]) g.set_edge(i, j, false);
      } else {
        if (rng.uniform() < tab.p_add[d]) g.set_edge(i, j, true);
      }
    }
}

}  // namespace detail

// One pass of single-edge-toggle Metropolis updates, dyads visited in
// lexicographic order; leaves the ERGM law invariant.
inline void ergm_sweep(Graph& g, const ParamVec& theta, bool two_stars, RngStream& rng) {
  const detail::ToggleTables tab(theta, g.nodes(), two_stars);
  detail::ergm_sweep_impl(g, tab, rng);
}

// Approximate draw: empty graph, n_sweeps toggle passes.
inline Graph sample_graph(const ParamVec& theta, int n, bool two_stars, int n_sweeps,
                          RngStream& rng) {
  if (n_sweeps < 1) throw std::invalid_argument("sample_graph: n_sweeps must be >= 1");
  const detail::ToggleTables tab(theta, n, two_stars);
  Graph g(n);
  for (int k = 0; k < n_sweeps; ++k) detail::ergm_sweep_impl(g, tab, rng);
  return g;
}

// Exact log z over all 2^C(n,2) graphs; feasible for C(n,2) <= 20.
inline double log_z_graph_brute(const ParamVec& theta, int n, bool two_stars) {
  const long dyads = static_cast<long>(n) * (n - 1) / 2;
  if (dyads > 20) throw std::invalid_argument("log_z_graph_brute: too many dyads");
  if (theta.size() != (two_stars ? 2u : 1u))
    throw std::invalid_argument("log_z_graph_brute: theta dimension does not match model");

  std::vector<std::pair<int, int>> dyad_list;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dyad_list.emplace_back(i, j);

  const double t1 = theta[0];
  const double t2 = two_stars ? theta[1] : 0.0;
  std::vector<int> deg(static_cast<std::size_t>(n));
  LogSumAccumulator acc;
  for (std::uint32_t u = 0; u < (std::uint32_t{1} << dyads); ++u) {
    const int edges = std::popcount(u);
    double stat = t1 * edges;
    if (two_stars) {
      std::fill(deg.begin(), deg.end(), 0);
      for (long b = 0; b < dyads; ++b)
        if ((u >> b) & 1u) {
          ++deg[static_cast<std::size_t>(dyad_list[static_cast<std::size_t>(b)].first)];
          ++deg[static_cast<std::size_t>(dyad_list[static_cast<std::size_t>(b)].second)];
        }
      long ts = 0;
      for (int k = 0; k < n; ++k) ts += static_cast<long>(deg[static_cast<std::size_t>(k)]) *
                                        (deg[static_cast<std::size_t>(k)] - 1) / 2;
      stat += t2 * static_cast<double>(ts);
    }
    acc.add(stat);
  }
  return acc.log_sum();
}

struct ErgmModel {
  int nodes;
  bool two_stars;

  std::size_t dim() const { return two_stars ? 2 : 1; }
  long dyads() const { return static_cast<long>(nodes) * (nodes - 1) / 2; }
  double log_z0() const { return static_cast<double>(dyads()) * 0.69314718055994530941723212145818; }

  StatVec stats(const Graph& g) const { return graph_stats(g, two_stars); }

  Graph sample(const ParamVec& theta, int n_sweeps, RngStream& rng) const {
    return sample_graph(theta, nodes, two_stars, n_sweeps, rng);
  }

  StatVec sample_stats(const ParamVec& theta, int n_sweeps, RngStream& rng) const {
    return stats(sample(theta, n_sweeps, rng));
  }
};

// Edge-list file: optional '#' comment lines, then a header "n <count>",
// then one "i j" pair per line, 1-indexed with i < j.
inline Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path.string());

  std::string line;
  auto next_content_line = [&]() -> bool {
    while (std::getline(in, line)) {
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return true;
    }
    return false;
  };

  if (!next_content_line()) throw std::runtime_error("load_edge_list: missing header");
  std::istringstream header(line);
  int n = 0;
  long count = 0;
  if (!(header >> n >> count) || n < 1 || count < 0)
    throw std::runtime_error("load_edge_list: malformed header \"" + line + "\"");

  Graph g(n);
  long seen = 0;
  while (next_content_line()) {
    std::istringstream row(line);
    int i = 0, j = 0;
    if (!(row >> i >> j)) throw std::runtime_error("load_edge_list: malformed line \"" + line + "\"");
    std::string extra;
    if (row >> extra) throw std::runtime_error("load_edge_list: trailing tokens on \"" + line + "\"");
    if (i == j) throw std::runtime_error("load_edge_list: self-loop at node " + std::to_string(i));
    if (i < 1 || j < 1 || i > n || j > n)
      throw std::runtime_error("load_edge_list: node index out of range on \"" + line + "\"");
    if (g.edge(i - 1, j - 1)) throw std::runtime_error("load_edge_list: duplicate edge \"" + line + "\"");
    g.set_edge(i - 1, j - 1, true);
    ++seen;
  }
  if (seen != count)
    throw std::runtime_error("load_edge_list: header promises " + std::to_string(count) +
                             " edges, file has " + std::to_string(seen));
  return g;
}

inline void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path.string());
  out << g.nodes() << ' ' << g.edges() << '\n';
  for (int i = 0; i < g.nodes(); ++i)
    for (int j = i + 1; j < g.nodes(); ++j)
      if (g.edge(i, j)) out << i + 1 << ' ' << j + 1 << '\n';
  if (!out) throw std::runtime_error("save_edge_list: write failed for " + path.string());
}

}  // namespace grf
