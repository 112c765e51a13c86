#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grf/core.hpp"
#include "grf/rng.hpp"

namespace grf {

// First order: the 4 horizontally/vertically adjacent neighbours.
// Second order adds the 4 diagonally adjacent neighbours as a second
// statistic. Free boundaries: edge sites simply have fewer neighbours.
enum class Neighborhood { first, second };

inline std::size_t stat_dim(Neighborhood order) {
  return order == Neighborhood::first ? 1 : 2;
}

// Spin lattice with values in {-1,+1}. Sites are indexed top to bottom
// within each column, columns left to right. Storage keeps a one-cell
// zero border so neighbour sums need no boundary branches.
class Lattice {
 public:
  Lattice(int rows, int cols, int fill = 1) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("Lattice: dimensions must be positive");
    if (fill != 1 && fill != -1) throw std::invalid_argument("Lattice: fill must be -1 or +1");
    cells_.assign(static_cast<std::size_t>(rows_ + 2) * (cols_ + 2), 0);
    for (int c = 0; c < cols_; ++c)
      for (int r = 0; r < rows_; ++r) cells_[phys(r, c)] = static_cast<std::int8_t>(fill);
  }

  static Lattice uniform_random(int rows, int cols, RngStream& rng) {
    Lattice y(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r)
        y.cells_[y.phys(r, c)] = (rng.next_u64() & 1) ? std::int8_t{1} : std::int8_t{-1};
    return y;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int sites() const { return rows_ * cols_; }

  int spin(int r, int c) const { return cells_[phys(r, c)]; }

  void set_spin(int r, int c, int v) {
    if (v != 1 && v != -1) throw std::invalid_argument("Lattice: spin must be -1 or +1");
    cells_[phys(r, c)] = static_cast<std::int8_t>(v);
  }

  bool operator==(const Lattice&) const = default;

  // Padded internals, used by the sweep kernel.
  std::size_t phys(int r, int c) const {
    return static_cast<std::size_t>(c + 1) * (rows_ + 2) + (r + 1);
  }
  std::int8_t* data() { return cells_.data(); }
  const std::int8_t* data() const { return cells_.data(); }
  int stride() const { return rows_ + 2; }

 private:
  int rows_;
  int cols_;
  std::vector<std::int8_t> cells_;
};

// s1 = sum over unordered first-order adjacent pairs of y_i*y_j; second
// order adds s2 over unordered diagonal pairs. Each pair counts once.
inline StatVec suff_stats(const Lattice& y, Neighborhood order) {
  const int stride = y.stride();
  const std::int8_t* d = y.data();
  long s1 = 0;
  for (int c = 0; c < y.cols(); ++c)
    for (int r = 0; r < y.rows(); ++r) {
      const std::size_t i = y.phys(r, c);
      s1 += d[i] * (d[i + 1] + d[i + stride]);  // below + right; border cells are zero
    }
  if (order == Neighborhood::first) return {static_cast<double>(s1)};
  long s2 = 0;
  for (int c = 0; c < y.cols(); ++c)
    for (int r = 0; r < y.rows(); ++r) {
      const std::size_t i = y.phys(r, c);
      s2 += d[i] * (d[i + stride + 1] + d[i + stride - 1]);  // down-right + up-right
    }
  return {static_cast<double>(s1), static_cast<double>(s2)};
}

namespace detail {

// P(spin=+1 | neighbours) indexed by (n1+4) and, second order, (n2+4),
// where n1/n2 are the first-order/diagonal neighbour spin sums.
struct FlipTables {
  std::array<double, 81> p_plus;
  bool second = false;

  FlipTables(const ParamVec& theta, Neighborhood order) {
    if (theta.size() != stat_dim(order))
      throw std::invalid_argument("ising: theta dimension does not match neighbourhood order");
    second = order == Neighborhood::second;
    const double t1 = theta[0];
    const double t2 = second ? theta[1] : 0.0;
    for (int n1 = -4; n1 <= 4; ++n1)
      for (int n2 = -4; n2 <= 4; ++n2) {
        const double h = 2.0 * (t1 * n1 + t2 * n2);
        p_plus[static_cast<std::size_t>((n1 + 4) * 9 + (n2 + 4))] = 1.0 / (1.0 + std::exp(-h));
      }
  }
};

inline void gibbs_sweep_impl(Lattice& y, const FlipTables& tab, RngStream& rng) {
  const int stride = y.stride();
  std::int8_t* d = y.data();
  for (int c = 0; c < y.cols(); ++c)
    for (int r = 0; r < y.rows(); ++r) {
      const std::size_t i = y.phys(r, c);
      const int n1 = d[i - 1] + d[i + 1] + d[i - stride] + d[i + stride];
      int n2 = 0;
      if (tab.second)
        n2 = d[i - stride - 1] + d[i - stride + 1] + d[i + stride - 1] + d[i + stride + 1];
      const double p = tab.p_plus[static_cast<std::size_t>((n1 + 4) * 9 + (n2 + 4))];
      d[i] = rng.uniform() < p ? std::int8_t{1} : std::int8_t{-1};
    }
}

}  // namespace detail

// One full pass of single-site full-conditional updates in site order;
// leaves f(.|theta) invariant.
inline void gibbs_sweep(Lattice& y, const ParamVec& theta, Neighborhood order, RngStream& rng) {
  const detail::FlipTables tab(theta, order);
  detail::gibbs_sweep_impl(y, tab, rng);
}

// Approximate draw from f(.|theta): uniform random start, n_sweeps passes.
inline Lattice sample_lattice(const ParamVec& theta, int rows, int cols, Neighborhood order,
                              int n_sweeps, RngStream& rng) {
  if (n_sweeps < 1) throw std::invalid_argument("sample_lattice: n_sweeps must be >= 1");
  const detail::FlipTables tab(theta, order);
  Lattice y = Lattice::uniform_random(rows, cols, rng);
  for (int k = 0; k < n_sweeps; ++k) detail::gibbs_sweep_impl(y, tab, rng);
  return y;
}

struct IsingModel {
  int rows;
  int cols;
  Neighborhood order;

  std::size_t dim() const { return stat_dim(order); }
  int sites() const { return rows * cols; }
  double log_z0() const { return sites() * 0.69314718055994530941723212145818; }

  StatVec stats(const Lattice& y) const { return suff_stats(y, order); }

  Lattice sample(const ParamVec& theta, int n_sweeps, RngStream& rng) const {
    return sample_lattice(theta, rows, cols, order, n_sweeps, rng);
  }

  StatVec sample_stats(const ParamVec& theta, int n_sweeps, RngStream& rng) const {
    return stats(sample(theta, n_sweeps, rng));
  }
};

// Plain-text lattice file: first line "m m'", then m lines of m'
// space-separated entries in {-1, 1}.
inline void save_lattice(const Lattice& y, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_lattice: cannot open " + path.string());
  out << y.rows() << ' ' << y.cols() << '\n';
  for (int r = 0; r < y.rows(); ++r) {
    for (int c = 0; c < y.cols(); ++c) {
      if (c) out << ' ';
      out << y.spin(r, c);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_lattice: write failed for " + path.string());
}

inline Lattice load_lattice(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_lattice: cannot open " + path.string());
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw std::runtime_error("load_lattice: bad header in " + path.string());
  Lattice y(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int v = 0;
      if (!(in >> v)) throw std::runtime_error("load_lattice: truncated file " + path.string());
      if (v != 1 && v != -1)
        throw std::runtime_error("load_lattice: spin not in {-1,1} in " + path.string());
      y.set_spin(r, c, v);
    }
  return y;
}

}  // namespace grf
