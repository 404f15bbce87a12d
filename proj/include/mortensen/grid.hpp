// Uniform state grids over the domain (vertex-centered with boundary nodes
// for the DP/HJB solvers, cell-centered for the finite-volume filter) and the
// space-time ValueField they carry. Nodes outside the admissible region (for
// a ball domain, or beyond the penalization margin) are masked.
#pragma once

#include "mortensen/domain.hpp"
#include "mortensen/paths.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iostream>
#include <vector>

namespace mortensen {

struct StateGrid {
  Domain domain;
  int dim = 1;
  std::array<int, 2> counts{1, 1};     // nodes per axis (counts[1] == 1 in 1D)
  std::array<double, 2> lo{0, 0};
  std::array<double, 2> dx{0, 0};
  double margin = 0;                   // admissible distance outside closure(G)
  bool cell_centered = false;
  std::vector<uint8_t> active;         // mask, flat index i1 * counts[0] + i0

  int total_nodes() const { return counts[0] * counts[1]; }

  Vec node(int flat) const {
    Vec x(dim);
    x[0] = lo[0] + (flat % counts[0]) * dx[0];
    if (dim == 2) x[1] = lo[1] + (flat / counts[0]) * dx[1];
    return x;
  }

  bool active_node(int flat) const { return active[flat] != 0; }

  int flat_index(int i0, int i1 = 0) const { return i1 * counts[0] + i0; }

  double min_dx() const { return dim == 2 ? std::min(dx[0], dx[1]) : dx[0]; }

  // Containing cell of y, clamped to the grid hull. frac holds the offsets in
  // cell units, also clamped to [0, 1]; `inside_hull` records whether y was
  // within half a cell of the hull before clamping.
  struct CellLoc {
    std::array<int, 2> base{0, 0};
    std::array<double, 2> frac{0, 0};
    bool inside_hull = true;
  };

  CellLoc locate(const Vec& y) const {
    CellLoc c;
    for (int a = 0; a < dim; ++a) {
      const double u = (y[a] - lo[a]) / dx[a];
      int b = static_cast<int>(std::floor(u));
      double f = u - b;
      if (b < 0) {
        c.inside_hull = c.inside_hull && u > -0.5;
        b = 0;
        f = 0;
      } else if (b >= counts[a] - 1) {
        c.inside_hull = c.inside_hull && u < counts[a] - 1 + 0.5;
        b = counts[a] - 2;
        f = 1;
        if (counts[a] == 1) { b = 0; f = 0; }
      }
      c.base[a] = b;
      c.frac[a] = f;
    }
    return c;
  }

  // Flat indices of the (up to 2^dim) corners of a cell.
  int corner_count() const { return dim == 2 ? 4 : 2; }

  int corner(const CellLoc& c, int which) const {
    const int i0 = c.base[0] + (which & 1);
    const int i1 = dim == 2 ? c.base[1] + ((which >> 1) & 1) : 0;
    return flat_index(i0, i1);
  }
};

// Vertex-centered grid including boundary nodes; nodes with
// dist(x, G) <= margin + snap tolerance are active.
inline StateGrid make_state_grid(const Domain& d, std::array<int, 2> counts, double margin = 0) {
  StateGrid g;
  g.domain = d;
  g.dim = d.dim();
  if (g.dim > 2) throw Error("make_state_grid: grid solvers support n <= 2");
  g.counts = counts;
  if (g.dim == 1) g.counts[1] = 1;
  g.margin = margin;
  for (int a = 0; a < g.dim; ++a) {
    if (g.counts[a] < 2) throw Error("make_state_grid: need >= 2 nodes per axis");
    const double extent = d.bounding_hi()[a] - d.bounding_lo()[a];
    // Keep the domain's own spacing; extend symmetrically by whole cells.
    const double base_dx = extent / (g.counts[a] - 1);
    const int extra = margin > 0 ? static_cast<int>(std::ceil(margin / base_dx)) : 0;
    g.lo[a] = d.bounding_lo()[a] - extra * base_dx;
    g.dx[a] = base_dx;
    g.counts[a] += 2 * extra;
  }
  g.active.assign(g.total_nodes(), 0);
  const double snap = 1e-9 * d.diameter() + 1e-300;
  for (int i = 0; i < g.total_nodes(); ++i)
    g.active[i] = d.dist_to_set(g.node(i)) <= margin + snap ? 1 : 0;
  return g;
}

// Cell-centered 1D grid (finite-volume filter).
inline StateGrid make_cell_grid(const Domain& d, int cells) {
  if (d.dim() != 1) throw Error("make_cell_grid: 1D only");
  if (cells < 2) throw Error("make_cell_grid: need >= 2 cells");
  StateGrid g;
  g.domain = d;
  g.dim = 1;
  g.cell_centered = true;
  g.counts = {cells, 1};
  g.dx[0] = (d.bounding_hi()[0] - d.bounding_lo()[0]) / cells;
  g.lo[0] = d.bounding_lo()[0] + 0.5 * g.dx[0];
  g.active.assign(cells, 1);
  return g;
}

// Space-time table of values V[k][node].
struct ValueField {
  enum class Label { Constrained, Penalized, HjbSub, HjbSuper, ZakaiLog };
  static constexpr double kSentinel = 1e30;

  StateGrid grid;
  TimeGrid tgrid;
  std::vector<std::vector<double>> rows;  // [time node][grid node]
  Label label = Label::Constrained;
  double kappa = 0;
  double epsilon = 0;

  double value(int k, int node) const { return rows[k][node]; }

  // Multilinear interpolation over active nodes; sentinel values poison the result.
  double interpolate(int k, const Vec& x) const {
    const auto c = grid.locate(x);
    if (grid.dim == 1) {
      const double v0 = rows[k][grid.corner(c, 0)];
      const double v1 = rows[k][grid.corner(c, 1)];
      return v0 + c.frac[0] * (v1 - v0);
    }
    const double v00 = rows[k][grid.corner(c, 0)];
    const double v10 = rows[k][grid.corner(c, 1)];
    const double v01 = rows[k][grid.corner(c, 2)];
    const double v11 = rows[k][grid.corner(c, 3)];
    const double fx = c.frac[0], fy = c.frac[1];
    return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11;
  }
};

// CSV: `t,x1..xn,V`, one row per (time node, active grid node).
inline void write_value_field_csv(std::ostream& os, const ValueField& f) {
  os << "t";
  for (int i = 1; i <= f.grid.dim; ++i) os << ",x" << i;
  os << ",V\n";
  for (int k = 0; k < static_cast<int>(f.rows.size()); ++k) {
    for (int i = 0; i < f.grid.total_nodes(); ++i) {
      if (!f.grid.active_node(i)) continue;
      const Vec x = f.grid.node(i);
      os << format_g17(f.tgrid.time(k));
      for (int a = 0; a < f.grid.dim; ++a) os << "," << format_g17(x[a]);
      os << "," << format_g17(f.rows[k][i]) << "\n";
    }
  }
}

// Compact binary block: magic "VFLD", version byte, then little-endian u32
// row/node counts followed by row-major doubles (all nodes, masked included).
inline void write_value_field_vfld(std::ostream& os, const ValueField& f) {
  os.write("VFLD", 4);
  const unsigned char version = 1;
  os.write(reinterpret_cast<const char*>(&version), 1);
  const uint32_t nrows = static_cast<uint32_t>(f.rows.size());
  const uint32_t nnodes = static_cast<uint32_t>(f.grid.total_nodes());
  os.write(reinterpret_cast<const char*>(&nrows), 4);
  os.write(reinterpret_cast<const char*>(&nnodes), 4);
  for (const auto& row : f.rows)
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(double)));
}

inline std::vector<std::vector<double>> read_value_field_vfld(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VFLD", 4) != 0) throw Error("read_value_field_vfld: bad magic");
  unsigned char version = 0;
  is.read(reinterpret_cast<char*>(&version), 1);
  if (version != 1) throw Error("read_value_field_vfld: unsupported version");
  uint32_t nrows = 0, nnodes = 0;
  is.read(reinterpret_cast<char*>(&nrows), 4);
  is.read(reinterpret_cast<char*>(&nnodes), 4);
  std::vector<std::vector<double>> rows(nrows, std::vector<double>(nnodes));
  for (auto& row : rows)
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(nnodes * sizeof(double)));
  if (!is) throw Error("read_value_field_vfld: truncated block");
  return rows;
}

// Restriction of a margin-extended field onto the base (margin 0) grid of the
// same domain and spacing. Node alignment is exact by construction.
inline ValueField restrict_to_base_grid(const ValueField& f, const StateGrid& base) {
  ValueField out;
  out.grid = base;
  out.tgrid = f.tgrid;
  out.label = f.label;
  out.kappa = f.kappa;
  out.epsilon = f.epsilon;
  std::array<int, 2> offset{0, 0};
  for (int a = 0; a < base.dim; ++a) {
    const double shift = (base.lo[a] - f.grid.lo[a]) / f.grid.dx[a];
    offset[a] = static_cast<int>(std::lround(shift));
    if (std::abs(shift - offset[a]) > 1e-6 || offset[a] < 0)
      throw Error("restrict_to_base_grid: grids are not aligned");
  }
  out.rows.assign(f.rows.size(), std::vector<double>(base.total_nodes(), ValueField::kSentinel));
  for (size_t k = 0; k < f.rows.size(); ++k) {
    for (int i1 = 0; i1 < (base.dim == 2 ? base.counts[1] : 1); ++i1) {
      for (int i0 = 0; i0 < base.counts[0]; ++i0) {
        const int src = f.grid.flat_index(i0 + offset[0], base.dim == 2 ? i1 + offset[1] : 0);
        out.rows[k][base.flat_index(i0, i1)] = f.rows[k][src];
      }
    }
  }
  return out;
}

}  // namespace mortensen
