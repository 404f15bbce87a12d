// 1D finite-volume solver for the pathwise (frozen-observation) reflected
// Zakai equation
//   dq/dt = d/dx( -q b + (eps/2) dq/dx ) - |ydot - h|^2 / (2 eps) q
// with zero total flux at both walls, its backward dual equation with
// homogeneous Neumann walls, the discrete duality gap between them, and the
// Laplace functional -eps log int exp(-Phi/eps) q dx.
//
// IMEX splitting per step: explicit upwind advection, exact per-cell
// exponential reaction, implicit diffusion (tridiagonal solve). All three
// sub-steps preserve nonnegativity; the density is never normalized.
#pragma once

#include "mortensen/cost.hpp"
#include "mortensen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace mortensen {

struct FilterDensity {
  StateGrid cells;  // cell-centered 1D grid
  TimeGrid tgrid;
  std::vector<std::vector<double>> rows;  // q[k][cell] >= 0
  double epsilon = 0;

  double mass(int k) const {
    double acc = 0;
    for (double v : rows[k]) acc += v;
    return acc * cells.dx[0];
  }
};

namespace detail {

// Thomas algorithm for (I - mu L) x = rhs with the zero-flux Laplacian,
// dx^2 L = tridiag(1, -2, 1) and mirrored walls.
inline void solve_diffusion(std::vector<double>& q, double mu_over_dx2) {
  const int m = static_cast<int>(q.size());
  const double mu = mu_over_dx2;
  std::vector<double> diag(m), upper(m - 1), lower(m - 1);
  for (int i = 0; i < m; ++i) {
    const bool wall_lo = i == 0, wall_hi = i == m - 1;
    diag[i] = 1 + mu * ((wall_lo ? 0 : 1) + (wall_hi ? 0 : 1));
  }
  for (int i = 0; i + 1 < m; ++i) {
    upper[i] = -mu;
    lower[i] = -mu;
  }
  for (int i = 1; i < m; ++i) {
    const double w = lower[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    q[i] -= w * q[i - 1];
  }
  q[m - 1] /= diag[m - 1];
  for (int i = m - 2; i >= 0; --i) q[i] = (q[i] - upper[i] * q[i + 1]) / diag[i];
}

struct ZakaiOps {
  const VectorFieldSpec* vf;
  const Domain* domain;
  const StateGrid* cells;
  double epsilon;
  double dt;

  // Conservative upwind advection of the divergence-form flux -(q b); wall
  // faces carry zero flux.
  void advect(double t, std::vector<double>& q) const {
    const int m = static_cast<int>(q.size());
    const double dx = cells->dx[0];
    std::vector<double> flux(m + 1, 0.0);  // flux[i] = (q b) at face x_{i-1/2}
    double cfl_max = 0;
    for (int f = 1; f < m; ++f) {
      const Vec xf = make_vec1(cells->lo[0] + (f - 0.5) * dx);
      const double bf = vf->drift(t, xf)[0];
      cfl_max = std::max(cfl_max, std::abs(bf));
      flux[f] = bf > 0 ? bf * q[f - 1] : bf * q[f];
    }
    if (dt * cfl_max / dx > 1.0)
      throw Error("zakai: advective CFL violation (dt |b| / dx = " +
                  std::to_string(dt * cfl_max / dx) + ")");
    for (int i = 0; i < m; ++i) q[i] -= dt / dx * (flux[i + 1] - flux[i]);
  }

  void react(double t, const ObservationPath& obs, std::vector<double>& q) const {
    const int m = static_cast<int>(q.size());
    for (int i = 0; i < m; ++i) {
      const Vec xi = cells->node(i);
      const double pot = 0.5 * (obs.at_time(t) - vf->observe(t, xi)).squaredNorm();
      q[i] *= std::exp(-dt * pot / epsilon);
    }
  }

  void diffuse(std::vector<double>& q) const {
    const double dx = cells->dx[0];
    solve_diffusion(q, dt * 0.5 * epsilon / (dx * dx));
  }

  // Non-conservative advection for the backward dual (b dPhi/dx), discretized
  // as the transpose of the primal upwind operator; Neumann walls mirror.
  void advect_dual(double t, std::vector<double>& p) const {
    const int m = static_cast<int>(p.size());
    const double dx = cells->dx[0];
    std::vector<double> out = p;
    for (int i = 0; i < m; ++i) {
      double acc = 0;
      if (i + 1 < m) {
        const Vec xf = make_vec1(cells->lo[0] + (i + 0.5) * dx);
        const double bf = vf->drift(t, xf)[0];
        // Face shared with cell i+1; primal moved q across it with speed bf.
        acc += bf > 0 ? bf * (p[i + 1] - p[i]) : 0.0;
      }
      if (i > 0) {
        const Vec xf = make_vec1(cells->lo[0] + (i - 0.5) * dx);
        const double bf = vf->drift(t, xf)[0];
        acc += bf < 0 ? bf * (p[i] - p[i - 1]) : 0.0;
      }
      out[i] = p[i] + dt / dx * acc;
    }
    p.swap(out);
  }
};

}  // namespace detail

// Forward filter. q0 holds strictly positive cell samples of the initial
// density; the canonical choice exp(-psi/eps) is provided below.
inline FilterDensity zakai_solve(const VectorFieldSpec& vf, const Domain& d,
                                 const ObservationPath& obs, const std::vector<double>& q0,
                                 double epsilon, double dt) {
  if (d.dim() != 1) throw Error("zakai_solve: 1D only");
  if (epsilon <= 0) throw Error("zakai_solve: nonpositive epsilon");
  if (!vf.sigma_identity) throw Error("zakai_solve: requires sigma == Id");
  FilterDensity fd;
  fd.cells = make_cell_grid(d, static_cast<int>(q0.size()));
  const double t_end = obs.grid.t_end();
  const int K = static_cast<int>(std::lround(t_end / dt));
  if (K < 1 || std::abs(t_end / dt - K) > 1e-9)
    throw Error("zakai_solve: dt must divide the observation horizon");
  fd.tgrid = TimeGrid{0.0, dt, K};
  fd.epsilon = epsilon;
  for (double v : q0)
    if (v <= 0) throw Error("zakai_solve: initial density must be positive");

  detail::ZakaiOps ops{&vf, &d, &fd.cells, epsilon, dt};
  std::vector<double> q = q0;
  fd.rows.push_back(q);
  for (int k = 0; k < K; ++k) {
    const double t = fd.tgrid.time(k);
    ops.advect(t, q);
    ops.react(t, obs, q);
    ops.diffuse(q);
    for (double v : q)
      if (v < 0) throw Error("zakai_solve: negative cell at step " + std::to_string(k + 1));
    fd.rows.push_back(q);
  }
  return fd;
}

inline std::vector<double> initial_density_from_psi(const InitialCost& psi,
                                                    const StateGrid& cells, double epsilon) {
  std::vector<double> q0(cells.total_nodes());
  for (int i = 0; i < cells.total_nodes(); ++i)
    q0[i] = std::exp(-psi.eval(cells.node(i)) / epsilon);
  return q0;
}

// Backward dual: dPhi/ds + b dPhi/dx + (eps/2) d2Phi/dx2 - pot/eps Phi = 0 on
// [0, t] with terminal data Phi(t, x) = exp(-probe(x)/eps) and Neumann walls.
// rows[k] stores Phi(t_k, .); the marching runs backward from k = K.
inline FilterDensity dual_solve(const VectorFieldSpec& vf, const Domain& d,
                                const ObservationPath& obs,
                                const std::function<double(const Vec&)>& probe, double epsilon,
                                double t, double dt, int cells) {
  if (d.dim() != 1) throw Error("dual_solve: 1D only");
  if (epsilon <= 0) throw Error("dual_solve: nonpositive epsilon");
  FilterDensity fd;
  fd.cells = make_cell_grid(d, cells);
  const int K = static_cast<int>(std::lround(t / dt));
  if (K < 1 || std::abs(t / dt - K) > 1e-9) throw Error("dual_solve: dt must divide t");
  fd.tgrid = TimeGrid{0.0, dt, K};
  fd.epsilon = epsilon;
  fd.rows.assign(K + 1, {});

  std::vector<double> p(cells);
  for (int i = 0; i < cells; ++i) p[i] = std::exp(-probe(fd.cells.node(i)) / epsilon);
  fd.rows[K] = p;

  detail::ZakaiOps ops{&vf, &d, &fd.cells, epsilon, dt};
  for (int k = K - 1; k >= 0; --k) {
    const double tk = fd.tgrid.time(k);
    ops.advect_dual(tk, p);
    ops.react(tk, obs, p);
    ops.diffuse(p);
    for (double v : p)
      if (v < 0) throw Error("dual_solve: negative cell at step " + std::to_string(k));
    fd.rows[k] = p;
  }
  return fd;
}

// |int Phi(0) q(t) - int Phi(t) q(0)| / (mean magnitude of the two sides).
inline double duality_gap(const FilterDensity& q, const FilterDensity& dual) {
  if (q.cells.total_nodes() != dual.cells.total_nodes())
    throw Error("duality_gap: cell grids differ");
  if (q.rows.size() != dual.rows.size()) throw Error("duality_gap: time grids differ");
  const int K = static_cast<int>(q.rows.size()) - 1;
  const double dx = q.cells.dx[0];
  double side1 = 0, side2 = 0;
  for (int i = 0; i < q.cells.total_nodes(); ++i) {
    side1 += dual.rows[0][i] * q.rows[K][i];
    side2 += dual.rows[K][i] * q.rows[0][i];
  }
  side1 *= dx;
  side2 *= dx;
  const double scale = 0.5 * (std::abs(side1) + std::abs(side2));
  return std::abs(side1 - side2) / std::max(scale, 1e-300);
}

// -eps log int exp(-Phi/eps) q(t_k) dx, evaluated in min-shifted form for
// stability: min_i W_i - eps log sum exp(-(W_i - min)/eps) dx with
// W_i = Phi(x_i) - eps log q_i.
inline double laplace_functional(const FilterDensity& fd,
                                 const std::function<double(const Vec&)>& probe, int k) {
  const auto& row = fd.rows[k];
  const double eps = fd.epsilon;
  const double dx = fd.cells.dx[0];
  double wmin = std::numeric_limits<double>::infinity();
  std::vector<double> w(row.size(), std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < row.size(); ++i) {
    if (row[i] <= 0) continue;
    w[i] = probe(fd.cells.node(static_cast<int>(i))) - eps * std::log(row[i]);
    wmin = std::min(wmin, w[i]);
  }
  if (!std::isfinite(wmin)) throw Error("laplace_functional: density row vanishes");
  double acc = 0;
  for (double wi : w)
    if (std::isfinite(wi)) acc += std::exp(-(wi - wmin) / eps);
  return wmin - eps * std::log(acc * dx);
}

// Discrete normal slope of -eps log q at the right/left wall (one-sided),
// used by the boundary-condition contrast check.
inline double log_density_wall_slope(const FilterDensity& fd, int k, bool right_wall) {
  const auto& row = fd.rows[k];
  const int m = static_cast<int>(row.size());
  const double dx = fd.cells.dx[0];
  const double eps = fd.epsilon;
  if (m < 2) throw Error("log_density_wall_slope: need >= 2 cells");
  const double v_in = -eps * std::log(std::max(row[right_wall ? m - 2 : 1], 1e-300));
  const double v_wall = -eps * std::log(std::max(row[right_wall ? m - 1 : 0], 1e-300));
  // d/dn with outward normal: +d/dx at the right wall, -d/dx at the left.
  return right_wall ? (v_wall - v_in) / dx : (v_wall - v_in) / dx;
}

}  // namespace mortensen
