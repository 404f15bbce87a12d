// Explicit monotone finite-difference solver for the forward HJB equation
//   dV/dt + b . grad V + |grad V|^2 / 2 - |ydot - h|^2 / 2 = 0,  V(0) = psi,
// marched with Lax-Friedrichs (or Godunov upwind in 1D) fluxes. Boundary
// stencils are closed by a ghost value realizing the prescribed Neumann slope
//   sub mode:   dV/dn = -(b . n)
//   super mode: dV/dn = -2 (b . n)
// via a second-order mirror. The two modes correspond to the sub- and
// super-solution boundary conditions of the constrained estimation problem;
// the solver exposes both and never asserts which one characterizes the value.
#pragma once

#include "mortensen/cost.hpp"
#include "mortensen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mortensen {

struct HjbScheme {
  enum class Flux { LaxFriedrichs, Godunov1D };
  enum class BoundaryMode { Sub, Super };
  Flux flux = Flux::LaxFriedrichs;
  BoundaryMode boundary = BoundaryMode::Sub;
  double dt = 1e-3;
  double cfl = 0.95;  // enforced bound on dt * sum_a(alpha_a / dx_a)
};

namespace detail {

inline double hamiltonian(const Vec& b, const Vec& p, double potential) {
  return b.dot(p) + 0.5 * p.squaredNorm() - potential;
}

// Godunov flux for H(p) = b p + p^2/2 - pot, convex in p with vertex at -b.
inline double godunov_1d(double b, double pm, double pp, double potential) {
  const auto h = [&](double p) { return b * p + 0.5 * p * p - potential; };
  if (pm <= pp) {
    const double pstar = std::clamp(-b, pm, pp);
    return h(pstar);
  }
  return std::max(h(pm), h(pp));
}

// Prescribed wall slope along axis `a` at a boundary point with outward
// normal n: dV/dx_a = n_a * (-c b.n).
inline double wall_slope(const Vec& b, const Vec& n, int axis, double c) {
  return n[axis] * (-c * b.dot(n));
}

struct NeighborInfo {
  bool has_prev = false, has_next = false;
  int prev = 0, next = 0;
};

inline NeighborInfo neighbors(const StateGrid& g, int i, int axis) {
  NeighborInfo nb;
  const int i0 = i % g.counts[0];
  const int i1 = i / g.counts[0];
  if (axis == 0) {
    if (i0 > 0 && g.active_node(i - 1)) {
      nb.has_prev = true;
      nb.prev = i - 1;
    }
    if (i0 < g.counts[0] - 1 && g.active_node(i + 1)) {
      nb.has_next = true;
      nb.next = i + 1;
    }
  } else {
    const int stride = g.counts[0];
    if (i1 > 0 && g.active_node(i - stride)) {
      nb.has_prev = true;
      nb.prev = i - stride;
    }
    if (i1 < g.counts[1] - 1 && g.active_node(i + stride)) {
      nb.has_next = true;
      nb.next = i + stride;
    }
  }
  return nb;
}

// Outward normal used for the ghost closure at node x (which may sit on or
// near the discrete boundary of the active set).
inline Vec closure_normal(const Domain& d, const Vec& x) {
  if (d.kind() == DomainKind::Ball) {
    Vec dir = x - d.center();
    const double r = dir.norm();
    if (r < 1e-12) return Vec::Zero(x.size());
    return dir / r;
  }
  // Interval/box: use the nearest face(s).
  Vec n = Vec::Zero(x.size());
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < x.size(); ++a) {
    best = std::min({best, x[a] - d.bounding_lo()[a], d.bounding_hi()[a] - x[a]});
  }
  const double tol = best + 1e-12 * d.diameter();
  for (int a = 0; a < x.size(); ++a) {
    if (x[a] - d.bounding_lo()[a] <= tol) n[a] -= 1;
    if (d.bounding_hi()[a] - x[a] <= tol) n[a] += 1;
  }
  const double len = n.norm();
  return len > 0 ? Vec(n / len) : n;
}

}  // namespace detail

inline ValueField hjb_solve(const VectorFieldSpec& vf, const Domain& d, const StateGrid& grid,
                            const CostSpec& cost, const HjbScheme& scheme, double t_end) {
  if (!vf.sigma_identity || vf.n != vf.r)
    throw Error("hjb_solve: requires sigma == Id and n == r");
  if (scheme.dt <= 0) throw Error("hjb_solve: nonpositive dt");
  if (scheme.flux == HjbScheme::Flux::Godunov1D && grid.dim != 1)
    throw Error("hjb_solve: Godunov flux is 1D only");
  const int K = static_cast<int>(std::lround(t_end / scheme.dt));
  if (K < 1 || std::abs(t_end / scheme.dt - K) > 1e-9)
    throw Error("hjb_solve: dt must divide t_end");

  const double cbc = scheme.boundary == HjbScheme::BoundaryMode::Sub ? 1.0 : 2.0;

  ValueField field;
  field.grid = grid;
  field.tgrid = TimeGrid{0.0, scheme.dt, K};
  field.label = scheme.boundary == HjbScheme::BoundaryMode::Sub ? ValueField::Label::HjbSub
                                                                : ValueField::Label::HjbSuper;
  std::vector<double> row(grid.total_nodes(), ValueField::kSentinel);
  for (int i = 0; i < grid.total_nodes(); ++i)
    if (grid.active_node(i)) row[i] = cost.psi.eval(grid.node(i));
  field.rows.push_back(row);

  const int total = grid.total_nodes();
  std::vector<Vec> nodes(total);
  std::vector<Vec> drift_buf(total);
  for (int i = 0; i < total; ++i) nodes[i] = grid.node(i);

  for (int k = 0; k < K; ++k) {
    const double t = field.tgrid.time(k);
    const auto& cur = field.rows.back();
    std::vector<double> next(total, ValueField::kSentinel);

    for (int i = 0; i < total; ++i)
      if (grid.active_node(i)) drift_buf[i] = vf.drift(t, nodes[i]);

    // One-sided slopes per axis, with ghost closure at the active-set rim.
    // First pass: artificial-dissipation coefficients and CFL.
    std::array<double, 2> alpha{0.0, 0.0};
    const auto slopes = [&](int i, int axis, double& pm, double& pp) {
      const auto nb = detail::neighbors(grid, i, axis);
      const double dx = grid.dx[axis];
      const double vi = cur[i];
      if (nb.has_prev && nb.has_next) {
        pm = (vi - cur[nb.prev]) / dx;
        pp = (cur[nb.next] - vi) / dx;
        return;
      }
      const Vec n = detail::closure_normal(d, nodes[i]);
      const double g = detail::wall_slope(drift_buf[i], n, axis, cbc);
      if (!nb.has_prev && !nb.has_next) {
        pm = pp = g;
        return;
      }
      if (!nb.has_next) {
        pm = (vi - cur[nb.prev]) / dx;
        // Second-order mirror: ghost = V_prev + 2 dx g.
        pp = (cur[nb.prev] + 2 * dx * g - vi) / dx;
      } else {
        pp = (cur[nb.next] - vi) / dx;
        pm = (vi - (cur[nb.next] - 2 * dx * g)) / dx;
      }
    };

    for (int i = 0; i < total; ++i) {
      if (!grid.active_node(i)) continue;
      for (int a = 0; a < grid.dim; ++a) {
        double pm, pp;
        slopes(i, a, pm, pp);
        alpha[a] = std::max(alpha[a],
                            std::abs(drift_buf[i][a]) + std::max(std::abs(pm), std::abs(pp)));
      }
    }
    double cfl_sum = 0;
    for (int a = 0; a < grid.dim; ++a) cfl_sum += alpha[a] / grid.dx[a];
    if (scheme.dt * cfl_sum > scheme.cfl)
      throw Error("hjb_solve: CFL violation at step " + std::to_string(k) +
                  " (dt * sum(alpha/dx) = " + std::to_string(scheme.dt * cfl_sum) + ")");

    for (int i = 0; i < total; ++i) {
      if (!grid.active_node(i)) continue;
      const double pot = cost.misfit(vf, t, nodes[i]);
      double hnum = 0;
      if (scheme.flux == HjbScheme::Flux::Godunov1D) {
        double pm, pp;
        slopes(i, 0, pm, pp);
        hnum = detail::godunov_1d(drift_buf[i][0], pm, pp, pot);
      } else {
        Vec pbar(grid.dim);
        double dissipation = 0;
        for (int a = 0; a < grid.dim; ++a) {
          double pm, pp;
          slopes(i, a, pm, pp);
          pbar[a] = 0.5 * (pm + pp);
          dissipation += 0.5 * alpha[a] * (pp - pm);
        }
        hnum = detail::hamiltonian(drift_buf[i], pbar, pot) - dissipation;
      }
      const double v = cur[i] - scheme.dt * hnum;
      if (!std::isfinite(v))
        throw Error("hjb_solve: non-finite value at step " + std::to_string(k));
      next[i] = v;
    }
    field.rows.push_back(std::move(next));
  }
  return field;
}

struct HjbResidualReport {
  double interior_max_residual = 0;
  double boundary_sub_residual = 0;
  double boundary_super_residual = 0;
  int kink_nodes_excluded = 0;
};

// Evaluates the PDE residual by centered differences away from kinks, and the
// two candidate Neumann conditions by one-sided differences at the rim.
inline HjbResidualReport hjb_residual_report(const ValueField& field, const VectorFieldSpec& vf,
                                             const CostSpec& cost, double lip_psi) {
  const StateGrid& g = field.grid;
  const TimeGrid& tg = field.tgrid;
  HjbResidualReport rep;
  const int K = static_cast<int>(field.rows.size()) - 1;

  for (int k = 1; k < K; ++k) {
    const double t = tg.time(k);
    const auto& cur = field.rows[k];
    for (int i = 0; i < g.total_nodes(); ++i) {
      if (!g.active_node(i)) continue;
      const Vec x = g.node(i);
      const Vec b = vf.drift(t, x);
      bool interior = true;
      bool kink = false;
      Vec p(g.dim);
      for (int a = 0; a < g.dim; ++a) {
        const auto nb = detail::neighbors(g, i, a);
        if (!nb.has_prev || !nb.has_next) {
          interior = false;
          break;
        }
        const double pm = (cur[i] - cur[nb.prev]) / g.dx[a];
        const double pp = (cur[nb.next] - cur[i]) / g.dx[a];
        const double kink_tol = 10.0 * g.dx[a] * std::max(lip_psi, 1e-12);
        if (std::abs(pp - pm) > kink_tol) kink = true;
        p[a] = 0.5 * (pm + pp);
      }
      if (!interior) {
        // Rim node: check both Neumann candidates with one-sided slopes.
        const Vec n = detail::closure_normal(field.grid.domain, x);
        double dvdn = 0;
        bool have = false;
        for (int a = 0; a < g.dim; ++a) {
          if (std::abs(n[a]) < 1e-14) continue;
          const auto nb = detail::neighbors(g, i, a);
          double one_sided = 0;
          if (n[a] > 0 && nb.has_prev)
            one_sided = (cur[i] - cur[nb.prev]) / g.dx[a];
          else if (n[a] < 0 && nb.has_next)
            one_sided = (cur[nb.next] - cur[i]) / g.dx[a];
          else
            continue;
          dvdn += n[a] * one_sided;
          have = true;
        }
        if (have) {
          const double bn = b.dot(n);
          rep.boundary_sub_residual = std::max(rep.boundary_sub_residual, std::abs(bn + dvdn));
          rep.boundary_super_residual =
              std::max(rep.boundary_super_residual, std::abs(bn + 0.5 * dvdn));
        }
        continue;
      }
      if (kink) {
        ++rep.kink_nodes_excluded;
        continue;
      }
      const double dvdt = (field.rows[k + 1][i] - field.rows[k - 1][i]) / (2 * tg.dt);
      const double res = dvdt + detail::hamiltonian(b, p, cost.misfit(vf, t, x));
      rep.interior_max_residual = std::max(rep.interior_max_residual, std::abs(res));
    }
  }
  return rep;
}

}  // namespace mortensen
