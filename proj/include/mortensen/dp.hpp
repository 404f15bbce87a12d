// Forward dynamic-programming solver for the constrained cost-to-come and its
// Moreau-Yosida penalized counterpart. One DP step integrates the dynamics
// over [t_k, t_k + dt] with a piecewise-constant control from a finite
// lattice, locates the landing cell of the arrival point, and attributes a
// candidate to each corner node after correcting the control so the corner is
// reached exactly. The correction's control cost is charged: an uncorrected
// corner assignment would transport value at speed dx/dt for free and flatten
// the computed field.
#pragma once

#include "mortensen/cost.hpp"
#include "mortensen/grid.hpp"
#include "mortensen/integrators.hpp"
#include "mortensen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mortensen {

enum class DpMode { Constrained, Penalized };

struct DpOptions {
  double dt = 0.01;              // DP step; the observation spacing must divide it
  int controls_per_axis = 21;    // odd, lattice on [-omega_max, omega_max]^r
  double omega_max = 0;          // 0 = auto: 4 (diam(G)/horizon + max |b|)
  int substep_split = 1;         // extra substeps per observation interval
  int max_refine = 4;            // control-correction iterations per target
  double margin_budget = 3.0;    // value budget bounding penalized excursions
  // Masked replaces the projected step by a plain Euler step that must stay in
  // closure(G); used to check the inward-pointing-drift equivalence.
  enum class StepRule { Projected, Masked };
  StepRule step_rule = StepRule::Projected;
};

namespace detail {

struct ControlLattice {
  int r = 1;
  int per_axis = 1;
  double omega_max = 0;
  double spacing = 0;

  int count() const { return static_cast<int>(std::lround(std::pow(per_axis, r))); }

  Vec point(int idx) const {
    Vec w(r);
    for (int a = 0; a < r; ++a) {
      const int ia = idx % per_axis;
      idx /= per_axis;
      w[a] = per_axis == 1 ? 0.0 : -omega_max + ia * spacing;
    }
    return w;
  }
};

inline ControlLattice make_lattice(int r, int per_axis, double omega_max) {
  if (per_axis < 1 || per_axis % 2 == 0)
    throw Error("dp_solve: controls_per_axis must be odd and positive");
  ControlLattice l;
  l.r = r;
  l.per_axis = per_axis;
  l.omega_max = omega_max;
  l.spacing = per_axis > 1 ? 2 * omega_max / (per_axis - 1) : 0.0;
  return l;
}

struct DpContext {
  const VectorFieldSpec* vf = nullptr;
  const Domain* domain = nullptr;
  const CostSpec* cost = nullptr;
  DpMode mode = DpMode::Constrained;
  double kappa = 0;
  double dt_sub = 0;
  int max_refine = 4;
  DpOptions::StepRule step_rule = DpOptions::StepRule::Projected;

  // Flow over [t0, t0 + duration] with frozen control w, accumulating the
  // running cost at the left endpoint of every substep. Returns false for
  // masked steps that leave the closure.
  bool integrate(double t0, const Vec& x0, const Vec& w, double duration, Vec& y,
                 double& cost_out) const {
    const int nsub = std::max(1, static_cast<int>(std::lround(duration / dt_sub)));
    const double h = duration / nsub;
    const double tol = domain->tol_boundary();
    Vec x = x0;
    double c = 0;
    for (int s = 0; s < nsub; ++s) {
      const double ts = t0 + s * h;
      c += h * cost->running(*vf, ts, x, w);
      if (mode == DpMode::Penalized) {
        x = penalized_step(*vf, *domain, ts, x, w, h, kappa);
      } else if (step_rule == DpOptions::StepRule::Masked) {
        x += h * (vf->drift(ts, x) + vf->sigma(ts, x) * w);
        if (!domain->contains(x, tol)) return false;
      } else {
        x = reflected_step(*vf, *domain, ts, x, w, h);
      }
    }
    y = x;
    cost_out = c;
    return true;
  }
};

// One scatter pass of length `duration` from `src` into `dst` (element-wise
// min); both rows live on `grid`.
inline void dp_scatter_step(const DpContext& ctx, const StateGrid& grid,
                            const ControlLattice& lattice, double t0, double duration,
                            const std::vector<double>& src, std::vector<double>& dst) {
  const double min_dx = grid.min_dx();
  const double direct_tol = 1e-7 * min_dx;
  const double accept_tol = 0.05 * min_dx;
  const double omega_bound = lattice.omega_max + 0.5 * lattice.spacing;
  const int ncontrols = lattice.count();
  std::vector<int> attempted(grid.total_nodes(), -1);

  for (int i = 0; i < grid.total_nodes(); ++i) {
    if (!grid.active_node(i) || src[i] >= ValueField::kSentinel * 0.5) continue;
    const Vec xi = grid.node(i);
    const Mat sigma0 = ctx.vf->sigma(t0, xi);
    Eigen::PartialPivLU<Mat> sigma_lu(sigma0);
    const double base = src[i];

    for (int c = 0; c < ncontrols; ++c) {
      const Vec w = lattice.point(c);
      Vec y;
      double run_cost;
      if (!ctx.integrate(t0, xi, w, duration, y, run_cost)) continue;
      const auto cell = grid.locate(y);
      if (!cell.inside_hull) continue;
      // Attribute to every node of the 3^n-cell neighborhood of the landing
      // cell. Together with the lattice-stride precondition in dp_solve this
      // leaves no unreachable cells between consecutive lattice arrivals.
      const int w0 = grid.dim >= 1 ? 4 : 1;
      const int w1 = grid.dim == 2 ? 4 : 1;
      for (int o1 = 0; o1 < w1; ++o1) {
        const int i1 = grid.dim == 2 ? cell.base[1] - 1 + o1 : 0;
        if (grid.dim == 2 && (i1 < 0 || i1 >= grid.counts[1])) continue;
      for (int o0 = 0; o0 < w0; ++o0) {
        const int i0 = cell.base[0] - 1 + o0;
        if (i0 < 0 || i0 >= grid.counts[0]) continue;
        const int j = grid.flat_index(i0, i1);
        if (!grid.active_node(j)) continue;
        const Vec xj = grid.node(j);
        if ((y - xj).norm() <= direct_tol) {
          // Exact arrival (typically a projected step absorbed at the wall).
          if (base + run_cost < dst[j]) dst[j] = base + run_cost;
          continue;
        }
        // One successful refinement per (source, target) pair suffices: the
        // exact-hit control does not depend on the lattice seed. Failed
        // attempts (wall-pinned arrivals) must not block later seeds.
        if (attempted[j] == i) continue;

        // Aim the control at the node, iterating on the observed displacement.
        // The penalization damps the arrival's response to the control, so the
        // step length is rescaled by the measured response ratio (secant).
        Vec wt = w;
        Vec yc = y;
        double cc = run_cost;
        double gain = 1.0;
        bool in_bound = true;
        for (int it = 0; it < ctx.max_refine && (yc - xj).norm() > accept_tol; ++it) {
          const Vec wn = wt + Vec(sigma_lu.solve((xj - yc) / (duration * gain)));
          if (wn.lpNorm<Eigen::Infinity>() > omega_bound) {
            in_bound = false;
            break;
          }
          Vec yn;
          double cn;
          if (!ctx.integrate(t0, xi, wn, duration, yn, cn)) {
            in_bound = false;
            break;
          }
          const double asked = (xj - yc).norm();
          const double moved = (yn - yc).norm();
          if (asked > 1e-14 && moved > 1e-14)
            gain = std::clamp(gain * moved / asked, 0.02, 2.0);
          wt = wn;
          yc = yn;
          cc = cn;
        }
        if (!in_bound || (yc - xj).norm() > accept_tol) continue;
        attempted[j] = i;
        // Charge the residual displacement at the observed response rate.
        const Vec wf = wt + Vec(sigma_lu.solve((xj - yc) / (duration * gain)));
        if (wf.lpNorm<Eigen::Infinity>() > omega_bound) continue;
        const double cand =
            base + cc + duration * 0.5 * (wf.squaredNorm() - wt.squaredNorm());
        if (cand < dst[j]) dst[j] = cand;
      }
      }
    }
  }
}

inline double auto_omega_max(const VectorFieldSpec& vf, const Domain& d, double horizon,
                             double t0 = 0.0) {
  const double maxb = vf.max_drift_on_box(d.bounding_lo(), d.bounding_hi(), t0);
  return 4.0 * (d.diameter() / horizon + maxb);
}

inline double penalized_margin(const VectorFieldSpec& vf, const Domain& d, double kappa,
                               double omega_max, double budget) {
  const double maxb = vf.max_drift_on_box(d.bounding_lo(), d.bounding_hi(), 0.0);
  const double reach = 2.0 * (maxb + omega_max) / kappa;  // steady excursion bound
  const double energy = std::sqrt(budget / kappa);        // value-budget excursion bound
  return std::min({energy, reach, 0.6 * d.diameter()});
}

}  // namespace detail

// Brute-force forward DP over a finite control lattice. `grid` must be a
// vertex-centered margin-free grid; penalized runs extend it internally by an
// excursion margin and return the field on the extended grid (restrict with
// restrict_to_base_grid for comparisons on closure(G)).
inline ValueField dp_solve(const VectorFieldSpec& vf, const Domain& d, const StateGrid& grid,
                           const CostSpec& cost, DpMode mode, double kappa,
                           const DpOptions& options) {
  if (options.dt <= 0) throw Error("dp_solve: nonpositive dt");
  if (mode == DpMode::Penalized && kappa <= 0) throw Error("dp_solve: nonpositive kappa");
  const double obs_dt = cost.obs.grid.dt;
  const double per = options.dt / obs_dt;
  if (std::abs(per - std::lround(per)) > 1e-9 || per < 1 - 1e-9)
    throw Error("dp_solve: observation spacing must divide the DP step");
  const double horizon = cost.horizon();
  const double steps_raw = horizon / options.dt;
  const int K = static_cast<int>(std::lround(steps_raw));
  if (std::abs(steps_raw - K) > 1e-9 || K < 1)
    throw Error("dp_solve: DP step must divide the observation horizon");

  detail::DpContext ctx;
  ctx.vf = &vf;
  ctx.domain = &d;
  ctx.cost = &cost;
  ctx.mode = mode;
  ctx.kappa = kappa;
  ctx.max_refine = options.max_refine;
  ctx.step_rule = options.step_rule;
  int split = std::max(1, options.substep_split);
  if (mode == DpMode::Penalized || kappa > 0) {
    // dt_eff * kappa <= 0.5; constrained runs may pass kappa to match the
    // penalized discretization in sweep comparisons.
    split = std::max(split, static_cast<int>(std::ceil(obs_dt * kappa / 0.5)));
  }
  ctx.dt_sub = obs_dt / split;

  const double omega_max =
      options.omega_max > 0 ? options.omega_max : detail::auto_omega_max(vf, d, horizon);
  const auto lattice = detail::make_lattice(vf.r, options.controls_per_axis, omega_max);

  // Consecutive lattice arrivals must not skip past the splat stencil, or
  // single-cell moves become undiscoverable from some sources.
  {
    const Vec mid = 0.5 * (d.bounding_lo() + d.bounding_hi());
    const double gain = std::max(vf.sigma(0.0, mid).norm(), 1e-12);
    const double stride = options.dt * lattice.spacing * gain;
    if (lattice.per_axis > 1 && stride > 3.0 * grid.min_dx() * (1 + 1e-9))
      throw Error(
          "dp_solve: control lattice stride exceeds the splat stencil; increase "
          "controls_per_axis or reduce omega_max or dt");
  }

  ValueField field;
  field.tgrid = TimeGrid{0.0, options.dt, K};
  field.label = mode == DpMode::Penalized ? ValueField::Label::Penalized
                                          : ValueField::Label::Constrained;
  field.kappa = mode == DpMode::Penalized ? kappa : 0.0;
  if (mode == DpMode::Penalized) {
    const double margin =
        detail::penalized_margin(vf, d, kappa, omega_max, options.margin_budget);
    std::array<int, 2> base_counts{0, 0};
    for (int a = 0; a < grid.dim; ++a) base_counts[a] = grid.counts[a];
    if (grid.margin != 0) throw Error("dp_solve: pass the base grid; margins are internal");
    field.grid = make_state_grid(d, {base_counts[0], base_counts[1]}, margin);
  } else {
    field.grid = grid;
  }
  const StateGrid& g = field.grid;

  // Row 0: psi on closure(G); extended nodes are unreachable at time zero.
  const double tol = d.tol_boundary();
  std::vector<double> row(g.total_nodes(), ValueField::kSentinel);
  for (int i = 0; i < g.total_nodes(); ++i) {
    if (!g.active_node(i)) continue;
    const Vec x = g.node(i);
    if (d.contains(x, tol)) row[i] = cost.psi.eval(x);
  }
  field.rows.push_back(row);

  for (int k = 0; k < K; ++k) {
    std::vector<double> next(g.total_nodes(), ValueField::kSentinel);
    detail::dp_scatter_step(ctx, g, lattice, field.tgrid.time(k), options.dt,
                            field.rows.back(), next);
    // Every node of closure(G) must be reachable; an empty reachable set means
    // the control lattice cannot even hold the state in place.
    for (int i = 0; i < g.total_nodes(); ++i) {
      if (!g.active_node(i) || next[i] < ValueField::kSentinel * 0.5) continue;
      if (d.contains(g.node(i), tol))
        throw Error("dp_solve: empty reachable set at step " + std::to_string(k + 1) +
                    " for node " + std::to_string(i) + "; increase omega_max");
    }
    field.rows.push_back(std::move(next));
  }
  return field;
}

struct ObserverExtract {
  Vec argmin;                   // first minimiser in lexicographic node order
  double min_value = 0;
  std::vector<int> tied_nodes;  // all nodes within tie_tol of the minimum
};

inline ObserverExtract extract_observer(const ValueField& field, int k) {
  if (k < 0 || k >= static_cast<int>(field.rows.size()))
    throw Error("extract_observer: row index out of range");
  const auto& row = field.rows[k];
  const StateGrid& g = field.grid;
  double best = ValueField::kSentinel;
  for (int i = 0; i < g.total_nodes(); ++i)
    if (g.active_node(i)) best = std::min(best, row[i]);
  if (best >= ValueField::kSentinel * 0.5)
    throw Error("extract_observer: row is unreachable everywhere");
  const double tie_tol = 1e-9 * (1.0 + std::abs(best));
  ObserverExtract out;
  out.min_value = best;
  // Lexicographic order on (x1, x2): axis-0 major scan.
  const int n1 = g.dim == 2 ? g.counts[1] : 1;
  for (int i0 = 0; i0 < g.counts[0]; ++i0) {
    for (int i1 = 0; i1 < n1; ++i1) {
      const int i = g.flat_index(i0, i1);
      if (!g.active_node(i) || row[i] > best + tie_tol) continue;
      if (out.tied_nodes.empty()) out.argmin = g.node(i);
      out.tied_nodes.push_back(i);
    }
  }
  return out;
}

// Re-derives sampled entries of the table by a single composite DP step of
// length tau (one constant control held over the whole window) started from
// the stored row at t - tau, and reports the largest deviation. For tau equal
// to the DP step this reproduces the recursion exactly.
inline double bellman_residual(const VectorFieldSpec& vf, const Domain& d, const CostSpec& cost,
                               const ValueField& field, double tau, int samples, uint64_t seed,
                               const DpOptions& options) {
  const double ratio = tau / field.tgrid.dt;
  const int span = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - span) > 1e-9 || span < 1)
    throw Error("bellman_residual: tau must be a positive multiple of the DP step");
  const int K = static_cast<int>(field.rows.size()) - 1;
  if (span > K) throw Error("bellman_residual: tau exceeds the solved horizon");

  detail::DpContext ctx;
  ctx.vf = &vf;
  ctx.domain = &d;
  ctx.cost = &cost;
  ctx.mode = field.label == ValueField::Label::Penalized ? DpMode::Penalized
                                                         : DpMode::Constrained;
  ctx.kappa = field.kappa;
  ctx.max_refine = options.max_refine;
  ctx.step_rule = options.step_rule;
  int split = std::max(1, options.substep_split);
  if (ctx.kappa > 0)
    split = std::max(split, static_cast<int>(std::ceil(cost.obs.grid.dt * ctx.kappa / 0.5)));
  ctx.dt_sub = cost.obs.grid.dt / split;

  const double omega_max = options.omega_max > 0
                               ? options.omega_max
                               : detail::auto_omega_max(vf, d, cost.horizon());
  const auto lattice = detail::make_lattice(vf.r, options.controls_per_axis, omega_max);

  // Sample target rows, recompute each sampled row in one composite sweep.
  Rng rng(seed);
  std::vector<int> rows_to_check;
  const int max_rows = std::max(1, std::min(4, samples));
  for (int s = 0; s < max_rows; ++s)
    rows_to_check.push_back(span + static_cast<int>(rng.next_u64() % (K - span + 1)));
  std::sort(rows_to_check.begin(), rows_to_check.end());
  rows_to_check.erase(std::unique(rows_to_check.begin(), rows_to_check.end()),
                      rows_to_check.end());

  double residual = 0;
  const StateGrid& g = field.grid;
  for (int k : rows_to_check) {
    std::vector<double> recomputed(g.total_nodes(), ValueField::kSentinel);
    detail::dp_scatter_step(ctx, g, lattice, field.tgrid.time(k - span), tau,
                            field.rows[k - span], recomputed);
    // Compare at sampled nodes of the stored row.
    for (int s = 0; s < samples; ++s) {
      const int i = static_cast<int>(rng.next_u64() % g.total_nodes());
      if (!g.active_node(i)) continue;
      const double stored = field.rows[k][i];
      const double redo = recomputed[i];
      if (stored >= ValueField::kSentinel * 0.5 || redo >= ValueField::kSentinel * 0.5) continue;
      residual = std::max(residual, std::abs(redo - stored));
    }
  }
  return residual;
}

}  // namespace mortensen
