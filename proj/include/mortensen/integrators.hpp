// Time integrators for the constrained dynamics: projected Euler for the
// reflected differential inclusion, explicit Euler with kappa-stable
// sub-stepping for the Moreau-Yosida penalized dynamics, and projected
// Euler-Maruyama for the reflected SDE. Twin-experiment observation synthesis
// lives here as well.
#pragma once

#include "mortensen/domain.hpp"
#include "mortensen/paths.hpp"
#include "mortensen/rng.hpp"
#include "mortensen/vector_field.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mortensen {

// One projected Euler step: project(x + dt (b + sigma w)).
inline Vec reflected_step(const VectorFieldSpec& vf, const Domain& d, double t, const Vec& x,
                          const Vec& w, double dt) {
  return d.project(x + dt * (vf.drift(t, x) + vf.sigma(t, x) * w));
}

// Penalized dynamics over one interval of length dt, sub-stepped so that
// dt_eff * kappa <= 0.5.
inline Vec penalized_step(const VectorFieldSpec& vf, const Domain& d, double t, const Vec& x,
                          const Vec& w, double dt, double kappa) {
  const int nsub = std::max(1, static_cast<int>(std::ceil(dt * kappa / 0.5)));
  const double h = dt / nsub;
  Vec y = x;
  for (int s = 0; s < nsub; ++s) {
    const double ts = t + s * h;
    const Vec fk = kappa * (y - d.project(y));
    y += h * (vf.drift(ts, y) + vf.sigma(ts, y) * w - fk);
  }
  return y;
}

inline Trajectory integrate_reflected(const VectorFieldSpec& vf, const Domain& d, const Vec& x0,
                                      const DisturbancePath& w) {
  if (w.grid.dt <= 0) throw Error("integrate_reflected: nonpositive dt");
  if (!d.contains(x0, d.tol_boundary()))
    throw Error("integrate_reflected: x0 outside the closure of the domain");
  Trajectory traj;
  traj.grid = w.grid;
  traj.tag = Trajectory::Integrator::Reflected;
  traj.disturbance = w;
  traj.states.reserve(w.grid.nodes());
  Vec x = d.project(x0);
  traj.states.push_back(x);
  for (int k = 0; k < w.grid.steps; ++k) {
    x = reflected_step(vf, d, w.grid.time(k), x, w.samples[k], w.grid.dt);
    traj.states.push_back(x);
  }
  return traj;
}

inline Trajectory integrate_penalized(const VectorFieldSpec& vf, const Domain& d, const Vec& x0,
                                      const DisturbancePath& w, double kappa) {
  if (kappa <= 0) throw Error("integrate_penalized: nonpositive kappa");
  if (w.grid.dt <= 0) throw Error("integrate_penalized: nonpositive dt");
  Trajectory traj;
  traj.grid = w.grid;
  traj.tag = Trajectory::Integrator::Penalized;
  traj.kappa = kappa;
  traj.disturbance = w;
  traj.states.reserve(w.grid.nodes());
  Vec x = x0;
  traj.states.push_back(x);
  for (int k = 0; k < w.grid.steps; ++k) {
    x = penalized_step(vf, d, w.grid.time(k), x, w.samples[k], w.grid.dt, kappa);
    traj.states.push_back(x);
  }
  return traj;
}

// Projected Euler-Maruyama: x_{k+1} = project(x_k + dt b + sqrt(eps dt) sigma xi).
// epsilon == 0 degenerates exactly to integrate_reflected with w == 0.
inline Trajectory integrate_reflected_sde(const VectorFieldSpec& vf, const Domain& d,
                                          const Vec& x0, double epsilon, uint64_t seed,
                                          const TimeGrid& grid) {
  if (epsilon < 0) throw Error("integrate_reflected_sde: negative epsilon");
  if (grid.dt <= 0) throw Error("integrate_reflected_sde: nonpositive dt");
  if (!d.contains(x0, d.tol_boundary()))
    throw Error("integrate_reflected_sde: x0 outside the closure of the domain");
  Trajectory traj;
  traj.grid = grid;
  traj.tag = Trajectory::Integrator::Sde;
  traj.epsilon = epsilon;
  traj.seed = seed;
  traj.states.reserve(grid.nodes());
  Rng rng(seed);
  const double noise_scale = std::sqrt(epsilon * grid.dt);
  Vec x = d.project(x0);
  traj.states.push_back(x);
  for (int k = 0; k < grid.steps; ++k) {
    const double t = grid.time(k);
    Vec xi(vf.r);
    for (int i = 0; i < vf.r; ++i) xi[i] = rng.normal();
    x = d.project(x + grid.dt * vf.drift(t, x) + noise_scale * (vf.sigma(t, x) * xi));
    traj.states.push_back(x);
  }
  return traj;
}

// Superposes outward square bursts of width tau_j, amplitude
// scale/sqrt(tau_j) (unit L2 mass each), placed at wall-contact times of the
// reflected reference path. Bounded disturbances alone only produce O(1/kappa)
// penalization excursions; a burst of width 1/kappa pressing at the wall makes
// the dist ~ kappa^{-1/2} envelope tight at that scale. Assumes sigma == Id so
// the burst direction can be prescribed in state space.
inline DisturbancePath with_wall_bursts(const VectorFieldSpec& vf, const Domain& d,
                                        const Vec& x0, DisturbancePath w,
                                        std::vector<double> widths, double scale) {
  const auto ref = integrate_reflected(vf, d, x0, w);
  const auto& g = w.grid;
  std::vector<int> contacts;
  const double tol = 0.01 * d.diameter();
  for (int k = 0; k < g.steps; ++k)
    if (d.dist_to_boundary(ref.states[k]) <= tol) contacts.push_back(k);
  if (contacts.empty()) return w;
  std::sort(widths.rbegin(), widths.rend());
  for (size_t i = 0; i < widths.size(); ++i) {
    const int span = std::max(2, static_cast<int>(std::lround(widths[i] / g.dt)));
    const size_t pick = (i + 1) * contacts.size() / (widths.size() + 1);
    const int start =
        std::min(contacts[std::min(pick, contacts.size() - 1)], g.steps - span - 1);
    const Vec n = d.nearest_boundary_normal(ref.states[start]);
    const double amp = scale / std::sqrt(span * g.dt);
    for (int k = start; k < start + span; ++k) w.samples[k] += amp * n;
  }
  return w;
}

// ydot_k = h(t_k, x_k) + nu_k on the trajectory grid.
inline ObservationPath synthesize_observation(const Trajectory& traj, const VectorFieldSpec& vf,
                                              const DisturbancePath& noise) {
  if (!noise.samples.empty() && !traj.grid.same_as(noise.grid))
    throw Error("synthesize_observation: grid mismatch");
  ObservationPath obs;
  obs.grid = traj.grid;
  obs.ydot.reserve(traj.grid.steps);
  for (int k = 0; k < traj.grid.steps; ++k) {
    Vec y = vf.observe(traj.grid.time(k), traj.states[k]);
    if (!noise.samples.empty()) y += noise.samples[k];
    obs.ydot.push_back(y);
  }
  return obs;
}

}  // namespace mortensen
