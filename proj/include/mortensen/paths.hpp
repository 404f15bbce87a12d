// Time-sampled paths: disturbances (piecewise constant per step), state
// trajectories and observation derivatives, plus their CSV serialization
// (header `t,x1..xn[,w1..wr|,ydot1..ydotm]`, one row per grid node, %.17g).
#pragma once

#include "mortensen/core.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mortensen {

struct TimeGrid {
  double t0 = 0;
  double dt = 0;
  int steps = 0;

  double time(int k) const { return t0 + k * dt; }
  double t_end() const { return t0 + steps * dt; }
  int nodes() const { return steps + 1; }

  // Index of the step interval containing s (clamped at the ends).
  int interval_index(double s) const {
    int k = static_cast<int>(std::floor((s - t0) / dt + 1e-12));
    if (k < 0) k = 0;
    if (k >= steps) k = steps - 1;
    return k;
  }

  bool same_as(const TimeGrid& o, double tol = 1e-12) const {
    return steps == o.steps && std::abs(t0 - o.t0) <= tol && std::abs(dt - o.dt) <= tol;
  }
};

inline TimeGrid make_time_grid(double t0, double t1, double dt) {
  if (dt <= 0 || t1 <= t0) throw Error("make_time_grid: need dt > 0 and t1 > t0");
  const double raw = (t1 - t0) / dt;
  const int steps = static_cast<int>(std::lround(raw));
  if (steps < 1 || std::abs(raw - steps) > 1e-9 * std::max(1.0, raw))
    throw Error("make_time_grid: dt does not divide the horizon");
  return TimeGrid{t0, dt, steps};
}

// Piecewise-constant disturbance: samples[k] acts on [t_k, t_{k+1}).
struct DisturbancePath {
  TimeGrid grid;
  std::vector<Vec> samples;

  const Vec& at_time(double s) const { return samples[grid.interval_index(s)]; }

  // dt * sum |w_k|^2, exact for step functions.
  double l2_norm_sq() const {
    double acc = 0;
    for (const auto& w : samples) acc += w.squaredNorm();
    return grid.dt * acc;
  }

  static DisturbancePath zero(const TimeGrid& g, int r) {
    DisturbancePath w{g, {}};
    w.samples.assign(g.steps, Vec::Zero(r));
    return w;
  }

  static DisturbancePath constant(const TimeGrid& g, const Vec& w0) {
    DisturbancePath w{g, {}};
    w.samples.assign(g.steps, w0);
    return w;
  }
};

// Observation derivative samples, same piecewise-constant convention.
struct ObservationPath {
  TimeGrid grid;
  std::vector<Vec> ydot;

  const Vec& at_time(double s) const { return ydot[grid.interval_index(s)]; }

  static ObservationPath constant(const TimeGrid& g, const Vec& v) {
    ObservationPath o{g, {}};
    o.ydot.assign(g.steps, v);
    return o;
  }
};

struct Trajectory {
  enum class Integrator { Reflected, Penalized, Sde };

  TimeGrid grid;
  std::vector<Vec> states;  // size steps + 1
  Integrator tag = Integrator::Reflected;
  double kappa = 0;    // Penalized
  double epsilon = 0;  // Sde
  uint64_t seed = 0;   // Sde
  DisturbancePath disturbance;  // empty samples for Sde runs

  const Vec& state(int k) const { return states[k]; }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
};

// ---------------------------------------------------------------------------
// CSV serialization

namespace detail {

inline void write_csv_header(std::ostream& os, int n, const char* extra, int extra_dim) {
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= extra_dim; ++i) os << "," << extra << i;
  os << "\n";
}

inline std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

}  // namespace detail

// One row per grid node. When the generating disturbance is attached, the last
// row repeats the final sample (disturbances have one sample per step).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                                 bool include_disturbance = false) {
  const int n = traj.dim();
  const int r = include_disturbance && !traj.disturbance.samples.empty()
                    ? static_cast<int>(traj.disturbance.samples.front().size())
                    : 0;
  detail::write_csv_header(os, n, "w", r);
  for (int k = 0; k < traj.grid.nodes(); ++k) {
    os << format_g17(traj.grid.time(k));
    for (int i = 0; i < n; ++i) os << "," << format_g17(traj.states[k][i]);
    if (r > 0) {
      const Vec& w = traj.disturbance.samples[std::min(k, traj.grid.steps - 1)];
      for (int i = 0; i < r; ++i) os << "," << format_g17(w[i]);
    }
    os << "\n";
  }
}

inline void write_observation_csv(std::ostream& os, const ObservationPath& obs) {
  const int m = obs.ydot.empty() ? 0 : static_cast<int>(obs.ydot.front().size());
  os << "t";
  for (int i = 1; i <= m; ++i) os << ",ydot" << i;
  os << "\n";
  for (int k = 0; k < obs.grid.steps; ++k) {
    os << format_g17(obs.grid.time(k));
    for (int i = 0; i < m; ++i) os << "," << format_g17(obs.ydot[k][i]);
    os << "\n";
  }
}

inline ObservationPath read_observation_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("read_observation_csv: empty stream");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(detail::parse_csv_row(line));
  }
  if (rows.size() < 2) throw Error("read_observation_csv: need >= 2 samples");
  const int m = static_cast<int>(rows.front().size()) - 1;
  ObservationPath obs;
  obs.grid.t0 = rows.front()[0];
  obs.grid.dt = rows[1][0] - rows[0][0];
  obs.grid.steps = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    Vec v(m);
    for (int i = 0; i < m; ++i) v[i] = row[i + 1];
    obs.ydot.push_back(v);
  }
  return obs;
}

inline Trajectory read_trajectory_csv(std::istream& is, int n) {
  std::string line;
  if (!std::getline(is, line)) throw Error("read_trajectory_csv: empty stream");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(detail::parse_csv_row(line));
  }
  if (rows.size() < 2) throw Error("read_trajectory_csv: need >= 2 nodes");
  Trajectory traj;
  traj.grid.t0 = rows.front()[0];
  traj.grid.dt = rows[1][0] - rows[0][0];
  traj.grid.steps = static_cast<int>(rows.size()) - 1;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) < n + 1) throw Error("read_trajectory_csv: short row");
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = row[i + 1];
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace mortensen
