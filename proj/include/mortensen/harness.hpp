// Scenario runner: wires the solvers into the experiment kinds (twin,
// kappa-sweep, kalman-xcheck, hjb-vs-dp, laplace-sweep, holder-check,
// bellman-check), writes every artifact as CSV under the output directory,
// evaluates declared tolerances and emits the report, plot data and the
// SHA-256 manifest.
#pragma once

#include "mortensen/config.hpp"
#include "mortensen/dp.hpp"
#include "mortensen/hjb.hpp"
#include "mortensen/kalman.hpp"
#include "mortensen/report.hpp"
#include "mortensen/zakai.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>

namespace mortensen {

namespace fs = std::filesystem;

class ScenarioRunner {
 public:
  ScenarioRunner(const ExperimentConfig& config, fs::path out_dir, uint64_t seed)
      : cfg_(config), out_(std::move(out_dir)), seed_(seed) {
    fs::create_directories(out_);
    scenario_ = cfg_.realize_observation(seed_);
    report_.kind = cfg_.kind;
    report_.name = cfg_.name;
    report_.seed = seed_;
  }

  RunReport run() {
    const auto start = std::chrono::steady_clock::now();
    if (cfg_.kind == "twin") {
      run_twin();
    } else if (cfg_.kind == "kappa-sweep") {
      run_kappa_sweep();
    } else if (cfg_.kind == "kalman-xcheck") {
      run_kalman_xcheck();
    } else if (cfg_.kind == "hjb-vs-dp") {
      run_hjb_vs_dp();
    } else if (cfg_.kind == "laplace-sweep") {
      run_laplace_sweep();
    } else if (cfg_.kind == "holder-check") {
      run_holder_check();
    } else if (cfg_.kind == "bellman-check") {
      run_bellman_check();
    } else {
      throw Error("run_scenario: unhandled kind " + cfg_.kind);
    }
    report_.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    finalize();
    return report_;
  }

  // Pieces reused by the CLI verbs.
  void emit_scenario() {
    if (scenario_.truth) {
      std::ofstream out(out_ / "truth.csv");
      write_trajectory_csv(out, *scenario_.truth, true);
    }
    std::ofstream out(out_ / "observation.csv");
    write_observation_csv(out, scenario_.obs);
  }

  ValueField emit_dp(DpMode mode, double kappa, const std::string& stem) {
    if (!cfg_.dp) throw Error("config has no dp section");
    const auto grid = make_state_grid(cfg_.domain, cfg_.dp_nodes);
    const auto cost = cfg_.make_cost(scenario_.obs);
    auto field = dp_solve(cfg_.vf, cfg_.domain, grid, cost, mode, kappa, *cfg_.dp);
    write_field(field, stem);
    return field;
  }

  ValueField emit_hjb(HjbScheme::BoundaryMode mode, const std::string& stem) {
    if (!cfg_.hjb) throw Error("config has no hjb section");
    auto scheme = *cfg_.hjb;
    scheme.boundary = mode;
    const auto grid = make_state_grid(cfg_.domain, cfg_.hjb_nodes);
    const auto cost = cfg_.make_cost(scenario_.obs);
    auto field = hjb_solve(cfg_.vf, cfg_.domain, grid, cost, scheme, cfg_.t_end);
    write_field(field, stem);
    return field;
  }

  KalmanReference emit_kalman() {
    const auto model = cfg_.linear_model();
    KalmanReference ref(model, scenario_.obs, cfg_.observation.dt);
    std::ofstream out(out_ / "kalman_path.csv");
    out << "t";
    for (int i = 1; i <= model.n(); ++i) out << ",xhat" << i;
    out << ",P11\n";
    for (int k = 0; k < ref.grid().nodes(); ++k) {
      out << format_g17(ref.grid().time(k));
      for (int i = 0; i < model.n(); ++i) out << "," << format_g17(ref.path().xhat[k][i]);
      out << "," << format_g17(ref.path().riccati.P[k](0, 0)) << "\n";
    }
    return ref;
  }

  FilterDensity emit_zakai(double epsilon, const std::string& stem) {
    const auto cells = make_cell_grid(cfg_.domain, cfg_.zakai_cells);
    const auto q0 = initial_density_from_psi(cfg_.psi, cells, epsilon);
    auto fd = zakai_solve(cfg_.vf, cfg_.domain, scenario_.obs, q0, epsilon, cfg_.zakai_dt);
    std::ofstream out(out_ / (stem + ".csv"));
    out << "t,x,qtilde\n";
    const int K = static_cast<int>(fd.rows.size()) - 1;
    for (int k : {0, K / 2, K}) {
      for (int i = 0; i < fd.cells.total_nodes(); ++i)
        out << format_g17(fd.tgrid.time(k)) << "," << format_g17(fd.cells.node(i)[0]) << ","
            << format_g17(fd.rows[k][i]) << "\n";
    }
    return fd;
  }

  const ExperimentConfig& config() const { return cfg_; }
  const ExperimentConfig::Scenario& scenario() const { return scenario_; }
  RunReport& report() { return report_; }
  const fs::path& out_dir() const { return out_; }

  void finalize() {
    emit_plotdata_best_effort();
    std::ofstream rep(out_ / "report.json");
    rep << report_.to_json().dump(2) << "\n";
    write_manifest(out_);
  }

 private:
  void add(Metric m) { report_.metrics.push_back(std::move(m)); }

  void write_field(const ValueField& field, const std::string& stem) {
    {
      std::ofstream out(out_ / (stem + ".csv"));
      write_value_field_csv(out, field);
    }
    std::ofstream bin(out_ / (stem + ".vfld"), std::ios::binary);
    write_value_field_vfld(bin, field);
  }

  void emit_plotdata_best_effort() {
    try {
      emit_plotdata(out_);
    } catch (const Error&) {
      // Runs with no plottable artifacts (validation-only) are fine.
    }
  }

  // Largest |a - b| over active base-grid nodes and all common rows.
  static double sup_field_difference(const ValueField& a, const ValueField& b) {
    if (a.rows.size() != b.rows.size()) throw Error("sup_field_difference: row mismatch");
    double sup = 0;
    for (size_t k = 0; k < a.rows.size(); ++k) {
      for (int i = 0; i < a.grid.total_nodes(); ++i) {
        if (!a.grid.active_node(i)) continue;
        const double va = a.rows[k][i], vb = b.rows[k][i];
        if (va >= ValueField::kSentinel * 0.5 || vb >= ValueField::kSentinel * 0.5) continue;
        sup = std::max(sup, std::abs(va - vb));
      }
    }
    return sup;
  }

  // ------------------------------------------------------------------ twin

  void run_twin() {
    if (!scenario_.truth) throw Error("twin: config must synthesize observations from a truth");
    emit_scenario();
    if (!cfg_.dp) return;
    const auto field = emit_dp(DpMode::Constrained, 0.0, "dp_field");
    std::ofstream out(out_ / "observer.csv");
    out << "t";
    for (int i = 1; i <= cfg_.vf.n; ++i) out << ",xhat" << i;
    out << ",vmin\n";
    Vec last_argmin;
    for (int k = 0; k < static_cast<int>(field.rows.size()); ++k) {
      const auto ext = extract_observer(field, k);
      out << format_g17(field.tgrid.time(k));
      for (int i = 0; i < cfg_.vf.n; ++i) out << "," << format_g17(ext.argmin[i]);
      out << "," << format_g17(ext.min_value) << "\n";
      last_argmin = ext.argmin;
    }
    const auto& truth = scenario_.truth->states.back();
    const double err = (last_argmin - truth).norm();
    const double tol = cfg_.tolerance_or("observer_final_error_max",
                                         std::numeric_limits<double>::quiet_NaN());
    if (std::isnan(tol)) {
      add(metric_info("observer_final_error", err, {"observer.csv", "truth.csv"}));
    } else {
      add(metric_le("observer_final_error", err, tol, {"observer.csv", "truth.csv"}));
    }
  }

  // ----------------------------------------------------------- kappa-sweep

  void run_kappa_sweep() {
    emit_scenario();
    const auto t0 = std::chrono::steady_clock::now();

    // Value sweep: penalized vs constrained DP with matched discretization.
    if (cfg_.dp) {
      const auto grid = make_state_grid(cfg_.domain, cfg_.dp_nodes);
      const auto cost = cfg_.make_cost(scenario_.obs);
      const int nk = static_cast<int>(cfg_.kappa_sweep.size());
      std::vector<double> sup_err(nk, 0.0);
      parallel_for(nk, [&](int i) {
        const double kappa = cfg_.kappa_sweep[i];
        const auto pen =
            dp_solve(cfg_.vf, cfg_.domain, grid, cost, DpMode::Penalized, kappa, *cfg_.dp);
        const auto con =
            dp_solve(cfg_.vf, cfg_.domain, grid, cost, DpMode::Constrained, kappa, *cfg_.dp);
        const auto pen_base = restrict_to_base_grid(pen, grid);
        sup_err[i] = sup_field_difference(pen_base, con);
      });
      {
        std::ofstream out(out_ / "value_sweep.csv");
        out << "kappa,sup_error\n";
        for (int i = 0; i < nk; ++i)
          out << format_g17(cfg_.kappa_sweep[i]) << "," << format_g17(sup_err[i]) << "\n";
      }
      bool decreasing = true;
      for (int i = 1; i < nk; ++i) decreasing = decreasing && sup_err[i] < sup_err[i - 1];
      add(metric_flag("kappa_value_error_strictly_decreasing", decreasing,
                      {"value_sweep.csv"}));
      add(metric_le("kappa_value_slope", loglog_slope(cfg_.kappa_sweep, sup_err),
                    cfg_.tolerance_or("kappa_value_slope_max", -0.20), {"value_sweep.csv"}));
      const double rt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      add(metric_le("kappa_value_runtime_sec", rt,
                    cfg_.tolerance_or("kappa_value_runtime_max", 120.0)));
    }

    // Trajectory sweep: penalized curves against the reflected reference.
    const auto t1 = std::chrono::steady_clock::now();
    const auto& tr = cfg_.trajectories;
    const TimeGrid tg = make_time_grid(0.0, tr.t_end, tr.dt);
    const int nk = static_cast<int>(cfg_.kappa_sweep.size());
    const int pairs = tr.count;
    std::vector<double> max_sup(nk, 0.0), max_dist(nk, 0.0);
    Rng rng = Rng(seed_).split(1001);
    std::vector<Vec> starts;
    std::vector<DisturbancePath> paths;
    for (int p = 0; p < pairs; ++p) {
      Rng prng = rng.split(p);
      // Rejection-sample a start inside the closure.
      Vec x0(cfg_.domain.dim());
      do {
        for (int a = 0; a < x0.size(); ++a) {
          const double u = prng.uniform();
          x0[a] = cfg_.domain.bounding_lo()[a] +
                  u * (cfg_.domain.bounding_hi()[a] - cfg_.domain.bounding_lo()[a]);
        }
      } while (!cfg_.domain.contains(x0, 0.0));
      starts.push_back(x0);
      PathSpec spec;
      spec.mode = PathSpec::Mode::Gaussian;
      spec.scale = tr.disturbance_scale;
      spec.block_dt = tr.disturbance_block_dt;
      auto w = spec.realize(tg, cfg_.vf.r, prng.split(7));
      // One unit-L2-mass burst per sweep scale, pressing at the wall, keeps
      // the distance envelope dist ~ kappa^{-1/2} tight across the sweep.
      std::vector<double> widths;
      for (double kappa : cfg_.kappa_sweep) widths.push_back(1.0 / kappa);
      paths.push_back(with_wall_bursts(cfg_.vf, cfg_.domain, x0, std::move(w), widths, 2.0));
    }
    std::vector<Trajectory> refs(pairs);
    parallel_for(pairs, [&](int p) {
      refs[p] = integrate_reflected(cfg_.vf, cfg_.domain, starts[p], paths[p]);
    });
    parallel_for(nk, [&](int i) {
      const double kappa = cfg_.kappa_sweep[i];
      double worst = 0, worst_dist = 0;
      for (int p = 0; p < pairs; ++p) {
        const auto pen = integrate_penalized(cfg_.vf, cfg_.domain, starts[p], paths[p], kappa);
        for (int k = 0; k < tg.nodes(); ++k) {
          worst = std::max(worst, (pen.states[k] - refs[p].states[k]).norm());
          worst_dist = std::max(worst_dist, cfg_.domain.dist_to_set(pen.states[k]));
        }
      }
      max_sup[i] = worst;
      max_dist[i] = worst_dist;
    });
    {
      std::ofstream out(out_ / "traj_sweep.csv");
      out << "kappa,max_sup_error,max_dist,scaled_dist\n";
      for (int i = 0; i < nk; ++i)
        out << format_g17(cfg_.kappa_sweep[i]) << "," << format_g17(max_sup[i]) << ","
            << format_g17(max_dist[i]) << ","
            << format_g17(max_dist[i] * std::sqrt(cfg_.kappa_sweep[i])) << "\n";
    }
    bool decreasing = true;
    for (int i = 1; i < nk; ++i) decreasing = decreasing && max_sup[i] < max_sup[i - 1];
    add(metric_flag("kappa_traj_error_decreasing", decreasing, {"traj_sweep.csv"}));
    add(metric_le("kappa_traj_slope", loglog_slope(cfg_.kappa_sweep, max_sup),
                  cfg_.tolerance_or("kappa_traj_slope_max", -0.22), {"traj_sweep.csv"}));
    double scaled_min = std::numeric_limits<double>::infinity(), scaled_max = 0;
    for (int i = 0; i < nk; ++i) {
      const double s = max_dist[i] * std::sqrt(cfg_.kappa_sweep[i]);
      scaled_min = std::min(scaled_min, s);
      scaled_max = std::max(scaled_max, s);
    }
    add(metric_le("kappa_dist_envelope_ratio", scaled_max / scaled_min,
                  cfg_.tolerance_or("kappa_dist_envelope_ratio_max", 3.0), {"traj_sweep.csv"}));
    const double rt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    add(metric_le("kappa_traj_runtime_sec", rt,
                  cfg_.tolerance_or("kappa_traj_runtime_max", 30.0)));
  }

  // --------------------------------------------------------- kalman-xcheck

  void run_kalman_xcheck() {
    emit_scenario();
    const auto t0 = std::chrono::steady_clock::now();
    const auto ref = emit_kalman();
    const auto cost = cfg_.make_cost(scenario_.obs);

    double dp_sup = 0, argmin_worst = 0, dx = 0;
    if (cfg_.dp) {
      const auto field = emit_dp(DpMode::Constrained, 0.0, "dp_field");
      dx = field.grid.dx[0];
      for (int k = 0; k < static_cast<int>(field.rows.size()); ++k) {
        const double t = field.tgrid.time(k);
        for (int i = 0; i < field.grid.total_nodes(); ++i) {
          if (!field.grid.active_node(i)) continue;
          const double v = field.rows[k][i];
          if (v >= ValueField::kSentinel * 0.5) continue;
          dp_sup = std::max(dp_sup, std::abs(v - ref.cost_to_come(t, field.grid.node(i))));
        }
        const auto ext = extract_observer(field, k);
        argmin_worst = std::max(argmin_worst, (ext.argmin - ref.estimate(t)).norm());
      }
      add(metric_le("kalman_dp_sup_error", dp_sup,
                    cfg_.tolerance_or("kalman_sup_error_max", 5e-2),
                    {"dp_field.csv", "kalman_path.csv"}));
      add(metric_le("kalman_dp_argmin_dist", argmin_worst, 2 * dx, {"dp_field.csv"}));
    }

    if (cfg_.hjb) {
      const auto field = emit_hjb(HjbScheme::BoundaryMode::Sub, "hjb_field");
      double hjb_sup = 0;
      const int stride = std::max(1, static_cast<int>(std::lround(0.01 / field.tgrid.dt)));
      for (int k = 0; k < static_cast<int>(field.rows.size()); k += stride) {
        const double t = field.tgrid.time(k);
        for (int i = 0; i < field.grid.total_nodes(); ++i) {
          if (!field.grid.active_node(i)) continue;
          hjb_sup =
              std::max(hjb_sup, std::abs(field.rows[k][i] -
                                         ref.cost_to_come(t, field.grid.node(i))));
        }
      }
      add(metric_le("kalman_hjb_sup_error", hjb_sup,
                    cfg_.tolerance_or("kalman_sup_error_max", 5e-2),
                    {"hjb_field.csv", "kalman_path.csv"}));
    }
    (void)cost;
    const double rt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    add(metric_le("kalman_runtime_sec", rt, cfg_.tolerance_or("kalman_runtime_max", 60.0)));
  }

  // ------------------------------------------------------------- hjb-vs-dp

  void run_hjb_vs_dp() {
    emit_scenario();
    if (!cfg_.dp || !cfg_.hjb) throw Error("hjb-vs-dp: config needs dp and hjb sections");
    const auto dp_field = emit_dp(DpMode::Constrained, 0.0, "dp_field");
    const auto hjb_field = emit_hjb(HjbScheme::BoundaryMode::Sub, "hjb_sub");

    // Compare at DP row times (the HJB step divides the DP step by config).
    const double ratio = dp_field.tgrid.dt / hjb_field.tgrid.dt;
    const int stride = static_cast<int>(std::lround(ratio));
    if (std::abs(ratio - stride) > 1e-9)
      throw Error("hjb-vs-dp: hjb.dt must divide dp.dt for aligned comparison");
    if (dp_field.grid.counts != hjb_field.grid.counts)
      throw Error("hjb-vs-dp: dp and hjb node counts must match");
    double sup = 0;
    for (int k = 0; k < static_cast<int>(dp_field.rows.size()); ++k) {
      const auto& vd = dp_field.rows[k];
      const auto& vh = hjb_field.rows[k * stride];
      for (int i = 0; i < dp_field.grid.total_nodes(); ++i) {
        if (!dp_field.grid.active_node(i)) continue;
        if (vd[i] >= ValueField::kSentinel * 0.5) continue;
        sup = std::max(sup, std::abs(vd[i] - vh[i]));
      }
    }
    add(metric_le("hjb_vs_dp_sup_difference", sup,
                  cfg_.tolerance_or("hjb_vs_dp_sup_max", 5e-2),
                  {"dp_field.csv", "hjb_sub.csv"}));

    if (cfg_.compare_boundary_modes) {
      const auto super_field = emit_hjb(HjbScheme::BoundaryMode::Super, "hjb_super");
      double boundary_gap = 0, interior_gap = 0;
      const auto& g = hjb_field.grid;
      for (size_t k = 0; k < hjb_field.rows.size(); ++k) {
        for (int i = 0; i < g.total_nodes(); ++i) {
          if (!g.active_node(i)) continue;
          const double diff = std::abs(hjb_field.rows[k][i] - super_field.rows[k][i]);
          const Vec x = g.node(i);
          const double rel = g.domain.dist_to_boundary(x) / (0.5 * g.domain.diameter());
          if (rel < 1e-9) {
            boundary_gap = std::max(boundary_gap, diff);
          } else if (rel > 0.66) {
            interior_gap = std::max(interior_gap, diff);
          }
        }
      }
      add(metric_info("hjb_sub_super_interior_gap", interior_gap,
                      {"hjb_sub.csv", "hjb_super.csv"}));
      add(metric_gt("hjb_sub_super_boundary_contrast", boundary_gap,
                    5.0 * std::max(interior_gap, 1e-6), {"hjb_sub.csv", "hjb_super.csv"}));
    }
  }

  // ---------------------------------------------------------- laplace-sweep

  void run_laplace_sweep() {
    emit_scenario();
    const auto t0 = std::chrono::steady_clock::now();
    const auto cost = cfg_.make_cost(scenario_.obs);

    std::optional<ValueField> dp_field;
    if (cfg_.dp) {
      dp_field = dp_solve(cfg_.vf, cfg_.domain, make_state_grid(cfg_.domain, cfg_.dp_nodes),
                          cost, DpMode::Constrained, 0.0, *cfg_.dp);
      write_field(*dp_field, "dp_field");
    }

    const int ne = static_cast<int>(cfg_.epsilon_sweep.size());
    std::vector<FilterDensity> densities(ne);
    parallel_for(ne, [&](int i) {
      const double eps = cfg_.epsilon_sweep[i];
      const auto cells = make_cell_grid(cfg_.domain, cfg_.zakai_cells);
      const auto q0 = initial_density_from_psi(cfg_.psi, cells, eps);
      densities[i] =
          zakai_solve(cfg_.vf, cfg_.domain, scenario_.obs, q0, eps, cfg_.zakai_dt);
    });

    if (dp_field) {
      const int K = static_cast<int>(dp_field->rows.size()) - 1;
      for (const auto& probe : cfg_.probes) {
        const auto phi = probe.fn();
        // Target: inf over the DP grid of Phi + V(t_end, .).
        double target = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dp_field->grid.total_nodes(); ++i) {
          if (!dp_field->grid.active_node(i)) continue;
          const double v = dp_field->rows[K][i];
          if (v >= ValueField::kSentinel * 0.5) continue;
          target = std::min(target, phi(dp_field->grid.node(i)) + v);
        }
        std::vector<double> gaps(ne);
        std::ofstream out(out_ / ("laplace_" + probe.name() + ".csv"));
        out << "epsilon,value,target,gap\n";
        for (int i = 0; i < ne; ++i) {
          const int kf = static_cast<int>(densities[i].rows.size()) - 1;
          const double value = laplace_functional(densities[i], phi, kf);
          gaps[i] = std::abs(value - target);
          out << format_g17(cfg_.epsilon_sweep[i]) << "," << format_g17(value) << ","
              << format_g17(target) << "," << format_g17(gaps[i]) << "\n";
        }
        bool monotone = true;
        for (int i = 1; i < ne; ++i) monotone = monotone && gaps[i] <= gaps[i - 1] + 1e-12;
        add(metric_flag("laplace_gap_nonincreasing_" + probe.name(), monotone,
                        {"laplace_" + probe.name() + ".csv"}));
        add(metric_le("laplace_final_gap_" + probe.name(), gaps[ne - 1],
                      cfg_.tolerance_or("laplace_final_gap_max", 7e-2),
                      {"laplace_" + probe.name() + ".csv"}));
      }
    }

    // Duality gap at the declared epsilon, plus a halving check under
    // simultaneous dx, dt refinement.
    {
      const double eps = cfg_.duality_epsilon;
      const ProbeSpec* probe = nullptr;
      for (const auto& p : cfg_.probes)
        if (p.kind != ProbeSpec::Kind::Zero) probe = &p;
      if (probe) {
        const auto run_pair = [&](int cells, double dt) {
          const auto grid = make_cell_grid(cfg_.domain, cells);
          const auto q0 = initial_density_from_psi(cfg_.psi, grid, eps);
          const auto q = zakai_solve(cfg_.vf, cfg_.domain, scenario_.obs, q0, eps, dt);
          const auto dual = dual_solve(cfg_.vf, cfg_.domain, scenario_.obs, probe->fn(), eps,
                                       cfg_.t_end, dt, cells);
          return duality_gap(q, dual);
        };
        const double gap_coarse = run_pair(cfg_.zakai_cells, cfg_.zakai_dt);
        const double gap_fine = run_pair(2 * cfg_.zakai_cells, 0.5 * cfg_.zakai_dt);
        {
          std::ofstream out(out_ / "duality.csv");
          out << "cells,dt,gap\n";
          out << cfg_.zakai_cells << "," << format_g17(cfg_.zakai_dt) << ","
              << format_g17(gap_coarse) << "\n";
          out << 2 * cfg_.zakai_cells << "," << format_g17(0.5 * cfg_.zakai_dt) << ","
              << format_g17(gap_fine) << "\n";
        }
        add(metric_le("duality_gap", gap_coarse, cfg_.tolerance_or("duality_gap_max", 1e-3),
                      {"duality.csv"}));
        add(metric_le("duality_gap_refined_ratio", gap_fine / std::max(gap_coarse, 1e-300),
                      cfg_.tolerance_or("duality_halving_ratio_max", 0.5), {"duality.csv"}));
      }
    }

    // Boundary-condition contrast at walls with outward drift.
    if (cfg_.wall_check) {
      std::ofstream out(out_ / "wall_slopes.csv");
      out << "epsilon,wall,b_n,sub_residual,super_residual\n";
      bool super_better_everywhere = true;
      for (int i = 0; i < ne; ++i) {
        const auto& fd = densities[i];
        const int kf = static_cast<int>(fd.rows.size()) - 1;
        for (bool right : {false, true}) {
          const Vec wall =
              right ? cfg_.domain.bounding_hi() : cfg_.domain.bounding_lo();
          const Vec n = cfg_.domain.outward_normal(wall);
          const double bn = cfg_.vf.drift(cfg_.t_end, wall).dot(n);
          if (bn <= 0) continue;
          const double dvdn = log_density_wall_slope(fd, kf, right);
          const double sub_res = std::abs(bn + dvdn);
          const double super_res = std::abs(bn + 0.5 * dvdn);
          out << format_g17(cfg_.epsilon_sweep[i]) << "," << (right ? "right" : "left") << ","
              << format_g17(bn) << "," << format_g17(sub_res) << ","
              << format_g17(super_res) << "\n";
          super_better_everywhere = super_better_everywhere && super_res < sub_res;
        }
      }
      add(metric_flag("zakai_wall_super_condition_preferred", super_better_everywhere,
                      {"wall_slopes.csv"}));
    }

    const double rt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    add(metric_le("laplace_runtime_sec", rt, cfg_.tolerance_or("laplace_runtime_max", 300.0)));
  }

  // ----------------------------------------------------------- holder-check

  void run_holder_check() {
    const auto& tr = cfg_.trajectories;
    const TimeGrid coarse = make_time_grid(0.0, tr.t_end, tr.dt);
    Rng rng = Rng(seed_).split(2002);

    const auto holder_constant = [](const Trajectory& traj) {
      double best = 0;
      const int n = traj.grid.nodes();
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          const double dt = traj.grid.time(b) - traj.grid.time(a);
          best = std::max(best, (traj.states[b] - traj.states[a]).norm() / std::sqrt(dt));
        }
      return best;
    };

    std::vector<double> c_coarse(tr.count), c_fine(tr.count);
    std::vector<Vec> starts(tr.count);
    std::vector<DisturbancePath> paths(tr.count);
    for (int p = 0; p < tr.count; ++p) {
      Rng prng = rng.split(p);
      Vec x0(cfg_.domain.dim());
      do {
        for (int a = 0; a < x0.size(); ++a) {
          const double u = prng.uniform();
          x0[a] = cfg_.domain.bounding_lo()[a] +
                  u * (cfg_.domain.bounding_hi()[a] - cfg_.domain.bounding_lo()[a]);
        }
      } while (!cfg_.domain.contains(x0, 0.0));
      starts[p] = x0;
      PathSpec spec;
      spec.mode = PathSpec::Mode::Gaussian;
      spec.scale = tr.disturbance_scale;
      spec.block_dt = tr.disturbance_block_dt;
      paths[p] = spec.realize(coarse, cfg_.vf.r, prng.split(7));
    }
    parallel_for(tr.count, [&](int p) {
      const auto ref = integrate_reflected(cfg_.vf, cfg_.domain, starts[p], paths[p]);
      c_coarse[p] = holder_constant(ref);
      // Same disturbance on the halved grid: each sample spans two steps, so
      // the L2 norm is unchanged.
      DisturbancePath fine{TimeGrid{0.0, 0.5 * tr.dt, 2 * coarse.steps}, {}};
      fine.samples.reserve(2 * coarse.steps);
      for (const auto& w : paths[p].samples) {
        fine.samples.push_back(w);
        fine.samples.push_back(w);
      }
      const auto refined = integrate_reflected(cfg_.vf, cfg_.domain, starts[p], fine);
      c_fine[p] = holder_constant(refined);
    });
    double worst_ratio = 0, cmax = 0;
    {
      std::ofstream out(out_ / "holder.csv");
      out << "trajectory,c_coarse,c_fine\n";
      for (int p = 0; p < tr.count; ++p) {
        out << p << "," << format_g17(c_coarse[p]) << "," << format_g17(c_fine[p]) << "\n";
        const double r = c_fine[p] / c_coarse[p];
        worst_ratio = std::max({worst_ratio, r, 1.0 / r});
        cmax = std::max({cmax, c_coarse[p], c_fine[p]});
      }
    }
    add(metric_info("holder_constant_max", cmax, {"holder.csv"}));
    add(metric_le("holder_refinement_ratio", worst_ratio,
                  cfg_.tolerance_or("holder_ratio_max", 2.0), {"holder.csv"}));
  }

  // ---------------------------------------------------------- bellman-check

  void run_bellman_check() {
    emit_scenario();
    if (!cfg_.dp) throw Error("bellman-check: config needs a dp section");
    const auto cost = cfg_.make_cost(scenario_.obs);
    const auto field = emit_dp(DpMode::Constrained, 0.0, "dp_field");
    const double tau = cfg_.tolerance_or("bellman_tau", 0.1);
    const double res_tau =
        bellman_residual(cfg_.vf, cfg_.domain, cost, field, tau, 200, seed_, *cfg_.dp);
    const double res_dt = bellman_residual(cfg_.vf, cfg_.domain, cost, field,
                                           field.tgrid.dt, 200, seed_, *cfg_.dp);
    {
      std::ofstream out(out_ / "bellman.csv");
      out << "tau,residual\n";
      out << format_g17(field.tgrid.dt) << "," << format_g17(res_dt) << "\n";
      out << format_g17(tau) << "," << format_g17(res_tau) << "\n";
    }
    add(metric_le("bellman_residual_single_step", res_dt, 1e-12, {"bellman.csv"}));
    add(metric_le("bellman_residual", res_tau, cfg_.tolerance_or("bellman_residual_max", 5e-3),
                  {"bellman.csv"}));
  }

  ExperimentConfig cfg_;
  fs::path out_;
  uint64_t seed_;
  ExperimentConfig::Scenario scenario_;
  RunReport report_;
};

inline RunReport run_scenario(const ExperimentConfig& config, const fs::path& out_dir,
                              uint64_t seed) {
  ScenarioRunner runner(config, out_dir, seed);
  return runner.run();
}

}  // namespace mortensen
