// Command-line driver. Verbs:
//   simulate  twin-experiment generation (truth + observation CSVs)
//   dp        constrained cost-to-come table + observer path
//   hjb       HJB field in the configured boundary mode
//   kalman    Riccati / estimator path for linear scenarios
//   zakai     filter densities over the configured epsilon sweep
//   sweep     kappa- or epsilon-sweep scenario with tolerances
//   report    full scenario pipeline: artifacts, plot data, report, manifest
// Every verb takes --config PATH --out DIR [--seed N]. Exit code 0 only if
// all declared tolerances pass.

#include "mortensen/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int64_t seed = -1;  // -1: use the config's seed
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
}

uint64_t effective_seed(const mortensen::ExperimentConfig& cfg, const CommonArgs& args) {
  return args.seed >= 0 ? static_cast<uint64_t>(args.seed) : cfg.seed;
}

int print_report(const mortensen::RunReport& report) {
  for (const auto& m : report.metrics) {
    if (m.cmp == "info") {
      std::printf("[INFO] %-42s %.6g\n", m.name.c_str(), m.value);
    } else {
      std::printf("[%s] %-42s %.6g %s %.6g\n", m.pass ? "PASS" : "FAIL", m.name.c_str(),
                  m.value, m.cmp.c_str(), m.tolerance);
    }
  }
  std::printf("%s (%s) in %.2fs\n", report.pass() ? "PASS" : "FAIL", report.name.c_str(),
              report.wall_clock_sec);
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-energy estimation for reflected dynamics"};
  app.require_subcommand(1);

  CommonArgs args;
  const char* verbs[] = {"simulate", "dp", "hjb", "kalman", "zakai", "sweep", "report"};
  const char* descriptions[] = {
      "generate twin-experiment truth and observations",
      "solve the constrained cost-to-come table",
      "solve the HJB field",
      "integrate the Riccati equation and the linear estimator",
      "solve the filter density over the epsilon sweep",
      "run a kappa- or epsilon-sweep scenario",
      "run the configured scenario end to end"};
  for (size_t i = 0; i < std::size(verbs); ++i) add_common(app.add_subcommand(verbs[i], descriptions[i]), args);

  CLI11_PARSE(app, argc, argv);
  const std::string verb = app.get_subcommands().front()->get_name();

  try {
    auto cfg = mortensen::load_config(args.config_path);
    const uint64_t seed = effective_seed(cfg, args);
    mortensen::ScenarioRunner runner(cfg, args.out_dir, seed);

    if (verb == "simulate") {
      runner.emit_scenario();
      runner.finalize();
      std::printf("wrote scenario artifacts to %s\n", args.out_dir.c_str());
      return 0;
    }
    if (verb == "dp") {
      runner.emit_scenario();
      const auto field = runner.emit_dp(mortensen::DpMode::Constrained, 0.0, "dp_field");
      const auto ext = mortensen::extract_observer(field, static_cast<int>(field.rows.size()) - 1);
      runner.report().metrics.push_back(
          mortensen::metric_info("dp_final_min_value", ext.min_value, {"dp_field.csv"}));
      runner.finalize();
      return print_report(runner.report());
    }
    if (verb == "hjb") {
      if (!cfg.hjb) throw mortensen::Error("config has no hjb section");
      runner.emit_scenario();
      const auto field = runner.emit_hjb(cfg.hjb->boundary, "hjb_field");
      const auto cost = cfg.make_cost(runner.scenario().obs);
      const double lip = cfg.psi.lipschitz_on(cfg.domain.diameter());
      const auto rep = mortensen::hjb_residual_report(field, cfg.vf, cost, lip);
      runner.report().metrics.push_back(
          mortensen::metric_info("hjb_interior_max_residual", rep.interior_max_residual));
      runner.report().metrics.push_back(
          mortensen::metric_info("hjb_boundary_sub_residual", rep.boundary_sub_residual));
      runner.report().metrics.push_back(
          mortensen::metric_info("hjb_boundary_super_residual", rep.boundary_super_residual));
      runner.finalize();
      return print_report(runner.report());
    }
    if (verb == "kalman") {
      runner.emit_scenario();
      runner.emit_kalman();
      runner.finalize();
      return print_report(runner.report());
    }
    if (verb == "zakai") {
      runner.emit_scenario();
      const auto eps_list =
          cfg.epsilon_sweep.empty() ? std::vector<double>{0.05} : cfg.epsilon_sweep;
      for (size_t i = 0; i < eps_list.size(); ++i) {
        const auto fd = runner.emit_zakai(eps_list[i], "zakai_eps" + std::to_string(i));
        runner.report().metrics.push_back(mortensen::metric_info(
            "zakai_final_mass_eps" + std::to_string(i),
            fd.mass(static_cast<int>(fd.rows.size()) - 1)));
      }
      runner.finalize();
      return print_report(runner.report());
    }
    if (verb == "sweep") {
      if (cfg.kind != "kappa-sweep" && cfg.kind != "laplace-sweep")
        throw mortensen::Error("sweep verb needs a kappa-sweep or laplace-sweep config");
      return print_report(runner.run());
    }
    // report: full pipeline.
    return print_report(runner.run());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
