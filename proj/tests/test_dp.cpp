#include "mortensen/dp.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mortensen;
using mortensen::testing::field_1d;
using mortensen::testing::quadratic_cost;

namespace {

DpOptions small_options(double dt = 0.02, int controls = 21, double omega_max = 8.0) {
  DpOptions o;
  o.dt = dt;
  o.controls_per_axis = controls;
  o.omega_max = omega_max;
  return o;
}

}  // namespace

TEST_CASE("dp row zero equals psi") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.2, 2e-3), make_vec1(0.7));
  const auto cost = quadratic_cost(0.4, 1.0, obs);
  const auto grid = make_state_grid(d, {51, 1});
  const auto field = dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, small_options());
  for (int i = 0; i < grid.total_nodes(); ++i)
    REQUIRE(field.rows[0][i] == cost.psi.eval(grid.node(i)));
}

TEST_CASE("dp zero-cost scenario keeps its minimum at the prior center") {
  // b = 0, h = 0, ydot = 0: staying at 0.5 is feasible with zero cost.
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({}, 0.0);
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.1, 2e-3), make_vec1(0.0));
  const auto cost = quadratic_cost(0.5, 1.0, obs);
  const auto grid = make_state_grid(d, {101, 1});
  const auto field = dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, small_options());
  const int K = static_cast<int>(field.rows.size()) - 1;
  for (int i = 0; i < grid.total_nodes(); ++i) REQUIRE(field.rows[K][i] >= -1e-12);
  const auto ext = extract_observer(field, K);
  REQUIRE(std::abs(ext.argmin[0] - 0.5) <= 2 * grid.dx[0]);
  REQUIRE(ext.min_value <= 1e-10);
}

TEST_CASE("dp against the Hopf-Lax oracle") {
  // With b = 0 and no misfit the value is the inf-convolution
  // V(t,x) = min_y psi(y) + |x-y|^2 / (2t); straight minimizing paths stay in
  // the convex domain, so the constraint is inactive.
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({}, 0.0);
  const double t_end = 0.2;
  const auto obs = ObservationPath::constant(make_time_grid(0, t_end, 2e-3), make_vec1(0.0));
  CostSpec cost{InitialCost::poly1d({0.09, -0.6, 1.0}), obs};  // (x - 0.3)^2
  const auto grid = make_state_grid(d, {101, 1});
  const auto field =
      dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, small_options(0.02, 21, 12.0));
  const int K = static_cast<int>(field.rows.size()) - 1;

  const auto hopf_lax = [&](double t, double x) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 4000; ++s) {
      const double y = s / 4000.0;
      const double psi = (y - 0.3) * (y - 0.3);
      best = std::min(best, psi + (x - y) * (x - y) / (2 * t));
    }
    return best;
  };

  double sup = 0;
  for (int i = 0; i < grid.total_nodes(); ++i) {
    const double expected = hopf_lax(t_end, grid.node(i)[0]);
    sup = std::max(sup, std::abs(field.rows[K][i] - expected));
  }
  REQUIRE(sup <= 2e-2);
}

TEST_CASE("dp argmin migrates from the prior toward the observation") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({});
  const auto obs = ObservationPath::constant(make_time_grid(0, 1.0, 1e-2), make_vec1(0.5));
  const auto cost = quadratic_cost(0.2, 1.0, obs);
  const auto grid = make_state_grid(d, {101, 1});
  const auto field =
      dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, small_options(0.02, 21, 8.0));
  double prev = 0.2;
  for (int k = 0; k < static_cast<int>(field.rows.size()); ++k) {
    const auto ext = extract_observer(field, k);
    REQUIRE(ext.argmin[0] >= prev - 1e-12);  // monotone migration
    prev = ext.argmin[0];
  }
  // This is a linear scenario: the limit point is the steady-filter mean
  // 0.5 + (0.2 - 0.5) e^{-t}, not the observation itself.
  const double expected = 0.5 - 0.3 * std::exp(-1.0);
  REQUIRE(std::abs(prev - expected) <= 5 * grid.dx[0]);
}

TEST_CASE("dp monotone in the initial cost") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.2, 2e-3), make_vec1(0.9));
  const auto grid = make_state_grid(d, {51, 1});
  // psi2 = psi1 + 1/4 pointwise, with psi1 = (x - 0.4)^2 / 2.
  CostSpec base{InitialCost::poly1d({0.08, -0.4, 0.5}), obs};
  CostSpec shifted{InitialCost::poly1d({0.33, -0.4, 0.5}), obs};
  const auto opts = small_options();
  const auto vlo = dp_solve(vf, d, grid, base, DpMode::Constrained, 0.0, opts);
  const auto vhi = dp_solve(vf, d, grid, shifted, DpMode::Constrained, 0.0, opts);
  for (size_t k = 0; k < vlo.rows.size(); ++k)
    for (int i = 0; i < grid.total_nodes(); ++i)
      REQUIRE(vhi.rows[k][i] >= vlo.rows[k][i] - 1e-12);
}

TEST_CASE("dp inward drift: projected and masked step rules agree") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});  // b(0) = 0.5, b(1) = -0.5: inward at both walls
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.2, 2e-3), make_vec1(0.8));
  const auto cost = quadratic_cost(0.5, 1.0, obs);
  const auto grid = make_state_grid(d, {51, 1});
  auto opts = small_options();
  const auto projected = dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, opts);
  opts.step_rule = DpOptions::StepRule::Masked;
  const auto masked = dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, opts);
  for (size_t k = 0; k < projected.rows.size(); ++k)
    for (int i = 0; i < grid.total_nodes(); ++i)
      REQUIRE(std::abs(projected.rows[k][i] - masked.rows[k][i]) <= 1e-4);
}

TEST_CASE("bellman residual") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.3, 2e-3), make_vec1(1.0));
  const auto cost = quadratic_cost(0.4, 1.0, obs);
  const auto grid = make_state_grid(d, {101, 1});
  const auto opts = small_options();
  const auto field = dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, opts);

  // tau = dt reproduces the recursion exactly.
  REQUIRE(bellman_residual(vf, d, cost, field, opts.dt, 100, 7, opts) == 0.0);
  // tau = 2 dt: a single constant control replaces two piecewise ones.
  REQUIRE(bellman_residual(vf, d, cost, field, 2 * opts.dt, 100, 7, opts) <= 5e-3);
  // tau beyond the horizon is rejected.
  REQUIRE_THROWS_AS(bellman_residual(vf, d, cost, field, 10.0, 10, 7, opts), Error);
}

TEST_CASE("extract observer reports ties in lexicographic order") {
  const auto d = Domain::interval(0, 1);
  ValueField f;
  f.grid = make_state_grid(d, {11, 1});
  f.tgrid = TimeGrid{0, 1, 0};
  std::vector<double> row(11, 5.0);
  row[3] = 1.0;
  row[7] = 1.0;  // exact tie
  f.rows.push_back(row);
  const auto ext = extract_observer(f, 0);
  REQUIRE(ext.tied_nodes.size() == 2);
  REQUIRE(ext.argmin[0] == Catch::Approx(f.grid.node(3)[0]));

  f.rows[0] = std::vector<double>(11, ValueField::kSentinel);
  REQUIRE_THROWS_AS(extract_observer(f, 0), Error);
}

TEST_CASE("penalized dp approaches the constrained value") {
  // The observation pulls past the right wall; the constrained value sticks
  // at the wall while the penalized one exploits small overshoots.
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.2, 2e-3), make_vec1(1.5));
  const auto cost = quadratic_cost(0.6, 1.0, obs);
  const auto grid = make_state_grid(d, {101, 1});
  const auto opts = small_options(0.02, 21, 8.0);

  const std::vector<double> kappas = {10, 100, 1000};
  std::vector<double> sup_err;
  for (double kappa : kappas) {
    const auto pen = dp_solve(vf, d, grid, cost, DpMode::Penalized, kappa, opts);
    const auto con = dp_solve(vf, d, grid, cost, DpMode::Constrained, kappa, opts);
    const auto pen_base = restrict_to_base_grid(pen, grid);
    double sup = 0;
    for (size_t k = 0; k < con.rows.size(); ++k)
      for (int i = 0; i < grid.total_nodes(); ++i) {
        const double a = pen_base.rows[k][i], b = con.rows[k][i];
        if (a >= ValueField::kSentinel * 0.5 || b >= ValueField::kSentinel * 0.5) continue;
        sup = std::max(sup, std::abs(a - b));
      }
    sup_err.push_back(sup);
  }
  REQUIRE(sup_err[1] < sup_err[0]);
  REQUIRE(sup_err[2] < sup_err[1]);

  // Observer convergence: penalized minimisers approach the constrained
  // argmin set along the sweep.
  const auto con = dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, opts);
  const int K = static_cast<int>(con.rows.size()) - 1;
  const auto con_ext = extract_observer(con, K);
  double prev_dist = std::numeric_limits<double>::infinity();
  for (double kappa : kappas) {
    const auto pen = dp_solve(vf, d, grid, cost, DpMode::Penalized, kappa, opts);
    const auto pen_ext = extract_observer(pen, K);
    double dist = std::numeric_limits<double>::infinity();
    for (int node : con_ext.tied_nodes)
      dist = std::min(dist, (pen_ext.argmin - con.grid.node(node)).norm());
    REQUIRE(dist <= prev_dist + 2 * grid.dx[0]);
    prev_dist = dist;
  }
  REQUIRE(prev_dist <= 2 * grid.dx[0]);
}

TEST_CASE("dp discrete Lipschitz constant is stable under refinement") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.2, 2e-3), make_vec1(1.2));
  const auto cost = quadratic_cost(0.4, 1.0, obs);
  const auto lip_of = [&](int nodes) {
    const auto grid = make_state_grid(d, {nodes, 1});
    const auto field =
        dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, small_options(0.02, 21, 8.0));
    const int K = static_cast<int>(field.rows.size()) - 1;
    double lip = 0;
    for (int i = 0; i + 1 < nodes; ++i)
      lip = std::max(lip, std::abs(field.rows[K][i + 1] - field.rows[K][i]) / grid.dx[0]);
    return lip;
  };
  const double l1 = lip_of(101);
  const double l2 = lip_of(201);
  REQUIRE(l2 <= 1.5 * l1 + 0.1);
}

TEST_CASE("dp rejects bad inputs") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({});
  const auto obs = ObservationPath::constant(make_time_grid(0, 0.2, 2e-3), make_vec1(0.0));
  const auto cost = quadratic_cost(0.5, 1.0, obs);
  const auto grid = make_state_grid(d, {51, 1});
  auto opts = small_options();
  opts.dt = 1e-3;  // smaller than the observation spacing
  REQUIRE_THROWS_AS(dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, opts), Error);
  opts = small_options();
  opts.controls_per_axis = 20;  // must be odd
  REQUIRE_THROWS_AS(dp_solve(vf, d, grid, cost, DpMode::Constrained, 0.0, opts), Error);
  REQUIRE_THROWS_AS(dp_solve(vf, d, grid, cost, DpMode::Penalized, 0.0, small_options()),
                    Error);
}
