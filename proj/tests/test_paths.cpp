#include "mortensen/grid.hpp"
#include "mortensen/paths.hpp"
#include "mortensen/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace mortensen;

TEST_CASE("time grid arithmetic") {
  const auto g = make_time_grid(0.0, 1.0, 1e-3);
  REQUIRE(g.steps == 1000);
  REQUIRE(g.nodes() == 1001);
  REQUIRE(g.interval_index(0.0) == 0);
  REQUIRE(g.interval_index(0.9999) == 999);
  REQUIRE(g.interval_index(1.0) == 999);  // clamped
  REQUIRE_THROWS_AS(make_time_grid(0.0, 1.0, 3e-4), Error);
}

TEST_CASE("disturbance L2 norm is exact for step functions") {
  const auto g = make_time_grid(0.0, 0.5, 0.05);
  auto w = DisturbancePath::constant(g, make_vec1(2.0));
  REQUIRE(w.l2_norm_sq() == Catch::Approx(0.5 * 4.0).margin(1e-15));
  w.samples[3] = make_vec1(-1.0);
  REQUIRE(w.l2_norm_sq() == Catch::Approx(0.05 * (9 * 4.0 + 1.0)).margin(1e-15));
}

TEST_CASE("trajectory CSV round trip at full precision") {
  Rng rng(11);
  Trajectory traj;
  traj.grid = TimeGrid{0.0, 1.0 / 3.0, 5};
  for (int k = 0; k <= 5; ++k)
    traj.states.push_back(make_vec2(rng.normal() / 3, rng.normal() * 1e7));
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  const auto back = read_trajectory_csv(ss, 2);
  REQUIRE(back.grid.steps == traj.grid.steps);
  for (int k = 0; k <= 5; ++k) REQUIRE((back.states[k] - traj.states[k]).norm() == 0.0);
}

TEST_CASE("observation CSV round trip") {
  ObservationPath obs;
  obs.grid = TimeGrid{0.0, 0.25, 4};
  for (int k = 0; k < 4; ++k) obs.ydot.push_back(make_vec1(std::sqrt(2.0) * (k + 1)));
  std::stringstream ss;
  write_observation_csv(ss, obs);
  const auto back = read_observation_csv(ss);
  REQUIRE(back.grid.steps == 4);
  for (int k = 0; k < 4; ++k) REQUIRE(back.ydot[k][0] == obs.ydot[k][0]);
}

TEST_CASE("rng split streams are reproducible and distinct") {
  Rng a(123), b(123);
  REQUIRE(a.next_u64() == b.next_u64());
  Rng c = Rng(123).split(1);
  Rng d = Rng(123).split(2);
  REQUIRE(c.next_u64() != d.next_u64());
  Rng e = Rng(123).split(1);
  REQUIRE(Rng(123).split(1).next_u64() == e.next_u64());
}

TEST_CASE("state grid masks and locates") {
  const auto ball = Domain::ball(make_vec2(0, 0), 1.0);
  const auto g = make_state_grid(ball, {21, 21});
  REQUIRE(g.total_nodes() == 441);
  int active = 0;
  for (int i = 0; i < g.total_nodes(); ++i)
    if (g.active_node(i)) {
      ++active;
      REQUIRE(ball.dist_to_set(g.node(i)) <= 1e-9);
    }
  REQUIRE(active > 300);  // pi/4 of the bounding box, roughly
  const auto c = g.locate(make_vec2(0.07, -0.03));
  const Vec corner = g.node(g.corner(c, 0));
  REQUIRE(corner[0] <= 0.07);
  REQUIRE(corner[1] <= -0.03);
  REQUIRE(0.07 - corner[0] <= g.dx[0]);
}

TEST_CASE("value field vfld round trip") {
  const auto iv = Domain::interval(0, 1);
  ValueField f;
  f.grid = make_state_grid(iv, {11, 1});
  f.tgrid = TimeGrid{0.0, 0.1, 2};
  Rng rng(5);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> row(11);
    for (auto& v : row) v = rng.normal();
    f.rows.push_back(row);
  }
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  write_value_field_vfld(ss, f);
  const auto rows = read_value_field_vfld(ss);
  REQUIRE(rows.size() == 3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 11; ++i) REQUIRE(rows[k][i] == f.rows[k][i]);
}

TEST_CASE("margin-extended grid restricts exactly") {
  const auto iv = Domain::interval(0, 1);
  const auto base = make_state_grid(iv, {11, 1});
  ValueField f;
  f.grid = make_state_grid(iv, {11, 1}, 0.25);
  REQUIRE(f.grid.counts[0] > 11);
  f.tgrid = TimeGrid{0.0, 0.1, 0};
  std::vector<double> row(f.grid.total_nodes());
  for (int i = 0; i < f.grid.total_nodes(); ++i) row[i] = f.grid.node(i)[0];
  f.rows.push_back(row);
  const auto r = restrict_to_base_grid(f, base);
  for (int i = 0; i < base.total_nodes(); ++i)
    REQUIRE(r.rows[0][i] == Catch::Approx(base.node(i)[0]).margin(1e-12));
}
