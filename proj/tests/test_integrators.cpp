#include "mortensen/integrators.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace mortensen;

namespace {

VectorFieldSpec field_1d(std::vector<double> drift_poly) {
  VectorFieldSpec vf;
  vf.n = vf.r = vf.m = 1;
  if (!drift_poly.empty()) {
    DriftTerm t;
    t.kind = DriftTerm::Kind::Poly1D;
    t.coeffs = std::move(drift_poly);
    vf.drift_terms.push_back(t);
  }
  vf.obs_matrix = Mat::Identity(1, 1);
  return vf;
}

}  // namespace

TEST_CASE("reflected integrator examples") {
  const auto d = Domain::interval(0, 1);

  // Outward drift at the wall is absorbed by the normal cone.
  {
    const auto vf = field_1d({1.0});
    const auto w = DisturbancePath::zero(make_time_grid(0, 1.0, 1e-3), 1);
    const auto traj = integrate_reflected(vf, d, make_vec1(1.0), w);
    for (const auto& x : traj.states) REQUIRE(x[0] == 1.0);
  }
  // Zero field: constant path.
  {
    const auto vf = field_1d({});
    const auto w = DisturbancePath::zero(make_time_grid(0, 1.0, 1e-3), 1);
    const auto traj = integrate_reflected(vf, d, make_vec1(0.3), w);
    for (const auto& x : traj.states) REQUIRE(x[0] == 0.3);
  }
  // b = -2: free motion then sticking at 0, x(s) = max(0, 0.5 - 2s).
  {
    const auto vf = field_1d({-2.0});
    const auto grid = make_time_grid(0, 0.5, 1e-4);
    const auto w = DisturbancePath::zero(grid, 1);
    const auto traj = integrate_reflected(vf, d, make_vec1(0.5), w);
    for (int k = 0; k <= grid.steps; ++k) {
      const double expected = std::max(0.0, 0.5 - 2 * grid.time(k));
      REQUIRE(std::abs(traj.states[k][0] - expected) <= 1e-3);
    }
  }
  REQUIRE_THROWS_AS(
      integrate_reflected(field_1d({}), d, make_vec1(1.5),
                          DisturbancePath::zero(make_time_grid(0, 1, 0.1), 1)),
      Error);
}

TEST_CASE("penalized integrator fixed points") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({1.0});
  const auto grid = make_time_grid(0, 3.0, 1e-3);
  const auto w = DisturbancePath::zero(grid, 1);
  for (double kappa : {10.0, 100.0}) {
    const auto traj = integrate_penalized(vf, d, make_vec1(1.0), w, kappa);
    REQUIRE(std::abs(traj.states.back()[0] - (1.0 + 1.0 / kappa)) <= 1e-3);
  }
  REQUIRE_THROWS_AS(integrate_penalized(vf, d, make_vec1(0.5), w, 0.0), Error);
}

TEST_CASE("penalized radial steady state in 2D") {
  const auto d = Domain::ball(make_vec2(0, 0), 1.0);
  VectorFieldSpec vf;
  vf.n = vf.r = 2;
  vf.m = 2;
  DriftTerm t;
  t.kind = DriftTerm::Kind::RadialUnit;
  t.rate = 1.0;
  t.center = make_vec2(0, 0);
  vf.drift_terms.push_back(t);
  vf.obs_matrix = Mat::Identity(2, 2);
  const double kappa = 50.0;
  const auto grid = make_time_grid(0, 2.0, 1e-3);
  const auto traj = integrate_penalized(vf, d, make_vec2(1.0, 0.0),
                                        DisturbancePath::zero(grid, 2), kappa);
  // Radial reduction: rdot = 1 - kappa (r - 1), steady radius 1 + 1/kappa.
  REQUIRE(std::abs(traj.states.back().norm() - (1.0 + 1.0 / kappa)) <= 1e-3);
}

TEST_CASE("sde with zero noise degenerates to the reflected integrator") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto grid = make_time_grid(0, 1.0, 1e-3);
  const auto sde = integrate_reflected_sde(vf, d, make_vec1(0.2), 0.0, 99, grid);
  const auto ref = integrate_reflected(vf, d, make_vec1(0.2), DisturbancePath::zero(grid, 1));
  for (int k = 0; k <= grid.steps; ++k)
    REQUIRE(sde.states[k][0] == Catch::Approx(ref.states[k][0]).margin(1e-15));
}

TEST_CASE("reflected Brownian motion: mean symmetry and uniform stationary law") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({});
  const int paths = 10000;

  // Mean at t = 1 stays at the symmetric start 0.5 within 3 standard errors.
  {
    const auto grid = make_time_grid(0, 1.0, 1e-3);
    double sum = 0, sumsq = 0;
    Rng seeds(2024);
    for (int p = 0; p < paths; ++p) {
      const auto traj =
          integrate_reflected_sde(vf, d, make_vec1(0.5), 0.01, seeds.split(p).seed(), grid);
      const double xT = traj.states.back()[0];
      sum += xT;
      sumsq += xT * xT;
    }
    const double mean = sum / paths;
    const double sd = std::sqrt(std::max(sumsq / paths - mean * mean, 0.0));
    REQUIRE(std::abs(mean - 0.5) <= 3 * sd / std::sqrt(static_cast<double>(paths)));
  }

  // At t = 4, eps = 0.04 the law is close to uniform: KS statistic < 0.05.
  {
    const auto grid = make_time_grid(0, 4.0, 2e-3);
    std::vector<double> samples(paths);
    Rng seeds(77);
    for (int p = 0; p < paths; ++p) {
      const auto traj =
          integrate_reflected_sde(vf, d, make_vec1(0.5), 0.04, seeds.split(p).seed(), grid);
      samples[p] = traj.states.back()[0];
    }
    std::sort(samples.begin(), samples.end());
    double ks = 0;
    for (int i = 0; i < paths; ++i) {
      const double f = samples[i];  // uniform CDF on [0,1]
      ks = std::max(ks, std::abs(f - (i + 1.0) / paths));
      ks = std::max(ks, std::abs(f - static_cast<double>(i) / paths));
    }
    REQUIRE(ks < 0.05);
  }
}

TEST_CASE("observation synthesis") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({});
  const auto grid = make_time_grid(0, 0.2, 0.01);
  const auto traj = integrate_reflected(vf, d, make_vec1(0.7), DisturbancePath::zero(grid, 1));
  // Noiseless: ydot reproduces the (constant) state path.
  auto obs = synthesize_observation(traj, vf, DisturbancePath{{}, {}});
  for (const auto& y : obs.ydot) REQUIRE(y[0] == 0.7);
  // Nonzero noise is recovered exactly as ydot - h(x).
  auto nu = DisturbancePath::constant(grid, make_vec1(0.25));
  nu.samples[2] = make_vec1(-1.0);
  obs = synthesize_observation(traj, vf, nu);
  for (int k = 0; k < grid.steps; ++k)
    REQUIRE(obs.ydot[k][0] - 0.7 == Catch::Approx(nu.samples[k][0]).margin(1e-15));
  // Grid mismatch is rejected.
  const auto other = DisturbancePath::zero(make_time_grid(0, 0.2, 0.02), 1);
  REQUIRE_THROWS_AS(synthesize_observation(traj, vf, other), Error);
}

TEST_CASE("penalization control and curve convergence") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto grid = make_time_grid(0, 1.0, 1e-4);
  Rng rng(314);
  // Block-constant disturbance (so the path genuinely presses the walls) plus
  // one L2-concentrated burst per kappa scale (so the distance envelope
  // dist ~ kappa^{-1/2} is tight at every swept kappa).
  DisturbancePath w{grid, {}};
  const int block = 500;
  double wk = 0;
  for (int k = 0; k < grid.steps; ++k) {
    if (k % block == 0) wk = 1.5 * rng.normal();
    w.samples.push_back(make_vec1(wk));
  }
  const Vec x0 = make_vec1(0.6);
  w = with_wall_bursts(vf, d, x0, std::move(w), {0.1, 0.01, 1e-3, 1e-4}, 2.0);
  const auto ref = integrate_reflected(vf, d, x0, w);

  const std::vector<double> kappas = {10, 100, 1000, 10000};
  std::vector<double> sup_err, sup_dist, penal_integral, sup_norm;
  for (double kappa : kappas) {
    const auto pen = integrate_penalized(vf, d, x0, w, kappa);
    double e = 0, dist = 0, integral = 0, norm = 0;
    for (int k = 0; k <= grid.steps; ++k) {
      e = std::max(e, std::abs(pen.states[k][0] - ref.states[k][0]));
      dist = std::max(dist, d.dist_to_set(pen.states[k]));
      norm = std::max(norm, pen.states[k].norm());
      integral += grid.dt * kappa * d.dist_to_set(pen.states[k]);
    }
    sup_err.push_back(e);
    sup_dist.push_back(dist);
    penal_integral.push_back(integral);
    sup_norm.push_back(norm);
  }

  // (i) uniform bound on |x^kappa|.
  for (double nrm : sup_norm) REQUIRE(nrm <= d.diameter() + 1.0);
  // (ii) integral of |f_kappa| bounded uniformly in kappa.
  const double imax = *std::max_element(penal_integral.begin(), penal_integral.end());
  const double imin = *std::min_element(penal_integral.begin(), penal_integral.end());
  REQUIRE(imax <= 3.0 * imin + 0.5);
  // (iii) dist envelope: scaled by sqrt(kappa), constant within a factor 3.
  std::vector<double> scaled;
  for (size_t i = 0; i < kappas.size(); ++i)
    scaled.push_back(sup_dist[i] * std::sqrt(kappas[i]));
  REQUIRE(*std::max_element(scaled.begin(), scaled.end()) <=
          3.0 * *std::min_element(scaled.begin(), scaled.end()));
  // Curve convergence: sup error decreasing with log-log slope <= -0.20.
  for (size_t i = 1; i < sup_err.size(); ++i) REQUIRE(sup_err[i] < sup_err[i - 1]);
  REQUIRE(loglog_slope(kappas, sup_err) <= -0.25 + 0.05);
}

TEST_CASE("time regularity of reflected paths") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  const auto grid = make_time_grid(0, 1.0, 1e-3);
  Rng rng(2718);
  DisturbancePath w{grid, {}};
  for (int k = 0; k < grid.steps; ++k) w.samples.push_back(make_vec1(2.0 * rng.normal()));
  const auto traj = integrate_reflected(vf, d, make_vec1(0.4), w);
  double holder = 0;
  for (int a = 0; a <= grid.steps; ++a)
    for (int b = a + 1; b <= grid.steps; b += 7)
      holder = std::max(holder, std::abs(traj.states[b][0] - traj.states[a][0]) /
                                    std::sqrt(grid.time(b) - grid.time(a)));
  REQUIRE(std::isfinite(holder));
  REQUIRE(holder <= 2.0 * (1.5 + w.l2_norm_sq()));
}

TEST_CASE("reflected integrator self-convergence") {
  const auto d = Domain::interval(0, 1);
  const auto vf = field_1d({0.5, -1.0});
  Rng rng(555);
  const auto coarse = make_time_grid(0, 1.0, 2e-3);
  DisturbancePath w{coarse, {}};
  for (int k = 0; k < coarse.steps; ++k) w.samples.push_back(make_vec1(2.5 * rng.normal()));

  const auto refine = [&](const DisturbancePath& base) {
    DisturbancePath fine{TimeGrid{0.0, base.grid.dt / 2, 2 * base.grid.steps}, {}};
    for (const auto& s : base.samples) {
      fine.samples.push_back(s);
      fine.samples.push_back(s);
    }
    return fine;
  };
  const auto w2 = refine(w);
  const auto w4 = refine(w2);

  const auto t1 = integrate_reflected(vf, d, make_vec1(0.5), w);
  const auto t2 = integrate_reflected(vf, d, make_vec1(0.5), w2);
  const auto t4 = integrate_reflected(vf, d, make_vec1(0.5), w4);
  double e12 = 0, e24 = 0;
  for (int k = 0; k <= coarse.steps; ++k) {
    e12 = std::max(e12, std::abs(t1.states[k][0] - t2.states[2 * k][0]));
    e24 = std::max(e24, std::abs(t2.states[2 * k][0] - t4.states[4 * k][0]));
  }
  // O(sqrt(dt)) or better: halving dt should not grow the increment.
  REQUIRE(e24 <= e12 * 1.05 + 1e-12);
}
