// Experiment configuration: a single JSON document (key/value with nested
// tables) describing the domain, model coefficients, costs, grids, sweeps and
// tolerances. Parsing validates catalog names, sweep ordering and solver
// stability preconditions before any compute runs.
#pragma once

#include "mortensen/cost.hpp"
#include "mortensen/domain.hpp"
#include "mortensen/dp.hpp"
#include "mortensen/hjb.hpp"
#include "mortensen/integrators.hpp"
#include "mortensen/kalman.hpp"
#include "mortensen/paths.hpp"
#include "mortensen/rng.hpp"
#include "mortensen/vector_field.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mortensen {

using Json = nlohmann::json;

namespace detail {

inline Vec parse_vec(const Json& j) {
  Vec v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

inline Mat parse_mat(const Json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

}  // namespace detail

// Synthesis recipe for disturbance / observation-noise sample paths.
struct PathSpec {
  enum class Mode { Zero, Constant, Gaussian };
  Mode mode = Mode::Zero;
  Vec value;           // Constant
  double scale = 0;    // Gaussian standard deviation per component
  double block_dt = 0; // Gaussian resampling period; 0 = every step

  DisturbancePath realize(const TimeGrid& g, int dim, Rng rng) const {
    switch (mode) {
      case Mode::Zero:
        return DisturbancePath::zero(g, dim);
      case Mode::Constant:
        return DisturbancePath::constant(g, value);
      case Mode::Gaussian: {
        DisturbancePath w{g, {}};
        w.samples.reserve(g.steps);
        const int block = block_dt > 0 ? std::max(1, static_cast<int>(std::lround(block_dt / g.dt)))
                                       : 1;
        Vec s(dim);
        for (int k = 0; k < g.steps; ++k) {
          if (k % block == 0)
            for (int i = 0; i < dim; ++i) s[i] = scale * rng.normal();
          w.samples.push_back(s);
        }
        return w;
      }
    }
    throw Error("unreachable path mode");
  }
};

struct ObservationSpec {
  double dt = 1e-3;
  bool from_truth = false;   // twin synthesis vs explicit constant ydot
  Vec constant_value;        // !from_truth
  Vec truth_x0;              // from_truth
  PathSpec truth_disturbance;
  PathSpec noise;
};

struct ProbeSpec {
  enum class Kind { Zero, Linear, Quadratic, DistanceToPoint };
  Kind kind = Kind::Zero;
  std::vector<double> coeffs;  // Linear: c0 + c1 x (1D)
  Vec point;                   // Quadratic / DistanceToPoint center
  double weight = 1.0;

  std::function<double(const Vec&)> fn() const {
    switch (kind) {
      case Kind::Zero:
        return [](const Vec&) { return 0.0; };
      case Kind::Linear: {
        auto c = coeffs;
        return [c](const Vec& x) {
          double p = 0, xp = 1;
          for (double ck : c) {
            p += ck * xp;
            xp *= x[0];
          }
          return p;
        };
      }
      case Kind::Quadratic: {
        Vec pt = point;
        double w = weight;
        return [pt, w](const Vec& x) { return 0.5 * w * (x - pt).squaredNorm(); };
      }
      case Kind::DistanceToPoint: {
        Vec pt = point;
        double w = weight;
        return [pt, w](const Vec& x) { return w * (x - pt).norm(); };
      }
    }
    throw Error("unreachable probe kind");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Zero: return "zero";
      case Kind::Linear: return "linear";
      case Kind::Quadratic: return "quadratic";
      case Kind::DistanceToPoint: return "distance";
    }
    return "?";
  }
};

struct TrajectorySweepSpec {
  int count = 20;
  double dt = 2e-4;
  double disturbance_scale = 3.0;
  double disturbance_block_dt = 0.05;
  double t_end = 1.0;
};

struct ExperimentConfig {
  std::string kind;
  std::string name;
  uint64_t seed = 0;
  double t_end = 1.0;

  Domain domain = Domain::interval(0, 1);
  VectorFieldSpec vf;
  InitialCost psi;
  ObservationSpec observation;

  std::optional<DpOptions> dp;
  std::array<int, 2> dp_nodes{201, 1};
  std::optional<HjbScheme> hjb;
  std::array<int, 2> hjb_nodes{201, 1};
  int zakai_cells = 401;
  double zakai_dt = 2e-4;
  double duality_epsilon = 0.05;
  bool wall_check = false;
  bool compare_boundary_modes = false;

  std::vector<double> kappa_sweep;
  std::vector<double> epsilon_sweep;
  std::vector<ProbeSpec> probes;
  TrajectorySweepSpec trajectories;

  std::map<std::string, double> tolerances;

  double tolerance_or(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
  }

  // Builds the observation path (and the truth trajectory for twin runs).
  struct Scenario {
    ObservationPath obs;
    std::optional<Trajectory> truth;
  };

  Scenario realize_observation(uint64_t run_seed) const {
    const TimeGrid g = make_time_grid(0.0, t_end, observation.dt);
    Scenario s;
    if (!observation.from_truth) {
      s.obs = ObservationPath::constant(g, observation.constant_value);
      return s;
    }
    Rng rng(run_seed);
    const auto w = observation.truth_disturbance.realize(g, vf.r, rng.split(1));
    s.truth = integrate_reflected(vf, domain, observation.truth_x0, w);
    const auto nu = observation.noise.realize(g, vf.m, rng.split(2));
    s.obs = synthesize_observation(*s.truth, vf, nu);
    return s;
  }

  CostSpec make_cost(const ObservationPath& obs) const { return CostSpec{psi, obs}; }

  // Derives the linear model for the Kalman reference; requires a linear
  // scenario (drift empty or one linear term, constant sigma, linear h,
  // quadratic psi).
  LinearModel linear_model() const {
    LinearModel m;
    if (vf.drift_terms.empty()) {
      m.A = Mat::Zero(vf.n, vf.n);
    } else if (vf.drift_terms.size() == 1 &&
               vf.drift_terms[0].kind == DriftTerm::Kind::Linear) {
      m.A = vf.drift_terms[0].matrix;
    } else {
      throw Error("linear_model: drift is not linear");
    }
    m.Sigma = vf.sigma(0.0, Vec::Zero(vf.n));
    if (vf.obs_is_poly) throw Error("linear_model: observation is not linear");
    m.H = vf.obs_matrix;
    if (psi.kind != InitialCost::Kind::Quadratic)
      throw Error("linear_model: psi is not quadratic");
    m.P0 = psi.p0_inv.inverse();
    m.xhat0 = psi.center;
    return m;
  }

  void validate() const;
};

namespace detail {

inline Domain parse_domain(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "interval") return Domain::interval(j.at("a").get<double>(), j.at("b").get<double>());
  if (kind == "box") return Domain::box(parse_vec(j.at("lo")), parse_vec(j.at("hi")));
  if (kind == "ball") return Domain::ball(parse_vec(j.at("center")), j.at("radius").get<double>());
  throw Error("config: unknown domain kind '" + kind + "'");
}

inline DriftTerm parse_drift_term(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  DriftTerm t;
  if (kind == "zero") {
    t.kind = DriftTerm::Kind::Zero;
  } else if (kind == "constant") {
    t.kind = DriftTerm::Kind::Constant;
    t.constant = parse_vec(j.at("value"));
  } else if (kind == "linear") {
    t.kind = DriftTerm::Kind::Linear;
    t.matrix = parse_mat(j.at("A"));
  } else if (kind == "rotation") {
    t.kind = DriftTerm::Kind::Rotation2D;
    t.rate = j.at("rate").get<double>();
  } else if (kind == "radial_linear") {
    t.kind = DriftTerm::Kind::RadialLinear;
    t.rate = j.at("rate").get<double>();
    t.center = parse_vec(j.at("center"));
  } else if (kind == "radial_unit") {
    t.kind = DriftTerm::Kind::RadialUnit;
    t.rate = j.at("rate").get<double>();
    t.center = parse_vec(j.at("center"));
  } else if (kind == "poly1d") {
    t.kind = DriftTerm::Kind::Poly1D;
    t.coeffs = j.at("coeffs").get<std::vector<double>>();
  } else {
    throw Error("config: unknown drift kind '" + kind + "'");
  }
  return t;
}

inline PathSpec parse_path_spec(const Json& j) {
  PathSpec p;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "zero") {
    p.mode = PathSpec::Mode::Zero;
  } else if (mode == "constant") {
    p.mode = PathSpec::Mode::Constant;
    p.value = parse_vec(j.at("value"));
  } else if (mode == "gaussian") {
    p.mode = PathSpec::Mode::Gaussian;
    p.scale = j.at("scale").get<double>();
    p.block_dt = j.value("block_dt", 0.0);
  } else {
    throw Error("config: unknown path mode '" + mode + "'");
  }
  return p;
}

inline ProbeSpec parse_probe(const Json& j) {
  ProbeSpec p;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") {
    p.kind = ProbeSpec::Kind::Zero;
  } else if (kind == "linear") {
    p.kind = ProbeSpec::Kind::Linear;
    p.coeffs = j.at("coeffs").get<std::vector<double>>();
  } else if (kind == "quadratic") {
    p.kind = ProbeSpec::Kind::Quadratic;
    p.point = parse_vec(j.at("center"));
    if (j.contains("weight")) p.weight = j.at("weight").get<double>();
  } else if (kind == "distance") {
    p.kind = ProbeSpec::Kind::DistanceToPoint;
    p.point = parse_vec(j.at("point"));
    if (j.contains("weight")) p.weight = j.at("weight").get<double>();
  } else {
    throw Error("config: unknown probe kind '" + kind + "'");
  }
  return p;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  c.kind = j.at("kind").get<std::string>();
  c.name = j.value("name", c.kind);
  c.seed = j.value("seed", uint64_t{0});
  c.t_end = j.at("t_end").get<double>();
  c.domain = detail::parse_domain(j.at("domain"));

  const Json& model = j.at("model");
  c.vf.n = model.value("n", c.domain.dim());
  c.vf.r = model.value("r", c.vf.n);
  c.vf.m = model.value("m", 1);
  for (const auto& term : model.value("drift", Json::array()))
    c.vf.drift_terms.push_back(detail::parse_drift_term(term));
  const Json& sig = model.at("sigma");
  const std::string sig_kind = sig.at("kind").get<std::string>();
  if (sig_kind == "identity") {
    c.vf.sigma_identity = true;
    if (c.vf.r != c.vf.n) throw Error("config: sigma identity needs r == n");
  } else if (sig_kind == "constant") {
    c.vf.sigma_identity = false;
    c.vf.sigma_matrix = detail::parse_mat(sig.at("value"));
  } else if (sig_kind == "scalar") {
    c.vf.sigma_identity = false;
    c.vf.sigma_matrix = sig.at("value").get<double>() * Mat::Identity(c.vf.n, c.vf.r);
  } else {
    throw Error("config: unknown sigma kind '" + sig_kind + "'");
  }
  const Json& obs = model.at("observation");
  const std::string obs_kind = obs.at("kind").get<std::string>();
  if (obs_kind == "linear") {
    c.vf.obs_matrix = detail::parse_mat(obs.at("H"));
    c.vf.m = static_cast<int>(c.vf.obs_matrix.rows());
  } else if (obs_kind == "poly1d") {
    c.vf.obs_is_poly = true;
    c.vf.obs_poly = obs.at("coeffs").get<std::vector<double>>();
    c.vf.m = 1;
  } else {
    throw Error("config: unknown observation kind '" + obs_kind + "'");
  }

  const Json& psi = j.at("psi");
  const std::string psi_kind = psi.at("kind").get<std::string>();
  if (psi_kind == "quadratic") {
    c.psi = InitialCost::quadratic(detail::parse_vec(psi.at("center")),
                                   detail::parse_mat(psi.at("p0")));
  } else if (psi_kind == "constant") {
    c.psi = InitialCost::constant(psi.at("value").get<double>());
  } else if (psi_kind == "poly1d") {
    c.psi = InitialCost::poly1d(psi.at("coeffs").get<std::vector<double>>());
  } else {
    throw Error("config: unknown psi kind '" + psi_kind + "'");
  }

  const Json& op = j.at("observation_path");
  c.observation.dt = op.at("dt").get<double>();
  const std::string op_mode = op.at("mode").get<std::string>();
  if (op_mode == "constant") {
    c.observation.from_truth = false;
    c.observation.constant_value = detail::parse_vec(op.at("value"));
  } else if (op_mode == "twin") {
    c.observation.from_truth = true;
    c.observation.truth_x0 = detail::parse_vec(op.at("x0"));
    c.observation.truth_disturbance = detail::parse_path_spec(op.at("disturbance"));
    c.observation.noise = detail::parse_path_spec(op.at("noise"));
  } else {
    throw Error("config: unknown observation mode '" + op_mode + "'");
  }

  if (j.contains("dp")) {
    const Json& dp = j.at("dp");
    DpOptions o;
    o.dt = dp.value("dt", 0.01);
    o.controls_per_axis = dp.value("controls_per_axis", 21);
    o.omega_max = dp.value("omega_max", 0.0);
    o.margin_budget = dp.value("margin_budget", 3.0);
    o.max_refine = dp.value("max_refine", 2);
    c.dp = o;
    const auto nodes = dp.at("nodes").get<std::vector<int>>();
    c.dp_nodes = {nodes.at(0), nodes.size() > 1 ? nodes.at(1) : 1};
  }
  if (j.contains("hjb")) {
    const Json& hj = j.at("hjb");
    HjbScheme s;
    s.dt = hj.value("dt", 1e-3);
    s.cfl = hj.value("cfl", 0.95);
    const std::string flux = hj.value("flux", "lax-friedrichs");
    if (flux == "godunov") {
      s.flux = HjbScheme::Flux::Godunov1D;
    } else if (flux == "lax-friedrichs") {
      s.flux = HjbScheme::Flux::LaxFriedrichs;
    } else {
      throw Error("config: unknown hjb flux '" + flux + "'");
    }
    const std::string bnd = hj.value("boundary", "sub");
    if (bnd == "sub") {
      s.boundary = HjbScheme::BoundaryMode::Sub;
    } else if (bnd == "super") {
      s.boundary = HjbScheme::BoundaryMode::Super;
    } else {
      throw Error("config: unknown hjb boundary mode '" + bnd + "'");
    }
    c.hjb = s;
    const auto nodes = hj.at("nodes").get<std::vector<int>>();
    c.hjb_nodes = {nodes.at(0), nodes.size() > 1 ? nodes.at(1) : 1};
  }
  if (j.contains("zakai")) {
    c.zakai_cells = j.at("zakai").value("cells", 401);
    c.zakai_dt = j.at("zakai").value("dt", 2e-4);
    c.duality_epsilon = j.at("zakai").value("duality_epsilon", 0.05);
    c.wall_check = j.at("zakai").value("wall_check", false);
  }
  c.compare_boundary_modes = j.value("compare_boundary_modes", false);

  if (j.contains("sweeps")) {
    c.kappa_sweep = j.at("sweeps").value("kappa", std::vector<double>{});
    c.epsilon_sweep = j.at("sweeps").value("epsilon", std::vector<double>{});
  }
  for (const auto& p : j.value("probes", Json::array()))
    c.probes.push_back(detail::parse_probe(p));

  if (j.contains("trajectories")) {
    const Json& tr = j.at("trajectories");
    c.trajectories.count = tr.value("count", 20);
    c.trajectories.dt = tr.value("dt", 2e-4);
    c.trajectories.disturbance_scale = tr.value("scale", 3.0);
    c.trajectories.disturbance_block_dt = tr.value("block_dt", 0.05);
    c.trajectories.t_end = tr.value("t_end", 1.0);
  }
  for (const auto& [key, val] : j.value("tolerances", Json::object()).items())
    c.tolerances[key] = val.get<double>();

  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  Json j;
  in >> j;
  return parse_config(j);
}

inline void ExperimentConfig::validate() const {
  static const std::vector<std::string> kinds = {
      "twin",         "kappa-sweep",  "kalman-xcheck", "hjb-vs-dp",
      "laplace-sweep", "holder-check", "bellman-check"};
  bool known = false;
  for (const auto& k : kinds) known = known || k == kind;
  if (!known) throw Error("config: unknown kind '" + kind + "'");
  if (t_end <= 0) throw Error("config: t_end must be positive");
  if (observation.dt <= 0) throw Error("config: observation dt must be positive");

  if (kind == "kappa-sweep") {
    if (kappa_sweep.empty()) throw Error("config: kappa sweep list is empty");
    for (size_t i = 1; i < kappa_sweep.size(); ++i)
      if (kappa_sweep[i] <= kappa_sweep[i - 1])
        throw Error("config: kappa sweep must be strictly increasing");
  }
  if (kind == "laplace-sweep") {
    if (epsilon_sweep.empty()) throw Error("config: epsilon sweep list is empty");
    for (size_t i = 1; i < epsilon_sweep.size(); ++i)
      if (epsilon_sweep[i] >= epsilon_sweep[i - 1])
        throw Error("config: epsilon sweep must be strictly decreasing");
    if (probes.empty()) throw Error("config: laplace-sweep needs at least one probe");
  }

  // Solver stability preconditions that are checkable up front.
  if (kind == "laplace-sweep" || wall_check) {
    const double dx = (domain.bounding_hi()[0] - domain.bounding_lo()[0]) / zakai_cells;
    const double maxb =
        vf.max_drift_on_box(domain.bounding_lo(), domain.bounding_hi(), 0.0);
    if (zakai_dt * maxb / dx > 1.0)
      throw Error("config: zakai advective CFL violated (reduce zakai.dt)");
  }
  if (dp) {
    const double per = dp->dt / observation.dt;
    if (std::abs(per - std::lround(per)) > 1e-9 || per < 1 - 1e-9)
      throw Error("config: observation dt must divide dp.dt");
  }
  if (hjb) {
    const double per = t_end / hjb->dt;
    if (std::abs(per - std::lround(per)) > 1e-6)
      throw Error("config: hjb.dt must divide t_end");
  }
}

}  // namespace mortensen
