// Closed-form reference for the linear unconstrained case: Riccati
// integration, the Kalman-Bucy estimator driven by a sampled observation
// derivative, and the quadratic cost-to-come they induce.
#pragma once

#include "mortensen/core.hpp"
#include "mortensen/cost.hpp"
#include "mortensen/paths.hpp"

#include <cmath>
#include <vector>

namespace mortensen {

struct LinearModel {
  Mat A;       // n x n
  Mat Sigma;   // n x r
  Mat H;       // m x n
  Mat P0;      // n x n symmetric positive-definite
  Vec xhat0;   // n

  int n() const { return static_cast<int>(A.rows()); }

  void validate() const {
    if (A.rows() != A.cols()) throw Error("LinearModel: A must be square");
    if ((P0 - P0.transpose()).norm() > 1e-12 * (1 + P0.norm()))
      throw Error("LinearModel: P0 must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(P0);
    if (es.eigenvalues().minCoeff() <= 0) throw Error("LinearModel: P0 must be positive-definite");
  }
};

struct RiccatiPath {
  TimeGrid grid;
  std::vector<Mat> P;  // size grid.nodes()

  const Mat& at(int k) const { return P[k]; }
};

namespace detail {
// dP/dt = A P + P A^T + Sigma Sigma^T - P H^T H P. The quadratic term is
// written in the dimension-consistent form for H in R^{m x n}.
inline Mat riccati_rhs(const LinearModel& m, const Mat& P) {
  return m.A * P + P * m.A.transpose() + m.Sigma * m.Sigma.transpose() -
         P * m.H.transpose() * m.H * P;
}
}  // namespace detail

// Classical fourth-order one-step integration, symmetrized each step.
inline RiccatiPath riccati_solve(const LinearModel& model, double t_end, double dt) {
  if (dt <= 0) throw Error("riccati_solve: nonpositive dt");
  model.validate();
  RiccatiPath out;
  out.grid = make_time_grid(0.0, t_end, dt);
  out.P.reserve(out.grid.nodes());
  Mat P = model.P0;
  out.P.push_back(P);
  for (int k = 0; k < out.grid.steps; ++k) {
    const Mat k1 = detail::riccati_rhs(model, P);
    const Mat k2 = detail::riccati_rhs(model, P + 0.5 * dt * k1);
    const Mat k3 = detail::riccati_rhs(model, P + 0.5 * dt * k2);
    const Mat k4 = detail::riccati_rhs(model, P + dt * k3);
    P += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    P = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    if (es.eigenvalues().minCoeff() <= 0)
      throw Error("riccati_solve: lost positive-definiteness at step " + std::to_string(k + 1));
    out.P.push_back(P);
  }
  return out;
}

struct KalmanPath {
  TimeGrid grid;
  std::vector<Vec> xhat;
  RiccatiPath riccati;

  const Vec& at(int k) const { return xhat[k]; }
};

// dxhat/dt = A xhat + P(t) H^T (ydot - H xhat), xhat(0) = xhat0. The sampled
// ydot is piecewise constant, so RK4 stages freeze it per step.
inline KalmanPath kalman_estimate(const LinearModel& model, const ObservationPath& obs,
                                  double dt) {
  if (dt <= 0) throw Error("kalman_estimate: nonpositive dt");
  const double t_end = obs.grid.t_end();
  const double ratio = obs.grid.dt / dt;
  if (std::abs(ratio - std::lround(ratio)) > 1e-9)
    throw Error("kalman_estimate: dt must divide the observation grid spacing");
  KalmanPath out;
  out.riccati = riccati_solve(model, t_end, dt);
  out.grid = out.riccati.grid;
  out.xhat.reserve(out.grid.nodes());
  Vec x = model.xhat0;
  out.xhat.push_back(x);
  const auto rhs = [&](double t, const Vec& xi, const Vec& ydot, const Mat& P) -> Vec {
    return model.A * xi + P * model.H.transpose() * (ydot - model.H * xi);
  };
  for (int k = 0; k < out.grid.steps; ++k) {
    const double t = out.grid.time(k);
    const Vec& ydot = obs.at_time(t);
    const Mat& Pk = out.riccati.P[k];
    const Mat& Pk1 = out.riccati.P[k + 1];
    const Mat Pmid = 0.5 * (Pk + Pk1);
    const Vec k1 = rhs(t, x, ydot, Pk);
    const Vec k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1, ydot, Pmid);
    const Vec k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2, ydot, Pmid);
    const Vec k4 = rhs(t + dt, x + dt * k3, ydot, Pk1);
    x += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    out.xhat.push_back(x);
  }
  return out;
}

// Precomputed reference bundle: estimator path, covariance path and the
// cumulative innovation integral, so the cost-to-come is a table lookup.
class KalmanReference {
 public:
  KalmanReference(const LinearModel& model, const ObservationPath& obs, double dt)
      : model_(model), path_(kalman_estimate(model, obs, dt)) {
    // Trapezoid on the integration grid of |ydot - H xhat|^2 / 2.
    misfit_cum_.resize(path_.grid.nodes(), 0.0);
    double acc = 0;
    double prev = integrand(0, obs);
    for (int k = 1; k < path_.grid.nodes(); ++k) {
      const double cur = integrand(k, obs);
      acc += 0.5 * (prev + cur) * path_.grid.dt;
      misfit_cum_[k] = acc;
      prev = cur;
    }
  }

  const KalmanPath& path() const { return path_; }
  const TimeGrid& grid() const { return path_.grid; }

  Vec estimate(double t) const { return path_.xhat[node_index(t)]; }
  Mat covariance(double t) const { return path_.riccati.P[node_index(t)]; }

  // (x - xhat(t))^T P(t)^{-1} (x - xhat(t)) / 2 + int_0^t |ydot - H xhat|^2 / 2.
  double cost_to_come(double t, const Vec& x) const {
    const int k = node_index(t);
    const Mat& P = path_.riccati.P[k];
    Eigen::FullPivLU<Mat> lu(P);
    if (!lu.isInvertible()) throw Error("kalman_cost_to_come: singular covariance");
    const Vec d = x - path_.xhat[k];
    return 0.5 * d.dot(lu.solve(d)) + misfit_cum_[k];
  }

 private:
  int node_index(double t) const {
    const int k = static_cast<int>(std::lround((t - path_.grid.t0) / path_.grid.dt));
    if (k < 0 || k >= path_.grid.nodes())
      throw Error("KalmanReference: time outside the solved horizon");
    return k;
  }

  double integrand(int k, const ObservationPath& obs) const {
    const double t = std::min(path_.grid.time(k), obs.grid.t_end() - 0.5 * obs.grid.dt);
    const Vec innov = obs.at_time(t) - model_.H * path_.xhat[k];
    return 0.5 * innov.squaredNorm();
  }

  LinearModel model_;
  KalmanPath path_;
  std::vector<double> misfit_cum_;
};

inline double kalman_cost_to_come(const LinearModel& model, const ObservationPath& obs, double t,
                                  const Vec& x, double dt) {
  return KalmanReference(model, obs, dt).cost_to_come(t, x);
}

}  // namespace mortensen
