// Model coefficient catalog: drift b(t,x), diffusion sigma(t,x) and
// observation map h(t,x), each assembled from named built-in terms with
// stored Lipschitz constants.
#pragma once

#include "mortensen/core.hpp"

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace mortensen {

// One additive drift term. Drift fields are sums of terms so that e.g.
// "rigid rotation + inward pull" stays a catalog object.
struct DriftTerm {
  enum class Kind { Zero, Constant, Linear, Rotation2D, RadialLinear, RadialUnit, Poly1D };
  Kind kind = Kind::Zero;
  Vec constant;                 // Constant
  Mat matrix;                   // Linear: A x
  double rate = 0;              // Rotation2D angular rate, Radial* strength
  Vec center;                   // Radial* center
  std::vector<double> coeffs;   // Poly1D: sum c_k x^k (state dim 1)

  Vec eval(const Vec& x) const {
    switch (kind) {
      case Kind::Zero:
        return Vec::Zero(x.size());
      case Kind::Constant:
        return constant;
      case Kind::Linear:
        return matrix * x;
      case Kind::Rotation2D: {
        if (x.size() != 2) throw Error("rotation drift needs dimension 2");
        return make_vec2(-rate * x[1], rate * x[0]);
      }
      case Kind::RadialLinear:
        return rate * (x - center);
      case Kind::RadialUnit: {
        Vec d = x - center;
        const double r = d.norm();
        // Not Lipschitz at the center; catalog use keeps trajectories away from it.
        if (r < 1e-12) return Vec::Zero(x.size());
        return (rate / r) * d;
      }
      case Kind::Poly1D: {
        if (x.size() != 1) throw Error("poly1d drift needs dimension 1");
        double p = 0, xp = 1;
        for (double c : coeffs) {
          p += c * xp;
          xp *= x[0];
        }
        return make_vec1(p);
      }
    }
    throw Error("unreachable drift kind");
  }

  // Lipschitz constant valid for |x| <= radius.
  double lipschitz_on(double radius) const {
    switch (kind) {
      case Kind::Zero:
      case Kind::Constant:
        return 0.0;
      case Kind::Linear:
        return matrix.norm();
      case Kind::Rotation2D:
        return std::abs(rate);
      case Kind::RadialLinear:
        return std::abs(rate);
      case Kind::RadialUnit:
        return 2.0 * std::abs(rate);  // away from the center
      case Kind::Poly1D: {
        double l = 0, xp = 1;
        for (size_t k = 1; k < coeffs.size(); ++k) {
          l += static_cast<double>(k) * std::abs(coeffs[k]) * xp;
          xp *= radius;
        }
        return l;
      }
    }
    return 0.0;
  }
};

struct VectorFieldSpec {
  int n = 1;  // state dimension
  int r = 1;  // disturbance dimension
  int m = 1;  // observation dimension

  std::vector<DriftTerm> drift_terms;
  Mat sigma_matrix;            // n x r, constant in (t,x)
  bool sigma_identity = true;  // sigma == Id (n == r); required by the PDE solvers

  Mat obs_matrix;                    // linear observation H (m x n)
  std::vector<double> obs_poly;      // or 1D polynomial observation
  bool obs_is_poly = false;

  Vec drift(double /*t*/, const Vec& x) const {
    Vec b = Vec::Zero(x.size());
    for (const auto& term : drift_terms) b += term.eval(x);
    return b;
  }

  Mat sigma(double /*t*/, const Vec& /*x*/) const {
    if (sigma_identity) return Mat::Identity(n, r);
    return sigma_matrix;
  }

  Vec observe(double /*t*/, const Vec& x) const {
    if (obs_is_poly) {
      if (x.size() != 1) throw Error("poly1d observation needs dimension 1");
      double p = 0, xp = 1;
      for (double c : obs_poly) {
        p += c * xp;
        xp *= x[0];
      }
      return make_vec1(p);
    }
    return obs_matrix * x;
  }

  double drift_lipschitz_on(double radius) const {
    double l = 0;
    for (const auto& term : drift_terms) l += term.lipschitz_on(radius);
    return l;
  }

  double obs_lipschitz_on(double radius) const {
    if (!obs_is_poly) return obs_matrix.norm();
    double l = 0, xp = 1;
    for (size_t k = 1; k < obs_poly.size(); ++k) {
      l += static_cast<double>(k) * std::abs(obs_poly[k]) * xp;
      xp *= radius;
    }
    return l;
  }

  // Smallest eigenvalue of sigma^T sigma (uniform invertibility constant).
  double gamma0() const {
    if (sigma_identity) return 1.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(sigma_matrix.transpose() * sigma_matrix));
    return es.eigenvalues().minCoeff();
  }

  double max_drift_on_box(const Vec& lo, const Vec& hi, double t, int samples_per_axis = 17) const {
    double best = 0;
    const int dim = static_cast<int>(lo.size());
    const int total = static_cast<int>(std::pow(samples_per_axis, dim));
    for (int s = 0; s < total; ++s) {
      int rem = s;
      Vec x(dim);
      for (int a = 0; a < dim; ++a) {
        const int ia = rem % samples_per_axis;
        rem /= samples_per_axis;
        x[a] = lo[a] + (hi[a] - lo[a]) * ia / (samples_per_axis - 1.0);
      }
      best = std::max(best, drift(t, x).norm());
    }
    return best;
  }
};

inline VectorFieldSpec make_linear_model_field(const Mat& A, const Mat& Sigma, const Mat& H) {
  VectorFieldSpec vf;
  vf.n = static_cast<int>(A.rows());
  vf.r = static_cast<int>(Sigma.cols());
  vf.m = static_cast<int>(H.rows());
  DriftTerm t;
  t.kind = DriftTerm::Kind::Linear;
  t.matrix = A;
  vf.drift_terms.push_back(std::move(t));
  vf.sigma_matrix = Sigma;
  vf.sigma_identity = Sigma.rows() == Sigma.cols() && Sigma.isIdentity(1e-15);
  vf.obs_matrix = H;
  return vf;
}

}  // namespace mortensen
