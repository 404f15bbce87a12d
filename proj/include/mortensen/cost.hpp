// Estimation cost data: initial cost psi from a small catalog and the running
// cost l(s,x,w) = |w|^2/2 + |ydot(s) - h(s,x)|^2/2 bound to an observation path.
#pragma once

#include "mortensen/core.hpp"
#include "mortensen/paths.hpp"
#include "mortensen/vector_field.hpp"

#include <cmath>
#include <vector>

namespace mortensen {

struct InitialCost {
  enum class Kind { Quadratic, Constant, Poly1D };
  Kind kind = Kind::Constant;
  Vec center;                  // Quadratic: (x - center)^T P0^{-1} (x - center) / 2
  Mat p0_inv;
  double constant_value = 0;
  std::vector<double> coeffs;  // Poly1D

  static InitialCost quadratic(const Vec& center, const Mat& p0) {
    InitialCost c;
    c.kind = Kind::Quadratic;
    c.center = center;
    c.p0_inv = p0.inverse();
    return c;
  }

  static InitialCost constant(double v) {
    InitialCost c;
    c.kind = Kind::Constant;
    c.constant_value = v;
    return c;
  }

  static InitialCost poly1d(std::vector<double> coeffs) {
    InitialCost c;
    c.kind = Kind::Poly1D;
    c.coeffs = std::move(coeffs);
    return c;
  }

  double eval(const Vec& x) const {
    switch (kind) {
      case Kind::Quadratic: {
        const Vec d = x - center;
        return 0.5 * d.dot(p0_inv * d);
      }
      case Kind::Constant:
        return constant_value;
      case Kind::Poly1D: {
        double p = 0, xp = 1;
        for (double c : coeffs) {
          p += c * xp;
          xp *= x[0];
        }
        return p;
      }
    }
    throw Error("unreachable initial cost kind");
  }

  double lipschitz_on(double radius) const {
    switch (kind) {
      case Kind::Quadratic:
        return p0_inv.norm() * (2 * radius + center.norm());
      case Kind::Constant:
        return 0.0;
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

struct CostSpec {
  InitialCost psi;
  ObservationPath obs;

  double horizon() const { return obs.grid.t_end(); }

  double misfit(const VectorFieldSpec& vf, double t, const Vec& x) const {
    return 0.5 * (obs.at_time(t) - vf.observe(t, x)).squaredNorm();
  }

  double running(const VectorFieldSpec& vf, double t, const Vec& x, const Vec& w) const {
    return 0.5 * w.squaredNorm() + misfit(vf, t, x);
  }
};

}  // namespace mortensen
