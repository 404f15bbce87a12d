// Shared scenario builders for the test suites.
#pragma once

#include "mortensen/cost.hpp"
#include "mortensen/vector_field.hpp"

#include <vector>

namespace mortensen::testing {

// 1D field with polynomial drift, sigma == Id and observation h(x) = hx * x.
inline VectorFieldSpec field_1d(std::vector<double> drift_poly, double hx = 1.0) {
  VectorFieldSpec vf;
  vf.n = vf.r = vf.m = 1;
  if (!drift_poly.empty()) {
    DriftTerm t;
    t.kind = DriftTerm::Kind::Poly1D;
    t.coeffs = std::move(drift_poly);
    vf.drift_terms.push_back(t);
  }
  vf.obs_matrix = hx * Mat::Identity(1, 1);
  return vf;
}

inline CostSpec quadratic_cost(double center, double p0, const ObservationPath& obs) {
  return CostSpec{InitialCost::quadratic(make_vec1(center), p0 * Mat::Identity(1, 1)), obs};
}

}  // namespace mortensen::testing
