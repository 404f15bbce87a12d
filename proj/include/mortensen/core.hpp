// Small shared types and helpers: fixed-capacity vectors for low-dimensional
// state spaces, CSV number formatting, and the library error type.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace mortensen {

// State, disturbance and observation dimensions are small (grid solvers are
// limited to n <= 2); fixed-capacity Eigen types keep hot loops allocation-free.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Full round-trip precision for CSV output (17 significant digits).
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline Vec make_vec1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

inline Vec make_vec2(double x, double y) {
  Vec v(2);
  v[0] = x;
  v[1] = y;
  return v;
}

// Least-squares slope of log(y) against log(x); used by the rate checks.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw Error("loglog_slope: nonpositive sample");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) throw Error("loglog_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace mortensen
