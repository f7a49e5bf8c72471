#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace reeblab {

// Every model in the catalog lives in at most 6 ambient dimensions; shooting
// systems add a period unknown and two constraint rows. A fixed upper bound
// keeps the hot paths free of heap allocation.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  return a;
}

// Orthonormal basis (columns) of the orthogonal complement of p, built from a
// single Householder reflection.
inline Mat complement_basis(const Vec& p) {
  const int m = static_cast<int>(p.size());
  const double norm = p.norm();
  Vec w = p;
  w(0) += (p(0) >= 0.0 ? norm : -norm);
  const double ww = w.squaredNorm();
  Mat q = Mat::Identity(m, m);
  if (ww > 0.0) q.noalias() -= (2.0 / ww) * (w * w.transpose());
  return q.rightCols(m - 1);
}

inline Mat2 rotation2(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

}  // namespace reeblab
