#pragma once

// Flat-at-the-ends smooth steps and bumps shared by the disc maps and the trap.

#include <cmath>

namespace reeblab::detail {

// exp(-1/u) for u > 0, else 0, and its derivative.
inline double flat(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
inline double flat_derivative(double u) { return u > 0.0 ? std::exp(-1.0 / u) / (u * u) : 0.0; }

// 0 for u <= 0, 1 for u >= 1.
inline double smooth_step(double u) {
  const double a = flat(u);
  const double b = flat(1.0 - u);
  return a / (a + b);
}

inline double smooth_step_derivative(double u) {
  const double a = flat(u);
  const double b = flat(1.0 - u);
  const double s = a + b;
  return (flat_derivative(u) * b + a * flat_derivative(1.0 - u)) / (s * s);
}

// exp(-x^2 / (1 - x^2)) on |x| < 1, else 0; equals 1 - x^2 + O(x^4) at 0.
inline double bump(double x) {
  const double x2 = x * x;
  return x2 < 1.0 ? std::exp(-x2 / (1.0 - x2)) : 0.0;
}

inline double bump_derivative(double x) {
  const double x2 = x * x;
  if (x2 >= 1.0) return 0.0;
  const double d = 1.0 - x2;
  return -2.0 * x / (d * d) * std::exp(-x2 / d);
}

}  // namespace reeblab::detail
