#pragma once

#include <cmath>
#include <numbers>

namespace locsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wrap an angle to the canonical range [-pi, pi).
inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);  // lands in [-pi, +pi]
  return r == kPi ? -kPi : r;
}

/// Signed wrapped difference a - b, in [-pi, pi).
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

/// Absolute angular error, in [0, pi].
inline double angle_abs_diff(double a, double b) {
  return std::abs(angle_diff(a, b));
}

}  // namespace locsim
