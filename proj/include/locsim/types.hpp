#pragma once

#include <cmath>
#include <stdexcept>

#include "locsim/angles.hpp"

namespace locsim {

/// Unicycle odometry input over one step of length dt.
struct OdometryInput {
  double omega = 0.0;  // rad/s
  double v = 0.0;      // m/s
  double dt = 0.0;     // s
};

/// Process and measurement noise parameters. The direct-measurement model
/// uses (kappa_nu_theta, sigma2_ox, sigma2_oy); the bearing/distance model
/// uses (kappa_b, sigma_r2).
struct NoiseParams {
  double sigma_omega2 = 0.0;    // (rad/s)^2
  double sigma_v2 = 0.0;        // (m/s)^2
  double kappa_nu_theta = 0.0;  // heading observation concentration
  double sigma2_ox = 0.0;       // m^2
  double sigma2_oy = 0.0;       // m^2
  double kappa_b = 0.0;         // bearing observation concentration
  double sigma_r2 = 0.0;        // m^2, distance observation variance

  // Compatibility switch: reproduce the printed equivalent-orientation
  // concentration A(kappa_1) A(kappa_b) verbatim instead of the convolution
  // rule A^-1(A(kappa_1) A(kappa_b)).
  bool equiv_kappa_paper_literal = false;
};

/// Known landmark position.
struct Landmark {
  double x = 0.0;  // m
  double y = 0.0;  // m
};

/// Ground-truth planar pose. theta is canonicalized on construction.
struct Pose2 {
  double theta = 0.0;
  double x = 0.0;
  double y = 0.0;

  Pose2() = default;
  Pose2(double heading, double px, double py) {
    if (!std::isfinite(heading) || !std::isfinite(px) || !std::isfinite(py))
      throw std::domain_error("Pose2: fields must be finite");
    theta = wrap_angle(heading);
    x = px;
    y = py;
  }
};

/// One bearing/distance measurement of a landmark.
struct BearingRange {
  double bearing = 0.0;  // rad, relative to the agent heading
  double range = 0.0;    // m
};

}  // namespace locsim
