#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "locsim/circstats.hpp"
#include "locsim/scalar_filters.hpp"
#include "locsim/types.hpp"

namespace locsim {

/// Mixture state belief: circular heading, independent Gaussian axes.
/// Both position variances receive identical updates in the bearing/distance
/// flow, so sigma2_x == sigma2_y holds throughout it.
struct MixtureBelief {
  VonMises heading;
  KfState x;
  KfState y;
};

namespace detail {

inline double heading_process_kappa(double sigma_omega2, double dt) {
  // kappa_w = 1 / (sigma_omega^2 dt^2); zero rate noise gives the
  // noise-free +inf handled by vmf_time.
  return 1.0 / (sigma_omega2 * dt * dt);
}

// Shared by the mixture and the fully circular algorithm: the replacement
// heading belief reconstructed from a bearing/distance pair and the current
// position estimate with variance sigma2_pos per axis.
inline VonMises equivalent_orientation_from(double x_est, double y_est,
                                            double sigma2_pos, const Landmark& lm,
                                            double s_b, double s_r,
                                            const NoiseParams& n) {
  double dx = lm.x - x_est;
  double dy = lm.y - y_est;
  double range_est = std::hypot(dx, dy);
  if (range_est < 1e-12)
    throw geometry_error("equivalent_orientation: estimate coincides with the landmark");
  if (!(s_r > 0.0)) throw std::domain_error("equivalent_orientation: s_r must be > 0");
  if (!(n.kappa_b > 0.0) || !std::isfinite(n.kappa_b))
    throw std::domain_error("equivalent_orientation: kappa_b must be positive and finite");

  double mu = wrap_angle(std::atan2(dy, dx) - s_b);
  // Theorem-1 concentration with the nominal covariance 2 sigma2 I_2.
  double kappa1 = range_est * s_r / (2.0 * sigma2_pos);
  double a_prod = a_func(kappa1) * a_func(n.kappa_b);
  double kappa = n.equiv_kappa_paper_literal
                     ? a_prod
                     : a_inv(std::min(a_prod, 1.0 - 1e-15));
  return VonMises(mu, kappa);
}

}  // namespace detail

/// Time update: heading through the von Mises filter with the rate-noise
/// surrogate, each axis through the scalar Kalman filter with the moment-
/// matched increment v dt A(kappa) cos/sin(theta) and the conservative
/// variance (sigma_v^2 + v^2) dt^2.
inline MixtureBelief time_update(const MixtureBelief& b, const OdometryInput& u,
                                 const NoiseParams& n) {
  if (!(u.dt > 0.0)) throw std::domain_error("time_update: dt must be > 0");
  double kappa_t = b.heading.kappa;
  double theta_bar = b.heading.mu;

  MixtureBelief out;
  out.heading = vmf_time(b.heading, u.omega * u.dt,
                         detail::heading_process_kappa(n.sigma_omega2, u.dt));
  double incr = u.v * u.dt * a_func(kappa_t);
  double var_w = (n.sigma_v2 + u.v * u.v) * u.dt * u.dt;
  out.x = kf_time(b.x, incr * std::cos(theta_bar), var_w);
  out.y = kf_time(b.y, incr * std::sin(theta_bar), var_w);
  return out;
}

/// Observation update with direct state measurements.
inline MixtureBelief obsv_direct(const MixtureBelief& b, double o_theta,
                                 double o_x, double o_y, const NoiseParams& n) {
  MixtureBelief out;
  out.heading = vmf_obsv(b.heading, o_theta, n.kappa_nu_theta);
  out.x = kf_obsv(b.x, o_x, n.sigma2_ox);
  out.y = kf_obsv(b.y, o_y, n.sigma2_oy);
  return out;
}

/// The equivalent orientation measurement reconstructed from a
/// bearing/distance pair: mean is bearing-to-landmark minus the measured
/// bearing; concentration fuses the Theorem-1 term with the bearing noise.
inline VonMises equivalent_orientation(const MixtureBelief& b, const Landmark& lm,
                                       double s_b, double s_r,
                                       const NoiseParams& n) {
  return detail::equivalent_orientation_from(b.x.mean, b.y.mean, b.x.var, lm,
                                             s_b, s_r, n);
}

/// Observation update with a bearing/distance pair. The position axes are
/// updated from equivalent Cartesian observations built with the
/// pre-replacement heading belief; the heading is then REPLACED by the
/// equivalent orientation measurement (fusing it would double-count the
/// position estimate).
inline MixtureBelief obsv_bearing_distance(const MixtureBelief& b, const Landmark& lm,
                                           double s_b, double s_r,
                                           const NoiseParams& n) {
  VonMises replacement = equivalent_orientation(b, lm, s_b, s_r, n);

  double attenuation = a_func(b.heading.kappa) * a_func(n.kappa_b);
  double heading_obs = b.heading.mu + s_b;
  double o_x = lm.x - s_r * attenuation * std::cos(heading_obs);
  double o_y = lm.y - s_r * attenuation * std::sin(heading_obs);
  double var_o = n.sigma_r2 + s_r * s_r;  // upper bound absorbing heading spread

  MixtureBelief out;
  out.x = kf_obsv(b.x, o_x, var_o);
  out.y = kf_obsv(b.y, o_y, var_o);
  out.heading = replacement;
  return out;
}

/// Block-diagonal dominating matrix of a 2x2 symmetric positive-definite P:
/// P' = diag(P00 / c, P11 / (1 - c)) satisfies P' - P > 0 for any c in (0,1).
inline Eigen::Matrix2d pd_domination(const Eigen::Matrix2d& P, double c) {
  if (!(c > 0.0) || !(c < 1.0))
    throw std::domain_error("pd_domination: c must lie in (0, 1)");
  if (std::abs(P(0, 1) - P(1, 0)) > 1e-9 * (1.0 + P.cwiseAbs().maxCoeff()))
    throw std::domain_error("pd_domination: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(P);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("pd_domination: matrix must be positive definite");
  Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
  out(0, 0) = P(0, 0) / c;
  out(1, 1) = P(1, 1) / (1.0 - c);
  return out;
}

}  // namespace locsim
