#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "locsim/angles.hpp"
#include "locsim/errors.hpp"
#include "locsim/types.hpp"

namespace locsim {

/// SE(2) element stored as rotation block + translation. The rotation is
/// re-orthogonalized through its angle whenever it drifts.
struct Se2 {
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
  Eigen::Vector2d t = Eigen::Vector2d::Zero();

  static Se2 identity() { return Se2{}; }

  static Se2 from_pose(double theta, double x, double y) {
    Se2 g;
    double c = std::cos(theta), s = std::sin(theta);
    g.R << c, -s, s, c;
    g.t << x, y;
    return g;
  }

  double theta() const { return std::atan2(R(1, 0), R(0, 0)); }

  Se2 operator*(const Se2& o) const {
    Se2 g;
    g.R = R * o.R;
    g.t = R * o.t + t;
    return g;
  }

  Se2 inverse() const {
    Se2 g;
    g.R = R.transpose();
    g.t = -(R.transpose() * t);
    return g;
  }

  double orthogonality_residual() const {
    return (R.transpose() * R - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
  }

  void renormalize() {
    if (orthogonality_residual() > 1e-12) *this = from_pose(theta(), t.x(), t.y());
  }
};

namespace detail {

// V(theta) = [a -b; b a] with a = sin(theta)/theta, b = (1-cos(theta))/theta;
// series below |theta| ~ 1e-4 where the direct quotients lose digits.
inline void se2_v_coeffs(double theta, double& a, double& b) {
  if (std::abs(theta) < 1e-4) {
    double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = theta * (0.5 - t2 / 24.0 + t2 * t2 / 720.0);
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta;
  }
}

}  // namespace detail

/// Exponential map of se(2); v = (theta, rho_x, rho_y).
inline Se2 se2_exp(const Eigen::Vector3d& v) {
  double theta = v(0);
  double a, b;
  detail::se2_v_coeffs(theta, a, b);
  Se2 g = Se2::from_pose(theta, 0.0, 0.0);
  Eigen::Matrix2d V;
  V << a, -b, b, a;
  g.t = V * v.tail<2>();
  return g;
}

/// Logarithm map; inverse of se2_exp away from nothing in particular
/// (theta = +-pi is handled by the same closed form).
inline Eigen::Vector3d se2_log(const Se2& g) {
  double theta = g.theta();
  double a, b;
  detail::se2_v_coeffs(theta, a, b);
  double n2 = a * a + b * b;
  Eigen::Matrix2d Vinv;
  Vinv << a, b, -b, a;
  Vinv /= n2;
  Eigen::Vector3d v;
  v(0) = theta;
  v.tail<2>() = Vinv * g.t;
  return v;
}

/// Adjoint of a group element, twist order (theta, x, y):
/// Ad_g (w, u) = (w, R u + w (t_y, -t_x)).
inline Eigen::Matrix3d se2_adjoint(const Se2& g) {
  Eigen::Matrix3d ad = Eigen::Matrix3d::Identity();
  ad.block<2, 2>(1, 1) = g.R;
  ad(1, 0) = g.t.y();
  ad(2, 0) = -g.t.x();
  return ad;
}

/// ad operator of a twist; [xi1, xi2] = (0, w1 J u2 - w2 J u1).
inline Eigen::Matrix3d se2_ad(const Eigen::Vector3d& xi) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(1, 0) = xi(2);
  m(2, 0) = -xi(1);
  m(1, 2) = -xi(0);
  m(2, 1) = xi(0);
  return m;
}

/// Right Jacobian of SE(2) by the (rapidly converging) series
/// J_r(xi) = sum_k (-ad_xi)^k / (k+1)!.
inline Eigen::Matrix3d se2_right_jacobian(const Eigen::Vector3d& xi) {
  Eigen::Matrix3d jr = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d term = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d neg_ad = -se2_ad(xi);
  double fact = 1.0;
  for (int k = 1; k <= 12; ++k) {
    term = term * neg_ad;
    fact *= static_cast<double>(k + 1);
    Eigen::Matrix3d add = term / fact;
    jr += add;
    if (add.cwiseAbs().maxCoeff() < 1e-17) break;
  }
  return jr;
}

/// Symmetrize and floor the eigenvalues at 1e-12.
inline void make_pd(Eigen::Matrix3d& P) {
  P = 0.5 * (P + P.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(P);
  if (es.eigenvalues().minCoeff() >= 1e-12) return;
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(1e-12);
  P = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  P = 0.5 * (P + P.transpose()).eval();
}

/// EKF belief over (theta, x, y).
struct EkfBelief {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
};

/// LG-EKF belief: mean on SE(2), covariance on the algebra with the
/// factorization S = S_hat exp(eps).
struct SE2Belief {
  Se2 mean;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
};

namespace detail {

// Euclidean measurement Jacobian of (bearing, range) w.r.t. (theta, x, y),
// evaluated at the estimate; shared by both baselines.
inline void bearing_range_model(double theta, double x, double y, const Landmark& lm,
                                double& h_b, double& h_r,
                                Eigen::Matrix<double, 2, 3>& H) {
  double dx = lm.x - x, dy = lm.y - y;
  double q = dx * dx + dy * dy;
  if (q < 1e-18)
    throw geometry_error("bearing_range_model: estimate coincides with the landmark");
  double r = std::sqrt(q);
  h_b = wrap_angle(std::atan2(dy, dx) - theta);
  h_r = r;
  H << -1.0, dy / q, -dx / q,
        0.0, -dx / r, -dy / r;
}

inline Eigen::Matrix2d measurement_noise(const NoiseParams& n) {
  Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
  R(0, 0) = n.kappa_b > 0.0 ? 1.0 / n.kappa_b : 0.0;  // vM(0,kappa_b) ~ N(0,1/kappa_b)
  R(1, 1) = n.sigma_r2;
  return R;
}

}  // namespace detail

/// One EKF step: predict with the unicycle model linearized at the estimate,
/// then (optionally) update with the bearing/range measurement. The bearing
/// innovation is wrapped.
inline EkfBelief ekf_step(const EkfBelief& b, const OdometryInput& u,
                          const std::optional<BearingRange>& obs, const Landmark& lm,
                          const NoiseParams& n) {
  if (!(u.dt > 0.0)) throw std::domain_error("ekf_step: dt must be > 0");
  double theta = b.mean(0);
  double c = std::cos(theta), s = std::sin(theta);

  EkfBelief out;
  out.mean << wrap_angle(theta + u.omega * u.dt),
              b.mean(1) + u.v * u.dt * c,
              b.mean(2) + u.v * u.dt * s;

  Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
  F(1, 0) = -u.v * u.dt * s;
  F(2, 0) = u.v * u.dt * c;
  Eigen::Matrix<double, 3, 2> G;
  G << u.dt, 0.0,
       0.0, u.dt * c,
       0.0, u.dt * s;
  Eigen::Matrix2d Qu = Eigen::Matrix2d::Zero();
  Qu(0, 0) = n.sigma_omega2;
  Qu(1, 1) = n.sigma_v2;
  out.cov = F * b.cov * F.transpose() + G * Qu * G.transpose();
  make_pd(out.cov);

  if (obs) {
    double h_b, h_r;
    Eigen::Matrix<double, 2, 3> H;
    detail::bearing_range_model(out.mean(0), out.mean(1), out.mean(2), lm, h_b, h_r, H);
    Eigen::Matrix2d S = H * out.cov * H.transpose() + detail::measurement_noise(n);
    Eigen::FullPivLU<Eigen::Matrix2d> lu(S);
    if (!lu.isInvertible())
      throw numerical_error("ekf_step: singular innovation covariance");
    Eigen::Matrix<double, 3, 2> K = out.cov * H.transpose() * lu.inverse();
    Eigen::Vector2d innov(angle_diff(obs->bearing, h_b), obs->range - h_r);
    out.mean += K * innov;
    out.mean(0) = wrap_angle(out.mean(0));
    Eigen::Matrix3d IKH = Eigen::Matrix3d::Identity() - K * H;
    out.cov = IKH * out.cov * IKH.transpose() +
              K * detail::measurement_noise(n) * K.transpose();
    make_pd(out.cov);
  }
  return out;
}

/// One LG-EKF step. Prediction composes the mean with exp of the body twist
/// (omega dt, v dt, 0); the covariance propagates with F = Ad(exp(u))^-1 and
/// the right-Jacobian-mapped process noise. The update lifts the Kalman
/// correction back to the group: mean <- mean * exp(K innovation).
inline SE2Belief lgekf_step(const SE2Belief& b, const OdometryInput& u,
                            const std::optional<BearingRange>& obs, const Landmark& lm,
                            const NoiseParams& n) {
  if (!(u.dt > 0.0)) throw std::domain_error("lgekf_step: dt must be > 0");
  Eigen::Vector3d twist(u.omega * u.dt, u.v * u.dt, 0.0);
  Se2 U = se2_exp(twist);

  SE2Belief out;
  out.mean = b.mean * U;
  out.mean.renormalize();

  Eigen::Matrix3d F = se2_adjoint(U.inverse());
  Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();
  Q(0, 0) = n.sigma_omega2 * u.dt * u.dt;
  Q(1, 1) = n.sigma_v2 * u.dt * u.dt;
  Eigen::Matrix3d Jr = se2_right_jacobian(twist);
  out.cov = F * b.cov * F.transpose() + Jr * Q * Jr.transpose();
  make_pd(out.cov);

  if (obs) {
    double h_b, h_r;
    Eigen::Matrix<double, 2, 3> He;
    detail::bearing_range_model(out.mean.theta(), out.mean.t.x(), out.mean.t.y(),
                                lm, h_b, h_r, He);
    // Algebra perturbation to pose perturbation: d(theta,x,y) = blkdiag(1, R) eps.
    Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
    T.block<2, 2>(1, 1) = out.mean.R;
    Eigen::Matrix<double, 2, 3> H = He * T;
    Eigen::Matrix2d S = H * out.cov * H.transpose() + detail::measurement_noise(n);
    Eigen::FullPivLU<Eigen::Matrix2d> lu(S);
    if (!lu.isInvertible())
      throw numerical_error("lgekf_step: singular innovation covariance");
    Eigen::Matrix<double, 3, 2> K = out.cov * H.transpose() * lu.inverse();
    Eigen::Vector2d innov(angle_diff(obs->bearing, h_b), obs->range - h_r);
    Eigen::Vector3d delta = K * innov;
    out.mean = out.mean * se2_exp(delta);
    out.mean.renormalize();
    Eigen::Matrix3d IKH = Eigen::Matrix3d::Identity() - K * H;
    out.cov = IKH * out.cov * IKH.transpose() +
              K * detail::measurement_noise(n) * K.transpose();
    make_pd(out.cov);
  }
  return out;
}

}  // namespace locsim
