#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>

#include "locsim/baselines.hpp"
#include "locsim/circstats.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace locsim;

namespace {

NoiseParams fig_noise() {
  NoiseParams n;
  n.sigma_omega2 = 10.0;
  n.sigma_v2 = 1e-4;
  n.kappa_b = 500.0;
  n.sigma_r2 = 1e-4;
  return n;
}

// RK4 integration of M' = M * hat(xi) over t in [0, 1] on homogeneous 3x3
// matrices: the independent oracle for the closed-form exponential.
Eigen::Matrix3d integrate_twist(const Eigen::Vector3d& xi, int steps) {
  Eigen::Matrix3d hat = Eigen::Matrix3d::Zero();
  hat(0, 1) = -xi(0);
  hat(1, 0) = xi(0);
  hat(0, 2) = xi(1);
  hat(1, 2) = xi(2);
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    Eigen::Matrix3d k1 = M * hat;
    Eigen::Matrix3d k2 = (M + 0.5 * h * k1) * hat;
    Eigen::Matrix3d k3 = (M + 0.5 * h * k2) * hat;
    Eigen::Matrix3d k4 = (M + h * k3) * hat;
    M += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return M;
}

}  // namespace

TEST_CASE("se2 exponential and logarithm") {
  SECTION("exp(0) is the identity") {
    Se2 g = se2_exp(Eigen::Vector3d::Zero());
    REQUIRE(g.R.isApprox(Eigen::Matrix2d::Identity(), 1e-15));
    REQUIRE(g.t.norm() == 0.0);
  }
  SECTION("log is the inverse of exp") {
    Eigen::Vector3d v(0.3, 1.0, -2.0);
    REQUIRE((se2_log(se2_exp(v)) - v).cwiseAbs().maxCoeff() < 1e-10);
    RngStream rng(3);
    for (int i = 0; i < 50; ++i) {
      Eigen::Vector3d w(kPi * (2.0 * rng.uniform() - 1.0) * 0.999,
                        4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0);
      REQUIRE((se2_log(se2_exp(w)) - w).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SECTION("exp matches RK4 integration of the twist") {
    Eigen::Vector3d xi(0.7, 0.3, -1.1);
    Se2 g = se2_exp(xi);
    Eigen::Matrix3d M = integrate_twist(xi, 20000);
    REQUIRE_THAT(g.t.x(), WithinAbs(M(0, 2), 1e-9));
    REQUIRE_THAT(g.t.y(), WithinAbs(M(1, 2), 1e-9));
    REQUIRE_THAT(g.R(0, 0), WithinAbs(M(0, 0), 1e-9));
    REQUIRE_THAT(g.R(1, 0), WithinAbs(M(1, 0), 1e-9));
  }
  SECTION("group closure keeps rotations orthogonal") {
    Se2 a = se2_exp(Eigen::Vector3d(0.9, 0.2, 0.4));
    Se2 b = se2_exp(Eigen::Vector3d(-1.7, 1.2, -0.3));
    Se2 c = a * b;
    REQUIRE(c.orthogonality_residual() < 1e-9);
    Se2 ident = c * c.inverse();
    REQUIRE(ident.R.isApprox(Eigen::Matrix2d::Identity(), 1e-12));
    REQUIRE(ident.t.norm() < 1e-12);
  }
}

TEST_CASE("ekf_step prediction") {
  SECTION("zero noise reproduces the discrete unicycle propagation") {
    NoiseParams n;  // all zeros
    EkfBelief b;
    b.mean << 0.3, 1.0, -0.5;
    b.cov = 1e-12 * Eigen::Matrix3d::Identity();
    OdometryInput u{0.2, 0.1, 0.02};
    EkfBelief out = ekf_step(b, u, std::nullopt, Landmark{2, 3}, n);
    REQUIRE_THAT(out.mean(0), WithinAbs(0.3 + 0.004, 1e-15));
    REQUIRE_THAT(out.mean(1), WithinAbs(1.0 + 0.002 * std::cos(0.3), 1e-15));
    REQUIRE_THAT(out.mean(2), WithinAbs(-0.5 + 0.002 * std::sin(0.3), 1e-15));
  }
  SECTION("motion Jacobian agrees with central finite differences") {
    NoiseParams n;  // zero noise: cov_out = F P F^T exactly (up to the floor)
    OdometryInput u{0.4, 0.7, 0.05};
    RngStream rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::Vector3d state(kPi * (2.0 * rng.uniform() - 1.0),
                            4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0);
      auto propagate = [&](const Eigen::Vector3d& s) {
        EkfBelief bb;
        bb.mean = s;
        bb.cov = Eigen::Matrix3d::Identity();
        return ekf_step(bb, u, std::nullopt, Landmark{2, 3}, n).mean;
      };
      Eigen::Matrix3d F_fd;
      const double h = 1e-6;
      for (int j = 0; j < 3; ++j) {
        Eigen::Vector3d dp = Eigen::Vector3d::Zero(), dm = Eigen::Vector3d::Zero();
        dp(j) = h;
        dm(j) = -h;
        Eigen::Vector3d fp = propagate(state + dp), fm = propagate(state + dm);
        for (int i = 0; i < 3; ++i)
          F_fd(i, j) = (i == 0 ? angle_diff(fp(0), fm(0)) : fp(i) - fm(i)) / (2.0 * h);
      }
      EkfBelief bb;
      bb.mean = state;
      bb.cov = Eigen::Matrix3d::Identity();
      EkfBelief out = ekf_step(bb, u, std::nullopt, Landmark{2, 3}, n);
      REQUIRE((out.cov - F_fd * F_fd.transpose()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  SECTION("measurement Jacobian agrees with central finite differences") {
    Landmark lm{2.0, 3.0};
    RngStream rng(43);
    for (int trial = 0; trial < 100; ++trial) {
      double theta = kPi * (2.0 * rng.uniform() - 1.0);
      double x = 3.0 * rng.uniform() - 1.5, y = 3.0 * rng.uniform() - 1.5;
      double h_b, h_r;
      Eigen::Matrix<double, 2, 3> H;
      detail::bearing_range_model(theta, x, y, lm, h_b, h_r, H);
      auto model = [&](double th, double px, double py) {
        double dx = lm.x - px, dy = lm.y - py;
        return std::make_pair(wrap_angle(std::atan2(dy, dx) - th), std::hypot(dx, dy));
      };
      const double h = 1e-7;
      auto [bp, rp] = model(theta + h, x, y);
      auto [bm, rm] = model(theta - h, x, y);
      REQUIRE_THAT(H(0, 0), WithinAbs(angle_diff(bp, bm) / (2 * h), 1e-6));
      std::tie(bp, rp) = model(theta, x + h, y);
      std::tie(bm, rm) = model(theta, x - h, y);
      REQUIRE_THAT(H(0, 1), WithinAbs(angle_diff(bp, bm) / (2 * h), 1e-6));
      REQUIRE_THAT(H(1, 1), WithinAbs((rp - rm) / (2 * h), 1e-6));
      std::tie(bp, rp) = model(theta, x, y + h);
      std::tie(bm, rm) = model(theta, x, y - h);
      REQUIRE_THAT(H(0, 2), WithinAbs(angle_diff(bp, bm) / (2 * h), 1e-6));
      REQUIRE_THAT(H(1, 2), WithinAbs((rp - rm) / (2 * h), 1e-6));
    }
  }
}

TEST_CASE("lgekf_step") {
  SECTION("zero noise follows the exact constant-twist arc") {
    NoiseParams n;
    SE2Belief b;
    b.cov = 1e-12 * Eigen::Matrix3d::Identity();
    OdometryInput u{0.2, 0.1, 0.02};
    for (int k = 1; k <= 500; ++k) {
      b = lgekf_step(b, u, std::nullopt, Landmark{2, 3}, n);
      double t = k * u.dt;
      double radius = u.v / u.omega;
      REQUIRE_THAT(b.mean.theta(), WithinAbs(wrap_angle(u.omega * t), 1e-9));
      REQUIRE_THAT(b.mean.t.x(), WithinAbs(radius * std::sin(u.omega * t), 1e-9));
      REQUIRE_THAT(b.mean.t.y(), WithinAbs(radius * (1.0 - std::cos(u.omega * t)), 1e-9));
    }
  }
  SECTION("Abelian subcase: pure translation adds translation noise") {
    NoiseParams n;
    n.sigma_v2 = 1e-4;
    SE2Belief b;
    b.cov = Eigen::Matrix3d::Zero();
    b.cov(1, 1) = 0.01;
    b.cov(2, 2) = 0.02;
    b.cov(0, 0) = 1e-12;
    OdometryInput u{0.0, 0.1, 0.02};
    SE2Belief out = lgekf_step(b, u, std::nullopt, Landmark{2, 3}, n);
    REQUIRE_THAT(out.cov(1, 1), WithinAbs(0.01 + 1e-4 * 0.02 * 0.02, 1e-9));
    REQUIRE_THAT(out.cov(2, 2), WithinAbs(0.02, 1e-9));
    REQUIRE(std::abs(out.cov(0, 1)) < 1e-9);
  }
}

TEST_CASE("covariances stay symmetric positive definite over long runs") {
  NoiseParams n = fig_noise();
  Landmark lm{2.0, 3.0};
  OdometryInput u{0.2, 0.1, 0.02};
  RngStream heading_rng(61), speed_rng(62), bear_rng(63), range_rng(64);

  EkfBelief ekf;
  ekf.cov = 0.01 * Eigen::Matrix3d::Identity();
  SE2Belief lg;
  lg.cov = 0.01 * Eigen::Matrix3d::Identity();

  // Synthetic truth with the generative model used throughout.
  double theta = 0.0, x = 0.0, y = 0.0;
  double kw = 1.0 / (n.sigma_omega2 * u.dt * u.dt);
  for (int step = 1; step <= 1500; ++step) {
    double nv = speed_rng.normal(0.0, n.sigma_v2);
    x += (u.v + nv) * std::cos(theta) * u.dt;
    y += (u.v + nv) * std::sin(theta) * u.dt;
    theta = wrap_angle(theta + u.omega * u.dt +
                       sample(VonMises(0.0, kw), heading_rng));
    std::optional<BearingRange> obs;
    if (step % 20 == 0) {
      double bearing = wrap_angle(std::atan2(lm.y - y, lm.x - x) - theta +
                                  sample(VonMises(0.0, n.kappa_b), bear_rng));
      double range = std::max(std::hypot(lm.x - x, lm.y - y) +
                                  range_rng.normal(0.0, n.sigma_r2), 1e-6);
      obs = BearingRange{bearing, range};
    }
    ekf = ekf_step(ekf, u, obs, lm, n);
    lg = lgekf_step(lg, u, obs, lm, n);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> e1(ekf.cov), e2(lg.cov);
    REQUIRE(e1.eigenvalues().minCoeff() > 0.0);
    REQUIRE(e2.eigenvalues().minCoeff() > 0.0);
    REQUIRE((ekf.cov - ekf.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((lg.cov - lg.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(std::isfinite(ekf.cov.trace()));
    REQUIRE(ekf.cov.trace() > 0.0);
    REQUIRE(lg.mean.orthogonality_residual() < 1e-9);
  }
}

TEST_CASE("EKF and LG-EKF coincide in the flat, small-noise regime") {
  NoiseParams n;
  n.sigma_omega2 = 1e-8;
  n.sigma_v2 = 1e-8;
  n.kappa_b = 1e8;
  n.sigma_r2 = 1e-8;
  Landmark lm{2.0, 0.5};
  OdometryInput u{0.0, 0.1, 0.02};

  EkfBelief ekf;
  ekf.mean.setZero();
  ekf.cov = 1e-8 * Eigen::Matrix3d::Identity();
  SE2Belief lg;
  lg.cov = 1e-8 * Eigen::Matrix3d::Identity();

  double truth_x = 0.0;
  for (int step = 1; step <= 100; ++step) {
    truth_x += u.v * u.dt;
    std::optional<BearingRange> obs;
    if (step % 10 == 0) {
      obs = BearingRange{wrap_angle(std::atan2(lm.y, lm.x - truth_x)),
                         std::hypot(lm.x - truth_x, lm.y)};
    }
    ekf = ekf_step(ekf, u, obs, lm, n);
    lg = lgekf_step(lg, u, obs, lm, n);
    REQUIRE_THAT(lg.mean.theta(), WithinAbs(ekf.mean(0), 1e-6));
    REQUIRE_THAT(lg.mean.t.x(), WithinAbs(ekf.mean(1), 1e-6));
    REQUIRE_THAT(lg.mean.t.y(), WithinAbs(ekf.mean(2), 1e-6));
    REQUIRE((lg.cov - ekf.cov).cwiseAbs().maxCoeff() < 1e-6);
  }
}
