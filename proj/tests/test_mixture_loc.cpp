#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "locsim/mixture_loc.hpp"
#include "locsim/oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace locsim;

namespace {

NoiseParams fig_noise() {
  NoiseParams n;
  n.sigma_omega2 = 10.0;  // sigma_omega^2 dt^2 = 0.004 at dt = 0.02
  n.sigma_v2 = 1e-4;
  n.kappa_b = 500.0;
  n.sigma_r2 = 1e-4;
  n.kappa_nu_theta = 100.0;
  n.sigma2_ox = 0.01;
  n.sigma2_oy = 0.01;
  return n;
}

}  // namespace

TEST_CASE("mixture time_update") {
  SECTION("near-deterministic heading: increment is v dt, variance still inflates") {
    MixtureBelief b{VonMises(0.0, 1e10), KfState(0.0, 0.01), KfState(0.0, 0.01)};
    NoiseParams n = fig_noise();
    n.sigma_v2 = 0.0;
    OdometryInput u{0.0, 0.1, 0.02};
    MixtureBelief out = time_update(b, u, n);
    REQUIRE_THAT(out.x.mean, WithinRel(0.002, 1e-9));
    // The deliberate upper bound: variance grows by v^2 dt^2 even noise-free.
    REQUIRE_THAT(out.x.var - b.x.var, WithinRel(0.01 * 4e-4, 1e-12));
    REQUIRE(out.y.mean == 0.0);  // sin(0) = 0 exactly
  }
  SECTION("increment uses the pre-update heading and A(kappa_t)") {
    MixtureBelief b{VonMises(kPi / 4.0, 250.0), KfState(0.0, 0.01), KfState(0.0, 0.01)};
    OdometryInput u{0.2, 0.1, 0.02};
    MixtureBelief out = time_update(b, u, fig_noise());
    double a250 = oracle::a_func_quadrature(250.0);
    REQUIRE_THAT(out.x.mean, WithinRel(0.002 * a250 * std::cos(kPi / 4.0), 1e-9));
    REQUIRE_THAT(out.y.mean, WithinRel(0.002 * a250 * std::sin(kPi / 4.0), 1e-9));
    // Heading fused with kappa_w = 1/(sigma_omega^2 dt^2) = 250.
    REQUIRE_THAT(out.heading.kappa,
                 WithinRel(a_inv(a_func(250.0) * a_func(250.0)), 1e-12));
  }
  SECTION("position variance grows by exactly (sigma_v^2 + v^2) dt^2") {
    MixtureBelief b{VonMises(0.3, 50.0), KfState(1.0, 0.05), KfState(-2.0, 0.05)};
    NoiseParams n = fig_noise();
    OdometryInput u{0.1, 0.25, 0.02};
    MixtureBelief out = time_update(b, u, n);
    double expect = (n.sigma_v2 + u.v * u.v) * u.dt * u.dt;
    REQUIRE_THAT(out.x.var - b.x.var, WithinRel(expect, 1e-12));
    REQUIRE_THAT(out.y.var - b.y.var, WithinRel(expect, 1e-12));
  }
}

TEST_CASE("mixture obsv_direct") {
  NoiseParams n = fig_noise();
  SECTION("confirming observation tightens without moving") {
    MixtureBelief b{VonMises(0.4, 5.0), KfState(1.0, 0.2), KfState(2.0, 0.2)};
    MixtureBelief out = obsv_direct(b, 0.4, 1.0, 2.0, n);
    REQUIRE_THAT(out.heading.mu, WithinAbs(0.4, 1e-12));
    REQUIRE(out.heading.kappa > b.heading.kappa);
    REQUIRE(out.x.mean == b.x.mean);
    REQUIRE(out.x.var < b.x.var);
    REQUIRE(out.y.var < b.y.var);
  }
  SECTION("uninformative heading observation leaves the belief in place") {
    MixtureBelief b{VonMises(0.4, 5.0), KfState(0.0, 1.0), KfState(0.0, 1.0)};
    NoiseParams weak = n;
    weak.kappa_nu_theta = 1e-9;
    MixtureBelief out = obsv_direct(b, 2.0, 0.0, 0.0, weak);
    REQUIRE_THAT(out.heading.mu, WithinAbs(b.heading.mu, 1e-6));
    REQUIRE_THAT(out.heading.kappa, WithinAbs(b.heading.kappa, 1e-6));
  }
  SECTION("closed-form posterior") {
    MixtureBelief b{VonMises(0.0, 2.0), KfState(0.0, 1.0), KfState(0.0, 1.0)};
    NoiseParams eq = n;
    eq.kappa_nu_theta = 2.0;
    eq.sigma2_ox = 1.0;
    eq.sigma2_oy = 1.0;
    MixtureBelief out = obsv_direct(b, kPi / 2.0, 1.0, 0.0, eq);
    REQUIRE_THAT(out.heading.mu, WithinAbs(kPi / 4.0, 1e-12));
    REQUIRE_THAT(out.heading.kappa, WithinRel(2.0 * std::sqrt(2.0), 1e-12));
    REQUIRE_THAT(out.x.mean, WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(out.x.var, WithinAbs(0.5, 1e-12));
  }
}

TEST_CASE("equivalent_orientation") {
  NoiseParams n = fig_noise();
  Landmark lm{2.0, 3.0};
  SECTION("noiseless limit pins the heading") {
    MixtureBelief b{VonMises(0.0, 10.0), KfState(0.0, 1e-12), KfState(0.0, 1e-12)};
    NoiseParams sharp = n;
    sharp.kappa_b = 1e12;
    double s_b = 0.25;
    VonMises out = equivalent_orientation(b, lm, s_b, std::sqrt(13.0), sharp);
    REQUIRE_THAT(out.mu, WithinAbs(std::atan2(3.0, 2.0) - s_b, 1e-12));
    REQUIRE(out.kappa > 1e6);
  }
  SECTION("concentration arithmetic") {
    MixtureBelief b{VonMises(0.7, 10.0), KfState(0.0, 0.02), KfState(0.0, 0.02)};
    VonMises out = equivalent_orientation(b, lm, 0.0, std::sqrt(13.0), n);
    REQUIRE_THAT(out.mu, WithinAbs(std::atan2(3.0, 2.0), 1e-12));
    // kappa_1 = r_bar s_r / (2 sigma2) = 13 / 0.04 = 325, fused with kappa_b.
    double expect = a_inv(a_func(325.0) * a_func(500.0));
    REQUIRE_THAT(out.kappa, WithinRel(expect, 1e-10));
    REQUIRE(out.kappa < 325.0);  // below min(kappa_1, kappa_b)
  }
  SECTION("paper-literal compatibility switch") {
    MixtureBelief b{VonMises(0.7, 10.0), KfState(0.0, 0.02), KfState(0.0, 0.02)};
    NoiseParams literal = n;
    literal.equiv_kappa_paper_literal = true;
    VonMises out = equivalent_orientation(b, lm, 0.0, std::sqrt(13.0), literal);
    REQUIRE_THAT(out.kappa, WithinRel(a_func(325.0) * a_func(500.0), 1e-12));
    REQUIRE(out.kappa < 1.0);  // the printed product of A-values
  }
  SECTION("coincident estimate raises a geometry error") {
    MixtureBelief b{VonMises(0.0, 1.0), KfState(2.0, 0.1), KfState(3.0, 0.1)};
    REQUIRE_THROWS_AS(equivalent_orientation(b, lm, 0.0, 1.0, n), geometry_error);
  }
}

TEST_CASE("mixture obsv_bearing_distance") {
  NoiseParams n = fig_noise();
  Landmark lm{2.0, 3.0};
  SECTION("exact measurements at the truth leave the means in place") {
    Pose2 truth(0.3, 0.5, -0.2);
    MixtureBelief b{VonMises(truth.theta, 1e12), KfState(truth.x, 1e-10),
                    KfState(truth.y, 1e-10)};
    NoiseParams sharp = n;
    sharp.kappa_b = 1e12;
    sharp.sigma_r2 = 0.0;
    double dx = lm.x - truth.x, dy = lm.y - truth.y;
    double s_b = wrap_angle(std::atan2(dy, dx) - truth.theta);
    double s_r = std::hypot(dx, dy);
    MixtureBelief out = obsv_bearing_distance(b, lm, s_b, s_r, sharp);
    REQUIRE_THAT(out.x.mean, WithinAbs(truth.x, 1e-6));
    REQUIRE_THAT(out.y.mean, WithinAbs(truth.y, 1e-6));
    REQUIRE_THAT(out.heading.mu, WithinAbs(truth.theta, 1e-6));
  }
  SECTION("output heading does not depend on the prior heading mean") {
    MixtureBelief b1{VonMises(0.1, 7.0), KfState(0.2, 0.03), KfState(-0.4, 0.03)};
    MixtureBelief b2 = b1;
    b2.heading = VonMises(2.9, 7.0);
    MixtureBelief o1 = obsv_bearing_distance(b1, lm, 0.4, 3.3, n);
    MixtureBelief o2 = obsv_bearing_distance(b2, lm, 0.4, 3.3, n);
    REQUIRE(o1.heading.mu == o2.heading.mu);
    REQUIRE(o1.heading.kappa == o2.heading.kappa);
    // The position updates legitimately differ (they use the prior heading).
  }
  SECTION("position update follows the equivalent-observation formulas") {
    MixtureBelief b{VonMises(0.1, 40.0), KfState(0.2, 0.03), KfState(-0.4, 0.03)};
    double s_b = 0.4, s_r = 3.3;
    MixtureBelief out = obsv_bearing_distance(b, lm, s_b, s_r, n);
    // Scripted arithmetic, recomputed here from the definitions.
    double att = a_func(40.0) * a_func(500.0);
    double ox = lm.x - s_r * att * std::cos(b.heading.mu + s_b);
    double oy = lm.y - s_r * att * std::sin(b.heading.mu + s_b);
    double var_o = n.sigma_r2 + s_r * s_r;
    KfState ex = kf_obsv(b.x, ox, var_o);
    KfState ey = kf_obsv(b.y, oy, var_o);
    REQUIRE_THAT(out.x.mean, WithinRel(ex.mean, 1e-14));
    REQUIRE_THAT(out.x.var, WithinRel(ex.var, 1e-14));
    REQUIRE_THAT(out.y.mean, WithinRel(ey.mean, 1e-14));
    REQUIRE_THAT(out.y.var, WithinRel(ey.var, 1e-14));
  }
  SECTION("variances of the two axes stay identical through the flow") {
    MixtureBelief b{VonMises(0.0, 100.0), KfState(0.0, 0.01), KfState(0.0, 0.01)};
    OdometryInput u{0.2, 0.1, 0.02};
    for (int step = 1; step <= 60; ++step) {
      b = time_update(b, u, n);
      if (step % 20 == 0) {
        double s_b = wrap_angle(std::atan2(lm.y - b.y.mean, lm.x - b.x.mean) - b.heading.mu);
        b = obsv_bearing_distance(b, lm, s_b, 3.5, n);
      }
      REQUIRE(b.x.var == b.y.var);
    }
  }
}

TEST_CASE("moment correctness of the position increment model") {
  // E[(v + n_v) cos theta_hat] = v A(kappa) cos theta_bar and
  // Var <= sigma_v^2 + v^2.
  RngStream rng(407);
  double v = 0.1, sigma_v2 = 1e-4, kappa = 30.0, theta_bar = 0.6;
  VonMises heading(theta_bar, kappa);
  const int N = 400000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < N; ++i) {
    double nv = rng.normal(0.0, sigma_v2);
    double c = std::cos(sample(heading, rng));
    double val = (v + nv) * c;
    sum += val;
    sum2 += val * val;
  }
  double mean = sum / N;
  double var = sum2 / N - mean * mean;
  double se = std::sqrt(var / N);
  REQUIRE_THAT(mean, WithinAbs(v * a_func(kappa) * std::cos(theta_bar), 3.0 * se));
  REQUIRE(var <= sigma_v2 + v * v);
}

TEST_CASE("pd_domination") {
  SECTION("identity, c = 1/2") {
    Eigen::Matrix2d out = pd_domination(Eigen::Matrix2d::Identity(), 0.5);
    REQUIRE(out.isApprox(2.0 * Eigen::Matrix2d::Identity(), 1e-14));
  }
  SECTION("correlated input") {
    Eigen::Matrix2d P;
    P << 1.0, 0.9, 0.9, 1.0;
    Eigen::Matrix2d out = pd_domination(P, 0.5);
    REQUIRE(out.isApprox(2.0 * Eigen::Matrix2d::Identity(), 1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(out - P);
    REQUIRE_THAT(es.eigenvalues().minCoeff(), WithinAbs(0.1, 1e-12));
  }
  SECTION("difference is positive definite for random inputs") {
    RngStream rng(88);
    for (int i = 0; i < 200; ++i) {
      double ang = kTwoPi * rng.uniform();
      Eigen::Matrix2d R;
      R << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
      Eigen::Vector2d eig(0.1 + 9.9 * rng.uniform(), 0.1 + 9.9 * rng.uniform());
      Eigen::Matrix2d P = R * eig.asDiagonal() * R.transpose();
      P = 0.5 * (P + P.transpose());
      double c = 0.05 + 0.9 * rng.uniform();
      Eigen::Matrix2d out = pd_domination(P, c);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(out - P);
      REQUIRE(es.eigenvalues().minCoeff() > 0.0);
    }
  }
  SECTION("rejects invalid inputs") {
    Eigen::Matrix2d notpd;
    notpd << 1.0, 2.0, 2.0, 1.0;  // eigenvalues -1, 3
    REQUIRE_THROWS_AS(pd_domination(notpd, 0.5), std::domain_error);
    REQUIRE_THROWS_AS(pd_domination(Eigen::Matrix2d::Identity(), 0.0), std::domain_error);
    REQUIRE_THROWS_AS(pd_domination(Eigen::Matrix2d::Identity(), 1.0), std::domain_error);
  }
}
