#pragma once

#include <algorithm>
#include <cmath>

#include "locsim/circstats.hpp"
#include "locsim/rng.hpp"
#include "locsim/types.hpp"

namespace locsim {

/// How ground-truth heading noise is drawn. The default samples the von Mises
/// surrogate vM(0, 1/(sigma_omega^2 dt^2)) so the generative model matches
/// the filters' assumption; the Gaussian switch exists for robustness runs.
enum class HeadingNoiseModel { von_mises, gaussian };

/// Per-trial process noise streams, one per source.
struct TruthStreams {
  RngStream heading;
  RngStream speed;

  TruthStreams(std::uint64_t seed, std::uint64_t trial)
      : heading(seed, trial, NoiseSource::heading),
        speed(seed, trial, NoiseSource::speed) {}
};

/// Per-trial measurement noise streams.
struct SensorStreams {
  RngStream bearing;
  RngStream range;

  SensorStreams(std::uint64_t seed, std::uint64_t trial)
      : bearing(seed, trial, NoiseSource::bearing),
        range(seed, trial, NoiseSource::range) {}
};

/// One step of the ground-truth unicycle: position advances along the
/// pre-update heading, then the heading integrates the (noisy) rate.
inline Pose2 truth_step(const Pose2& p, const OdometryInput& u, const NoiseParams& n,
                        HeadingNoiseModel model, TruthStreams& rng) {
  if (!(u.dt > 0.0)) throw std::domain_error("truth_step: dt must be > 0");
  double nv = n.sigma_v2 > 0.0 ? rng.speed.normal(0.0, n.sigma_v2) : 0.0;
  double x = p.x + (u.v + nv) * std::cos(p.theta) * u.dt;
  double y = p.y + (u.v + nv) * std::sin(p.theta) * u.dt;

  double heading_noise = 0.0;
  if (n.sigma_omega2 > 0.0) {
    if (model == HeadingNoiseModel::von_mises) {
      double kw = 1.0 / (n.sigma_omega2 * u.dt * u.dt);
      heading_noise = sample(VonMises(0.0, kw), rng.heading);
    } else {
      heading_noise = rng.heading.normal(0.0, n.sigma_omega2) * u.dt;
    }
  }
  double theta = wrap_angle(p.theta + u.omega * u.dt + heading_noise);
  return Pose2(theta, x, y);
}

/// Noisy bearing/distance measurement of the landmark from pose p. The
/// distance is floored at 1e-6 m.
inline BearingRange sense(const Pose2& p, const Landmark& lm, const NoiseParams& n,
                          SensorStreams& rng) {
  double dx = lm.x - p.x, dy = lm.y - p.y;
  double dist = std::hypot(dx, dy);
  if (dist < 1e-12) throw geometry_error("sense: pose coincides with the landmark");
  // kappa_b == 0 is the circular-uniform noise case by vM semantics.
  double bearing_noise = sample(VonMises(0.0, n.kappa_b), rng.bearing);
  double b = wrap_angle(std::atan2(dy, dx) - p.theta + bearing_noise);
  double r = dist + (n.sigma_r2 > 0.0 ? rng.range.normal(0.0, n.sigma_r2) : 0.0);
  return BearingRange{b, std::max(r, 1e-6)};
}

}  // namespace locsim
