#pragma once

#include <cmath>
#include <stdexcept>

#include "locsim/circstats.hpp"

namespace locsim {

/// The von Mises filter state is the belief itself.
using VmFilterState = VonMises;

/// Scalar Kalman state (one axis).
struct KfState {
  double mean = 0.0;
  double var = 1.0;

  KfState() = default;
  KfState(double m, double v) : mean(m), var(v) {
    if (!std::isfinite(m)) throw std::domain_error("KfState: mean must be finite");
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::domain_error("KfState: variance must be positive and finite");
  }
};

/// Time update of the von Mises filter: shift the mean by the input, fuse the
/// concentration with the process noise through the convolution rule.
/// kappa_w == +inf is the noise-free limit and leaves kappa untouched.
inline VonMises vmf_time(const VonMises& state, double u, double kappa_w) {
  if (!(kappa_w > 0.0)) throw std::domain_error("vmf_time: kappa_w must be > 0");
  double mu = wrap_angle(state.mu + u);
  if (std::isinf(kappa_w)) return VonMises(mu, state.kappa);
  double r = a_func(state.kappa) * a_func(kappa_w);
  r = std::min(r, 1.0 - 1e-15);
  return VonMises(mu, a_inv(r));
}

/// Observation update of the von Mises filter: exact Bayes fusion with the
/// observation likelihood vM(o, kappa_nu).
inline VonMises vmf_obsv(const VonMises& state, double o, double kappa_nu) {
  if (!(kappa_nu > 0.0) || !std::isfinite(kappa_nu))
    throw std::domain_error("vmf_obsv: kappa_nu must be positive and finite");
  return multiply(state, VonMises(o, kappa_nu));
}

inline KfState kf_time(const KfState& state, double u, double var_w) {
  if (!(var_w >= 0.0)) throw std::domain_error("kf_time: var_w must be >= 0");
  return KfState(state.mean + u, state.var + var_w);
}

inline KfState kf_obsv(const KfState& state, double o, double var_r) {
  if (!(var_r > 0.0)) throw std::domain_error("kf_obsv: var_r must be > 0");
  double gain = state.var / (var_r + state.var);
  double mean = state.mean + gain * (o - state.mean);
  double var = 1.0 / (1.0 / state.var + 1.0 / var_r);
  return KfState(mean, var);
}

}  // namespace locsim
