#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "locsim/angles.hpp"
#include "locsim/errors.hpp"
#include "locsim/rng.hpp"

namespace locsim {

/// Circular belief vM(mu, kappa). mu is canonicalized to [-pi, pi) on
/// construction; kappa >= 0 and finite, with kappa == 0 denoting the
/// circular uniform distribution.
struct VonMises {
  double mu = 0.0;
  double kappa = 0.0;

  VonMises() = default;

  VonMises(double mean_direction, double concentration) {
    if (!std::isfinite(mean_direction))
      throw std::domain_error("VonMises: mean direction must be finite");
    if (!std::isfinite(concentration) || concentration < 0.0)
      throw std::domain_error("VonMises: kappa must be finite and >= 0");
    mu = wrap_angle(mean_direction);
    kappa = concentration;
  }

  static VonMises uniform() { return VonMises(0.0, 0.0); }
  bool is_uniform() const { return kappa == 0.0; }
};

/// Complex trigonometric moment E[exp(i n theta)].
struct TrigMoment {
  double re = 0.0;
  double im = 0.0;
  double modulus() const { return std::hypot(re, im); }
};

namespace detail {

// Ratio I_nu(x) / I_{nu-1}(x) by the Gauss continued fraction
//   rho_nu = 1 / (2 nu / x + 1 / (2 (nu+1) / x + ...)),
// evaluated with the modified Lentz scheme. Needs O(x) terms, so it is only
// used below the asymptotic switch.
inline double bessel_ratio_cf(double x, int nu) {
  constexpr double tiny = 1e-300;
  double f = tiny, c = tiny, d = 0.0;
  const int max_iter = 10000 + static_cast<int>(2.0 * x);
  for (int k = 1; k <= max_iter; ++k) {
    double b = 2.0 * (nu + k - 1) / x;
    d = b + d;
    if (d == 0.0) d = tiny;
    c = b + 1.0 / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 4.0 * std::numeric_limits<double>::epsilon())
      break;
  }
  return f;
}

// Ratio I_n(x) / I_0(x) from the large-argument expansions
//   I_nu(x) ~ e^x / sqrt(2 pi x) * S_nu(x),
//   S_nu(x) = sum_k (-1)^k prod_j (4 nu^2 - (2j-1)^2) / (k! (8x)^k).
// The exponential prefactors cancel in the ratio, so nothing overflows.
// Valid when 4 n^2 << 8 x; used for x >= 150 with n <= 8.
inline double bessel_asym_series(double x, int nu) {
  const double mu = 4.0 * static_cast<double>(nu) * nu;
  double sum = 1.0, term = 1.0;
  for (int k = 1; k <= 24; ++k) {
    double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * x * k);
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    if (std::abs(term) > 1.0) break;  // divergent tail of the asymptotic series
    sum += term;
  }
  return sum;
}

inline double bessel_ratio_asym(double x, int n) {
  return bessel_asym_series(x, n) / bessel_asym_series(x, 0);
}

// Switch point between the continued fraction (exact to machine precision,
// O(x) cost) and the asymptotic ratio (O(1) cost, < 1e-14 relative above
// this point for n <= 8).
inline constexpr double kBesselAsymSwitch = 150.0;

}  // namespace detail

/// Bessel-function ratio I_n(kappa) / I_0(kappa), overflow-free for kappa up
/// to 1e8 and beyond: small arguments use a downward continued fraction for
/// the consecutive-order ratios, large arguments the asymptotic ratio in
/// which the e^kappa factors cancel.
inline double bessel_ratio(double kappa, int n) {
  if (!std::isfinite(kappa) || kappa < 0.0)
    throw std::domain_error("bessel_ratio: kappa must be finite and >= 0");
  if (n < 1) throw std::domain_error("bessel_ratio: order must be >= 1");
  if (kappa == 0.0) return 0.0;
  if (kappa >= detail::kBesselAsymSwitch &&
      (n <= 8 || 4.0 * n * n < 0.05 * 8.0 * kappa)) {
    return detail::bessel_ratio_asym(kappa, n);
  }
  // I_n/I_0 = prod_{j=1..n} I_j/I_{j-1}; each factor from the CF.
  double r = 1.0;
  for (int j = 1; j <= n; ++j) r *= detail::bessel_ratio_cf(kappa, j);
  return r;
}

/// A(kappa) = I_1(kappa) / I_0(kappa), the modulus of the first trigonometric
/// moment of vM(., kappa). Strictly increasing, 0 <= A < 1.
inline double a_func(double kappa) {
  if (!std::isfinite(kappa) || kappa < 0.0)
    throw std::domain_error("a_func: kappa must be finite and >= 0");
  if (kappa == 0.0) return 0.0;
  if (kappa >= detail::kBesselAsymSwitch) return detail::bessel_ratio_asym(kappa, 1);
  return detail::bessel_ratio_cf(kappa, 1);
}

/// A'(kappa) = 1 - A(kappa) (A(kappa) + 1/kappa). The direct form loses all
/// precision to cancellation once A is within ~1e-13 of 1, so large kappa
/// switches to the expansion A'(kappa) = 1/(2k^2) + 1/(4k^3) + 3/(8k^4) + ...
inline double a_deriv(double kappa) {
  if (!std::isfinite(kappa) || kappa <= 0.0)
    throw std::domain_error("a_deriv: kappa must be finite and > 0");
  if (kappa > 1e3) {
    double ik = 1.0 / kappa;
    return ik * ik * (0.5 + ik * (0.25 + ik * (0.375 + ik * 0.78125)));
  }
  double a = a_func(kappa);
  return 1.0 - a * (a + 1.0 / kappa);
}

/// Inverse of A: the concentration whose first-moment modulus equals r.
/// Bracketed Newton using the A' recurrence; inputs in [1 - 1e-15, 1) are
/// clamped to 1 - 1e-15.
inline double a_inv(double r) {
  if (!(r >= 0.0) || r >= 1.0)
    throw std::domain_error("a_inv: argument must lie in [0, 1)");
  if (r == 0.0) return 0.0;
  r = std::min(r, 1.0 - 1e-15);

  // Fisher's piecewise starting guess.
  double k;
  if (r < 0.53) {
    k = 2.0 * r + r * r * r + 5.0 / 6.0 * std::pow(r, 5);
  } else if (r < 0.85) {
    k = -0.4 + 1.39 * r + 0.43 / (1.0 - r);
  } else {
    k = 1.0 / (r * r * r - 4.0 * r * r + 3.0 * r);
  }
  if (!(k > 0.0) || !std::isfinite(k)) k = 1.0;

  // A is strictly increasing, so a bracket is safe to maintain.
  double lo = 0.0, hi = k;
  while (a_func(hi) < r) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e17) break;
  }
  k = std::clamp(k, lo, hi);

  const double tol = 1e-13 * r + 1e-18;
  for (int it = 0; it < 200; ++it) {
    double f = a_func(k) - r;
    if (std::abs(f) <= tol) break;
    if (f > 0.0) hi = k; else lo = k;
    double d = a_deriv(k);
    double next = (d > 0.0) ? k - f / d : -1.0;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (next == k) break;
    k = next;
  }
  return k;
}

/// n-th trigonometric moment of d: exp(i n mu) I_n(kappa) / I_0(kappa).
inline TrigMoment trig_moment(const VonMises& d, int n) {
  if (n < 1) throw std::domain_error("trig_moment: order must be >= 1");
  double rho = d.kappa == 0.0 ? 0.0 : bessel_ratio(d.kappa, n);
  return TrigMoment{rho * std::cos(n * d.mu), rho * std::sin(n * d.mu)};
}

/// von Mises approximation of the distribution of theta_a + theta_b:
/// the vM matching the product of the inputs' first trigonometric moments,
/// mean mu_a + mu_b and kappa = A^-1(A(kappa_a) A(kappa_b)).
inline VonMises convolve_approx(const VonMises& a, const VonMises& b) {
  double r = a_func(a.kappa) * a_func(b.kappa);
  r = std::min(r, 1.0 - 1e-15);
  return VonMises(wrap_angle(a.mu + b.mu), a_inv(r));
}

/// Exact Bayes fusion: the product of two von Mises densities is von Mises
/// with parameters read off the resultant vector
///   kappa+ e^{i mu+} = kappa_p e^{i mu_p} + kappa_l e^{i mu_l}.
/// A uniform operand carries no information and returns the other unchanged.
inline VonMises multiply(const VonMises& prior, const VonMises& likelihood) {
  if (prior.is_uniform()) return likelihood;
  if (likelihood.is_uniform()) return prior;
  double c = prior.kappa * std::cos(prior.mu) + likelihood.kappa * std::cos(likelihood.mu);
  double s = prior.kappa * std::sin(prior.mu) + likelihood.kappa * std::sin(likelihood.mu);
  double k = std::hypot(c, s);
  if (k < 1e-12)
    throw degenerate_fusion_error(
        "multiply: resultant length below 1e-12, mean direction undefined");
  return VonMises(std::atan2(s, c), k);
}

/// Conditioning construction: for a bivariate Gaussian with mean
/// d [cos phi, sin phi] and covariance sigma2 I_2, the direction conditioned
/// on radius r0 is vM(phi, r0 d / sigma2).
inline VonMises vm_from_conditioned_gaussian(double phi, double d,
                                             double sigma2, double r0) {
  if (!(d >= 0.0)) throw std::domain_error("vm_from_conditioned_gaussian: d must be >= 0");
  if (!(sigma2 > 0.0))
    throw std::domain_error("vm_from_conditioned_gaussian: sigma2 must be > 0");
  if (!(r0 > 0.0)) throw std::domain_error("vm_from_conditioned_gaussian: r0 must be > 0");
  return VonMises(phi, r0 * d / sigma2);
}

namespace detail {

// Best-Fisher rejection sampler with a wrapped-Cauchy envelope; for
// vanishingly small kappa the target is indistinguishable from uniform.
inline double sample_vm(double mu, double kappa, RngStream& rng) {
  if (kappa < 1e-10) return wrap_angle(mu + kTwoPi * rng.uniform() - kPi);

  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);

  double f;
  for (;;) {
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    double z = std::cos(kPi * u1);
    f = (1.0 + r * z) / (r + z);
    double c = kappa * (r - f);
    if (c * (2.0 - c) - u2 > 0.0) break;
    if (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0) break;
  }
  double u3 = rng.uniform();
  double angle = std::acos(std::clamp(f, -1.0, 1.0));
  return wrap_angle(mu + (u3 > 0.5 ? angle : -angle));
}

}  // namespace detail

/// Draw one angle distributed as d. kappa == 0 yields uniform on the circle.
inline double sample(const VonMises& d, RngStream& rng) {
  return detail::sample_vm(d.mu, d.kappa, rng);
}

/// High-concentration bridge vM(mu, kappa) ~ N(mu, 1/kappa):
/// the concentration standing in for a Gaussian of variance sigma2.
inline double kappa_from_variance(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::domain_error("kappa_from_variance: variance must be positive and finite");
  return 1.0 / sigma2;
}

/// Inverse bridge: the surrogate Gaussian variance of vM(., kappa).
inline double variance_from_kappa(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw std::domain_error("variance_from_kappa: kappa must be positive and finite");
  return 1.0 / kappa;
}

}  // namespace locsim
