#pragma once

// Independent verification oracles: adaptive quadrature over the Bessel
// integral definition, grid-based Bayes posteriors, finite differences and
// Monte Carlo moment estimates. Nothing here is called by the estimators;
// these routines exist so that tests and the `locsim oracle` command can
// cross-check the fast implementations against first principles.

#include <cmath>
#include <functional>
#include <vector>

#include "locsim/angles.hpp"
#include "locsim/circstats.hpp"
#include "locsim/rng.hpp"

namespace locsim::oracle {

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double h = b - a;
  double left = h / 12.0 * (fa + 4.0 * flm + fm);
  double right = h / 12.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b]. tol is absolute; pushing it
/// below ~1e-14 stalls against floating-point noise in the panel estimates.
inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol = 1e-14,
                               int max_depth = 32) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// I_n(kappa) / I_0(kappa) straight from the integral definition
///   I_p(kappa) = (1/2pi) \int_0^{2pi} cos(p theta) e^{kappa cos theta} dtheta,
/// with e^kappa factored out of both integrands so nothing overflows.
inline double bessel_ratio_quadrature(double kappa, int n) {
  if (kappa == 0.0) return n == 0 ? 1.0 : 0.0;
  // Since \int_0^pi cos(n theta) dtheta = 0 for n >= 1, the constant part of
  // the exponential can be subtracted exactly (expm1); this keeps the
  // integrand on the scale of the integral for small kappa.
  auto numer = [&](double t) { return std::cos(n * t) * std::expm1(kappa * (std::cos(t) - 1.0)); };
  auto denom = [&](double t) { return std::exp(kappa * (std::cos(t) - 1.0)); };
  // Integrands are even in theta; [0, pi] carries all the information.
  double num = adaptive_simpson(numer, 0.0, kPi);
  double den = adaptive_simpson(denom, 0.0, kPi);
  return num / den;
}

inline double a_func_quadrature(double kappa) { return bessel_ratio_quadrature(kappa, 1); }

/// Central finite difference of A(kappa) using the quadrature-backed A.
inline double a_deriv_central_diff(double kappa, double h = 1e-5) {
  return (a_func_quadrature(kappa + h) - a_func_quadrature(kappa - h)) / (2.0 * h);
}

/// Normalized point masses of a von Mises density on a uniform grid over
/// [-pi, pi), computed in the log domain.
inline std::vector<double> vm_grid_masses(double mu, double kappa, int n_points) {
  std::vector<double> logp(n_points);
  double max_lp = -1e300;
  for (int i = 0; i < n_points; ++i) {
    double theta = -kPi + kTwoPi * i / n_points;
    logp[i] = kappa * std::cos(theta - mu);
    max_lp = std::max(max_lp, logp[i]);
  }
  double z = 0.0;
  for (double& lp : logp) {
    lp = std::exp(lp - max_lp);
    z += lp;
  }
  for (double& p : logp) p /= z;
  return logp;
}

/// Grid Bayes posterior masses: pointwise product of prior and likelihood
/// von Mises densities, renormalized. The reference for multiply/vmf_obsv.
inline std::vector<double> grid_bayes_posterior(double mu_prior, double kappa_prior,
                                                double mu_like, double kappa_like,
                                                int n_points) {
  std::vector<double> logp(n_points);
  double max_lp = -1e300;
  for (int i = 0; i < n_points; ++i) {
    double theta = -kPi + kTwoPi * i / n_points;
    logp[i] = kappa_prior * std::cos(theta - mu_prior) +
              kappa_like * std::cos(theta - mu_like);
    max_lp = std::max(max_lp, logp[i]);
  }
  double z = 0.0;
  for (double& lp : logp) {
    lp = std::exp(lp - max_lp);
    z += lp;
  }
  for (double& p : logp) p /= z;
  return logp;
}

/// Total variation distance between two discrete distributions.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

/// Exact von Mises bin masses over [-pi, pi) split into n_bins equal bins,
/// by fine fixed-order quadrature inside each bin.
inline std::vector<double> vm_bin_masses(double mu, double kappa, int n_bins,
                                         int sub = 64) {
  std::vector<double> mass(n_bins, 0.0);
  double total = 0.0;
  double w = kTwoPi / n_bins;
  for (int b = 0; b < n_bins; ++b) {
    double lo = -kPi + b * w;
    double acc = 0.0;
    for (int j = 0; j < sub; ++j) {
      double t = lo + (j + 0.5) * w / sub;
      acc += std::exp(kappa * (std::cos(t - mu) - 1.0));
    }
    mass[b] = acc;
    total += acc;
  }
  for (double& m : mass) m /= total;
  return mass;
}

/// Empirical first trigonometric moment of a set of angles, plus standard
/// errors of the two components.
struct MomentEstimate {
  double re = 0.0, im = 0.0;
  double se_re = 0.0, se_im = 0.0;
  double modulus() const { return std::hypot(re, im); }
};

inline MomentEstimate empirical_first_moment(const std::vector<double>& angles) {
  MomentEstimate m;
  double n = static_cast<double>(angles.size());
  double sc = 0.0, ss = 0.0, sc2 = 0.0, ss2 = 0.0;
  for (double a : angles) {
    double c = std::cos(a), s = std::sin(a);
    sc += c; ss += s; sc2 += c * c; ss2 += s * s;
  }
  m.re = sc / n;
  m.im = ss / n;
  m.se_re = std::sqrt(std::max(sc2 / n - m.re * m.re, 0.0) / n);
  m.se_im = std::sqrt(std::max(ss2 / n - m.im * m.im, 0.0) / n);
  return m;
}

/// Monte Carlo check of the conditioning construction: draw from the 2D
/// Gaussian, keep samples whose radius falls in [r0 - half_width, r0 +
/// half_width], and return the TV distance between the binned angular
/// histogram and the claimed von Mises law.
inline double conditioned_gaussian_tv(double phi, double d, double sigma2,
                                      double r0, double half_width,
                                      std::size_t n_accepted, RngStream& rng,
                                      int n_bins = 64) {
  std::vector<double> counts(n_bins, 0.0);
  std::size_t accepted = 0;
  double mx = d * std::cos(phi), my = d * std::sin(phi);
  while (accepted < n_accepted) {
    double x = rng.normal(mx, sigma2);
    double y = rng.normal(my, sigma2);
    double r = std::hypot(x, y);
    if (std::abs(r - r0) <= half_width) {
      double theta = std::atan2(y, x);
      int b = static_cast<int>((theta + kPi) / kTwoPi * n_bins);
      counts[std::clamp(b, 0, n_bins - 1)] += 1.0;
      ++accepted;
    }
  }
  for (double& c : counts) c /= static_cast<double>(n_accepted);
  auto expected = vm_bin_masses(phi, r0 * d / sigma2, n_bins);
  return total_variation(counts, expected);
}

}  // namespace locsim::oracle
