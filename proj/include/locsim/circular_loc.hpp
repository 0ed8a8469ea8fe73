#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "locsim/circstats.hpp"
#include "locsim/mixture_loc.hpp"
#include "locsim/scalar_filters.hpp"
#include "locsim/types.hpp"

namespace locsim {

/// Closed interval on one axis, in meters.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double l, double h) : lo(l), hi(h) {
    if (!std::isfinite(l) || !std::isfinite(h) || !(l < h))
      throw std::domain_error("Interval: requires finite lo < hi");
  }
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Bank of spatial periods lambda_1 < ... < lambda_M with a constant ratio
/// between adjacent modules (3/2 by default in the scenario configs).
class ModuleBank {
 public:
  explicit ModuleBank(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.empty()) throw std::domain_error("ModuleBank: needs at least one module");
    for (double l : lambdas_)
      if (!(l > 0.0) || !std::isfinite(l))
        throw std::domain_error("ModuleBank: spatial periods must be positive and finite");
    for (std::size_t i = 1; i < lambdas_.size(); ++i)
      if (!(lambdas_[i] > lambdas_[i - 1]))
        throw std::domain_error("ModuleBank: spatial periods must be strictly increasing");
    if (lambdas_.size() >= 3) {
      double ratio = lambdas_[1] / lambdas_[0];
      for (std::size_t i = 2; i < lambdas_.size(); ++i) {
        double r = lambdas_[i] / lambdas_[i - 1];
        if (std::abs(r - ratio) > 1e-9 * ratio)
          throw std::domain_error("ModuleBank: adjacent-module ratio must be constant");
      }
    }
  }

  static ModuleBank geometric(double lambda1, double ratio, int count) {
    if (count < 1) throw std::domain_error("ModuleBank: count must be >= 1");
    if (!(ratio > 1.0)) throw std::domain_error("ModuleBank: ratio must be > 1");
    std::vector<double> l(count);
    double cur = lambda1;
    for (int i = 0; i < count; ++i) {
      l[i] = cur;
      cur *= ratio;
    }
    return ModuleBank(std::move(l));
  }

  const std::vector<double>& lambdas() const { return lambdas_; }
  std::size_t size() const { return lambdas_.size(); }
  double largest() const { return lambdas_.back(); }

  /// Smallest length that is an integer multiple of every period
  /// (the span over which joint decoding is unique), +inf if none is found
  /// within the search bound.
  double unique_coverage() const {
    for (int k = 1; k <= 1000000; ++k) {
      double L = k * lambdas_.back();
      bool ok = true;
      for (double l : lambdas_) {
        double m = L / l;
        if (std::abs(m - std::round(m)) > 1e-6) {
          ok = false;
          break;
        }
      }
      if (ok) return L;
    }
    return std::numeric_limits<double>::infinity();
  }

 private:
  std::vector<double> lambdas_;
};

/// The single conversion between a Cartesian variance and a per-module phase
/// concentration: kappa = lambda^2 / (4 pi^2 variance). Zero variance maps to
/// the noise-free +inf accepted by vmf_time.
inline double kappa_for_scale(double lambda, double variance) {
  return lambda * lambda / (4.0 * kPi * kPi * variance);
}

/// Fully circular state belief: heading plus per-module phases on both axes.
struct CircularBelief {
  VonMises heading;
  std::vector<VonMises> phi;  // x-axis phases, one per module
  std::vector<VonMises> psi;  // y-axis phases
  ModuleBank bank;
  Interval cx;  // coverage, x-axis
  Interval cy;  // coverage, y-axis

  CircularBelief(VonMises h, std::vector<VonMises> phases_x,
                 std::vector<VonMises> phases_y, ModuleBank modules,
                 Interval coverage_x, Interval coverage_y)
      : heading(h),
        phi(std::move(phases_x)),
        psi(std::move(phases_y)),
        bank(std::move(modules)),
        cx(coverage_x),
        cy(coverage_y) {
    if (phi.size() != bank.size() || psi.size() != bank.size())
      throw std::domain_error("CircularBelief: one phase per module per axis");
    // Coverage wider than the unique-decoding span is representable (the
    // readout tie-break resolves the ambiguity deterministically), but
    // make_circular_belief rejects it for estimation use.
  }
};

/// Phase encoding of one coordinate: phi_i = wrap(2 pi x / lambda_i).
inline std::vector<double> encode_axis(double pos, const ModuleBank& bank,
                                       const Interval& coverage) {
  if (!coverage.contains(pos))
    throw std::domain_error("encode: position outside the coverage interval");
  std::vector<double> phases(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i)
    phases[i] = wrap_angle(kTwoPi * pos / bank.lambdas()[i]);
  return phases;
}

struct PhasePair {
  std::vector<double> phi;
  std::vector<double> psi;
};

inline PhasePair encode(double x, double y, const ModuleBank& bank,
                        const Interval& cx, const Interval& cy) {
  return PhasePair{encode_axis(x, bank, cx), encode_axis(y, bank, cy)};
}

/// Belief centered on a pose, with phase concentrations derived from a
/// Cartesian position variance through kappa_for_scale.
inline CircularBelief make_circular_belief(const Pose2& pose, double kappa_heading,
                                           double sigma2_pos, ModuleBank bank,
                                           Interval cx, Interval cy) {
  double unique = bank.unique_coverage();
  if (cx.length() > unique + 1e-9 || cy.length() > unique + 1e-9)
    throw std::domain_error(
        "make_circular_belief: coverage exceeds the unique-decoding span");
  PhasePair p = encode(pose.x, pose.y, bank, cx, cy);
  std::vector<VonMises> phi, psi;
  phi.reserve(bank.size());
  psi.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    double k = kappa_for_scale(bank.lambdas()[i], sigma2_pos);
    phi.emplace_back(p.phi[i], k);
    psi.emplace_back(p.psi[i], k);
  }
  return CircularBelief(VonMises(pose.theta, kappa_heading), std::move(phi),
                        std::move(psi), std::move(bank), cx, cy);
}

/// Maximum-likelihood readout over a coverage grid. The grid trigonometric
/// tables depend only on (bank, coverage, resolution), so one instance is
/// reused across decodes; scoring a belief is then a pair of dot products
/// per module.
class ReadoutGrid {
 public:
  ReadoutGrid(const ModuleBank& bank, Interval coverage, double resolution)
      : lambdas_(bank.lambdas()), coverage_(coverage), resolution_(resolution) {
    if (!(resolution > 0.0)) throw std::domain_error("ReadoutGrid: resolution must be > 0");
    std::size_t n = static_cast<std::size_t>(
                        std::floor(coverage.length() / resolution + 1e-9)) + 1;
    xs_.resize(n);
    for (std::size_t j = 0; j < n; ++j) xs_[j] = coverage.lo + j * resolution;
    if (xs_.back() < coverage.hi - 1e-9 * resolution) xs_.push_back(coverage.hi);
    cos_.resize(lambdas_.size() * xs_.size());
    sin_.resize(lambdas_.size() * xs_.size());
    for (std::size_t i = 0; i < lambdas_.size(); ++i) {
      double w = kTwoPi / lambdas_[i];
      for (std::size_t j = 0; j < xs_.size(); ++j) {
        cos_[i * xs_.size() + j] = std::cos(w * xs_[j]);
        sin_[i * xs_.size() + j] = std::sin(w * xs_[j]);
      }
    }
  }

  /// argmax_x sum_i kappa_i cos(2 pi x / lambda_i - phase_i), ties broken
  /// toward smallest |x| then smallest x, refined by one golden-section pass
  /// around the winning cell.
  double decode(std::span<const VonMises> phases) const {
    if (phases.size() != lambdas_.size())
      throw std::domain_error("ReadoutGrid: phase count does not match the bank");
    double total_kappa = 0.0;
    for (const VonMises& p : phases) total_kappa += p.kappa;
    if (total_kappa <= 0.0)
      throw no_information_error("readout: all phase concentrations are zero");

    const std::size_t m = lambdas_.size(), n = xs_.size();
    std::vector<double> wc(m), ws(m);
    for (std::size_t i = 0; i < m; ++i) {
      wc[i] = phases[i].kappa * std::cos(phases[i].mu);
      ws[i] = phases[i].kappa * std::sin(phases[i].mu);
    }
    double best_score = -std::numeric_limits<double>::infinity();
    double best_x = xs_.front();
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        s += wc[i] * cos_[i * n + j] + ws[i] * sin_[i * n + j];
      double tie_eps = 8.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(best_score));
      if (s > best_score + tie_eps) {
        best_score = s;
        best_x = xs_[j];
      } else if (s >= best_score - tie_eps) {
        double x = xs_[j];
        if (std::abs(x) < std::abs(best_x) - 1e-15 ||
            (std::abs(std::abs(x) - std::abs(best_x)) <= 1e-15 && x < best_x)) {
          best_score = std::max(best_score, s);
          best_x = x;
        }
      }
    }
    return refine(best_x, phases);
  }

  double score_at(double x, std::span<const VonMises> phases) const {
    double s = 0.0;
    for (std::size_t i = 0; i < lambdas_.size(); ++i)
      s += phases[i].kappa * std::cos(kTwoPi / lambdas_[i] * x - phases[i].mu);
    return s;
  }

  const std::vector<double>& grid() const { return xs_; }

 private:
  // Golden-section maximization on [best - res, best + res] clipped to the
  // coverage; one pass down to ~resolution/1000.
  double refine(double center, std::span<const VonMises> phases) const {
    double a = std::max(coverage_.lo, center - resolution_);
    double b = std::min(coverage_.hi, center + resolution_);
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = score_at(x1, phases), f2 = score_at(x2, phases);
    while (b - a > resolution_ * 1e-3) {
      if (f1 >= f2) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = score_at(x1, phases);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = score_at(x2, phases);
      }
    }
    double mid = 0.5 * (a + b);
    // Keep the grid winner if the local polish did not actually beat it
    // (protects the tie-break on plateaus).
    return score_at(mid, phases) > score_at(center, phases) ? mid : center;
  }

  std::vector<double> lambdas_;
  Interval coverage_;
  double resolution_;
  std::vector<double> xs_;
  std::vector<double> cos_, sin_;
};

enum class Axis { x, y };

/// Spec-level readout of one axis; builds a grid on the fly. Hot paths keep a
/// ReadoutGrid instance instead.
inline double readout(const CircularBelief& b, Axis axis, double resolution = 0.005) {
  const Interval& c = axis == Axis::x ? b.cx : b.cy;
  ReadoutGrid grid(b.bank, c, resolution);
  return grid.decode(axis == Axis::x ? std::span<const VonMises>(b.phi)
                                     : std::span<const VonMises>(b.psi));
}

/// Time update of the fully circular belief: the heading exactly as in the
/// mixture algorithm; each phase through the von Mises filter with the
/// moment-matched increment scaled by 2 pi / lambda_i and the phase-noise
/// concentration lambda_i^2 / (4 pi^2 dt^2 (sigma_v^2 + v^2)).
inline CircularBelief time_update(const CircularBelief& b, const OdometryInput& u,
                                  const NoiseParams& n) {
  if (!(u.dt > 0.0)) throw std::domain_error("time_update: dt must be > 0");
  double kappa_t = b.heading.kappa;
  double theta_bar = b.heading.mu;

  CircularBelief out = b;
  out.heading = vmf_time(b.heading, u.omega * u.dt,
                         detail::heading_process_kappa(n.sigma_omega2, u.dt));
  double base = u.v * u.dt * a_func(kappa_t);
  double var_w = (n.sigma_v2 + u.v * u.v) * u.dt * u.dt;
  for (std::size_t i = 0; i < b.bank.size(); ++i) {
    double lam = b.bank.lambdas()[i];
    double kw = kappa_for_scale(lam, var_w);
    double scale = kTwoPi / lam;
    out.phi[i] = vmf_time(b.phi[i], scale * base * std::cos(theta_bar), kw);
    out.psi[i] = vmf_time(b.psi[i], scale * base * std::sin(theta_bar), kw);
  }
  return out;
}

/// Direct-measurement update: the Cartesian position observation is mapped to
/// per-module phase observations with concentration lambda_i^2/(4 pi^2 sigma2).
inline CircularBelief obsv_direct(const CircularBelief& b, double o_theta,
                                  double o_x, double o_y, const NoiseParams& n) {
  CircularBelief out = b;
  out.heading = vmf_obsv(b.heading, o_theta, n.kappa_nu_theta);
  for (std::size_t i = 0; i < b.bank.size(); ++i) {
    double lam = b.bank.lambdas()[i];
    out.phi[i] = vmf_obsv(b.phi[i], wrap_angle(kTwoPi * o_x / lam),
                          kappa_for_scale(lam, n.sigma2_ox));
    out.psi[i] = vmf_obsv(b.psi[i], wrap_angle(kTwoPi * o_y / lam),
                          kappa_for_scale(lam, n.sigma2_oy));
  }
  return out;
}

/// Bearing/distance update. Position is read out first; the heading is
/// replaced by the equivalent orientation measurement with the position
/// variance proxied by the reciprocal concentration of the largest-scale
/// module (the larger of the two axes); the equivalent Cartesian position
/// observations are fused per module with the conservative variance
/// sigma_r^2 + s_r^2.
inline CircularBelief obsv_bearing_distance(const CircularBelief& b, const Landmark& lm,
                                            double s_b, double s_r, const NoiseParams& n,
                                            const ReadoutGrid& grid_x,
                                            const ReadoutGrid& grid_y) {
  double x_bar = grid_x.decode(b.phi);
  double y_bar = grid_y.decode(b.psi);

  double kx = b.phi.back().kappa, ky = b.psi.back().kappa;
  double var_proxy = std::max(kx > 0.0 ? 1.0 / kx : std::numeric_limits<double>::infinity(),
                              ky > 0.0 ? 1.0 / ky : std::numeric_limits<double>::infinity());
  VonMises replacement =
      detail::equivalent_orientation_from(x_bar, y_bar, var_proxy, lm, s_b, s_r, n);

  double attenuation = a_func(b.heading.kappa) * a_func(n.kappa_b);
  double heading_obs = b.heading.mu + s_b;
  double o_x = lm.x - s_r * attenuation * std::cos(heading_obs);
  double o_y = lm.y - s_r * attenuation * std::sin(heading_obs);
  double var_o = n.sigma_r2 + s_r * s_r;

  CircularBelief out = b;
  for (std::size_t i = 0; i < b.bank.size(); ++i) {
    double lam = b.bank.lambdas()[i];
    double kv = kappa_for_scale(lam, var_o);
    out.phi[i] = vmf_obsv(b.phi[i], wrap_angle(kTwoPi * o_x / lam), kv);
    out.psi[i] = vmf_obsv(b.psi[i], wrap_angle(kTwoPi * o_y / lam), kv);
  }
  out.heading = replacement;
  return out;
}

/// Convenience overload building the grids ad hoc.
inline CircularBelief obsv_bearing_distance(const CircularBelief& b, const Landmark& lm,
                                            double s_b, double s_r, const NoiseParams& n,
                                            double resolution = 0.005) {
  ReadoutGrid gx(b.bank, b.cx, resolution);
  ReadoutGrid gy(b.bank, b.cy, resolution);
  return obsv_bearing_distance(b, lm, s_b, s_r, n, gx, gy);
}

}  // namespace locsim
