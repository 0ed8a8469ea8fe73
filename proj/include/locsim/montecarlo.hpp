#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "locsim/baselines.hpp"
#include "locsim/circular_loc.hpp"
#include "locsim/config.hpp"
#include "locsim/mixture_loc.hpp"
#include "locsim/sim.hpp"

namespace locsim {

/// Per-step error trace of one algorithm in one trial. theta_err is the
/// wrapped absolute heading error in [0, pi]; pos_err the Euclidean distance.
struct AlgTrace {
  std::vector<double> theta_err;
  std::vector<double> pos_err;
  bool ok = true;
  std::string failure;
};

struct TrialResult {
  std::map<Algorithm, AlgTrace> traces;
};

/// The noise realization of one trial: poses after each step and the
/// measurement taken on observation steps. All algorithms replay this exact
/// data (common random numbers).
struct TruthData {
  std::vector<Pose2> poses;                       // poses[k] = pose after step k+1
  std::vector<std::optional<BearingRange>> obs;   // aligned with poses
};

inline TruthData generate_truth(const TrialConfig& cfg, std::uint64_t trial) {
  TruthData data;
  int n = cfg.steps();
  int every = cfg.obs_every();
  data.poses.reserve(n);
  data.obs.resize(n);
  TruthStreams process(cfg.seed, trial);
  SensorStreams sensors(cfg.seed, trial);
  OdometryInput u{cfg.omega, cfg.v, cfg.dt};
  Pose2 pose = cfg.pose0;
  for (int step = 1; step <= n; ++step) {
    pose = truth_step(pose, u, cfg.noise, cfg.heading_noise, process);
    data.poses.push_back(pose);
    if (every > 0 && step % every == 0)
      data.obs[step - 1] = sense(pose, cfg.landmark, cfg.noise, sensors);
  }
  return data;
}

namespace detail {

inline void record(AlgTrace& t, double est_theta, double est_x, double est_y,
                   const Pose2& truth) {
  t.theta_err.push_back(angle_abs_diff(est_theta, truth.theta));
  t.pos_err.push_back(std::hypot(est_x - truth.x, est_y - truth.y));
}

inline AlgTrace replay_mixture(const TrialConfig& cfg, const TruthData& truth) {
  AlgTrace trace;
  OdometryInput u{cfg.omega, cfg.v, cfg.dt};
  MixtureBelief b{VonMises(cfg.pose0.theta, cfg.kappa0),
                  KfState(cfg.pose0.x, cfg.sigma2_0),
                  KfState(cfg.pose0.y, cfg.sigma2_0)};
  try {
    for (std::size_t k = 0; k < truth.poses.size(); ++k) {
      b = time_update(b, u, cfg.noise);
      if (truth.obs[k])
        b = obsv_bearing_distance(b, cfg.landmark, truth.obs[k]->bearing,
                                  truth.obs[k]->range, cfg.noise);
      record(trace, b.heading.mu, b.x.mean, b.y.mean, truth.poses[k]);
    }
  } catch (const std::exception& e) {
    trace.ok = false;
    trace.failure = e.what();
  }
  return trace;
}

inline AlgTrace replay_circular(const TrialConfig& cfg, const TruthData& truth,
                                const ReadoutGrid& gx, const ReadoutGrid& gy) {
  AlgTrace trace;
  OdometryInput u{cfg.omega, cfg.v, cfg.dt};
  CircularBelief b = make_circular_belief(cfg.pose0, cfg.kappa0, cfg.sigma2_0,
                                          cfg.bank(), cfg.coverage(), cfg.coverage());
  try {
    for (std::size_t k = 0; k < truth.poses.size(); ++k) {
      b = time_update(b, u, cfg.noise);
      if (truth.obs[k])
        b = obsv_bearing_distance(b, cfg.landmark, truth.obs[k]->bearing,
                                  truth.obs[k]->range, cfg.noise, gx, gy);
      record(trace, b.heading.mu, gx.decode(b.phi), gy.decode(b.psi),
             truth.poses[k]);
    }
  } catch (const std::exception& e) {
    trace.ok = false;
    trace.failure = e.what();
  }
  return trace;
}

inline AlgTrace replay_ekf(const TrialConfig& cfg, const TruthData& truth) {
  AlgTrace trace;
  OdometryInput u{cfg.omega, cfg.v, cfg.dt};
  EkfBelief b;
  b.mean << cfg.pose0.theta, cfg.pose0.x, cfg.pose0.y;
  b.cov = Eigen::Vector3d(1.0 / cfg.kappa0, cfg.sigma2_0, cfg.sigma2_0).asDiagonal();
  try {
    for (std::size_t k = 0; k < truth.poses.size(); ++k) {
      b = ekf_step(b, u, truth.obs[k], cfg.landmark, cfg.noise);
      record(trace, b.mean(0), b.mean(1), b.mean(2), truth.poses[k]);
    }
  } catch (const std::exception& e) {
    trace.ok = false;
    trace.failure = e.what();
  }
  return trace;
}

inline AlgTrace replay_lgekf(const TrialConfig& cfg, const TruthData& truth) {
  AlgTrace trace;
  OdometryInput u{cfg.omega, cfg.v, cfg.dt};
  SE2Belief b;
  b.mean = Se2::from_pose(cfg.pose0.theta, cfg.pose0.x, cfg.pose0.y);
  b.cov = Eigen::Vector3d(1.0 / cfg.kappa0, cfg.sigma2_0, cfg.sigma2_0).asDiagonal();
  try {
    for (std::size_t k = 0; k < truth.poses.size(); ++k) {
      b = lgekf_step(b, u, truth.obs[k], cfg.landmark, cfg.noise);
      record(trace, b.mean.theta(), b.mean.t.x(), b.mean.t.y(), truth.poses[k]);
    }
  } catch (const std::exception& e) {
    trace.ok = false;
    trace.failure = e.what();
  }
  return trace;
}

}  // namespace detail

/// Run the selected algorithms against one trial's noise realization.
/// A filter error aborts that algorithm for the trial and is recorded; the
/// remaining algorithms continue on the shared data.
inline TrialResult run_trial(const TrialConfig& cfg, std::uint64_t trial) {
  TruthData truth = generate_truth(cfg, trial);
  TrialResult result;
  for (Algorithm alg : cfg.algorithms) {
    switch (alg) {
      case Algorithm::mixture:
        result.traces[alg] = detail::replay_mixture(cfg, truth);
        break;
      case Algorithm::circular: {
        ReadoutGrid gx(cfg.bank(), cfg.coverage(), cfg.readout_resolution);
        ReadoutGrid gy(cfg.bank(), cfg.coverage(), cfg.readout_resolution);
        result.traces[alg] = detail::replay_circular(cfg, truth, gx, gy);
        break;
      }
      case Algorithm::ekf:
        result.traces[alg] = detail::replay_ekf(cfg, truth);
        break;
      case Algorithm::lgekf:
        result.traces[alg] = detail::replay_lgekf(cfg, truth);
        break;
    }
  }
  return result;
}

/// Per-algorithm aggregate over trials.
struct AlgSummary {
  std::vector<double> theta_mean, theta_std, pos_mean, pos_std;  // per step
  int trials_ok = 0;
  std::vector<std::string> failures;  // "trial k: reason"

  // Time averages over the summary window.
  double window_theta_mean = 0.0, window_theta_std = 0.0;
  double window_pos_mean = 0.0, window_pos_std = 0.0;
};

struct McSummary {
  std::vector<double> times;  // per recorded step
  double window_start = 0.0, window_end = 0.0;
  std::map<Algorithm, AlgSummary> algs;
};

/// Monte Carlo over cfg.trials trials; per-step mean and standard deviation
/// (across trials) of both error metrics, per algorithm.
inline McSummary run_monte_carlo(const TrialConfig& cfg) {
  validate(cfg);
  const int n = cfg.steps();
  McSummary out;
  out.times.resize(n);
  for (int k = 0; k < n; ++k) out.times[k] = (k + 1) * cfg.dt;
  out.window_start = std::min(10.0, cfg.duration / 3.0);
  out.window_end = cfg.duration;

  std::map<Algorithm, std::vector<AlgTrace>> traces;
  for (Algorithm a : cfg.algorithms) traces[a] = {};

  // Grids are trial-independent; build once when the circular filter runs.
  std::optional<ReadoutGrid> gx, gy;
  for (Algorithm a : cfg.algorithms) {
    if (a == Algorithm::circular) {
      gx.emplace(cfg.bank(), cfg.coverage(), cfg.readout_resolution);
      gy.emplace(cfg.bank(), cfg.coverage(), cfg.readout_resolution);
    }
  }

  for (int trial = 0; trial < cfg.trials; ++trial) {
    TruthData truth = generate_truth(cfg, static_cast<std::uint64_t>(trial));
    for (Algorithm alg : cfg.algorithms) {
      AlgTrace t;
      switch (alg) {
        case Algorithm::mixture: t = detail::replay_mixture(cfg, truth); break;
        case Algorithm::circular: t = detail::replay_circular(cfg, truth, *gx, *gy); break;
        case Algorithm::ekf: t = detail::replay_ekf(cfg, truth); break;
        case Algorithm::lgekf: t = detail::replay_lgekf(cfg, truth); break;
      }
      traces[alg].push_back(std::move(t));
    }
  }

  for (Algorithm alg : cfg.algorithms) {
    AlgSummary s;
    s.theta_mean.assign(n, 0.0);
    s.theta_std.assign(n, 0.0);
    s.pos_mean.assign(n, 0.0);
    s.pos_std.assign(n, 0.0);
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const AlgTrace& t = traces[alg][trial];
      if (!t.ok) {
        s.failures.push_back("trial " + std::to_string(trial) + ": " + t.failure);
        continue;
      }
      ++s.trials_ok;
    }
    if (s.trials_ok > 0) {
      for (int k = 0; k < n; ++k) {
        double sum_t = 0.0, sum_t2 = 0.0, sum_p = 0.0, sum_p2 = 0.0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
          const AlgTrace& t = traces[alg][trial];
          if (!t.ok) continue;
          sum_t += t.theta_err[k];
          sum_t2 += t.theta_err[k] * t.theta_err[k];
          sum_p += t.pos_err[k];
          sum_p2 += t.pos_err[k] * t.pos_err[k];
        }
        double m = static_cast<double>(s.trials_ok);
        s.theta_mean[k] = sum_t / m;
        s.pos_mean[k] = sum_p / m;
        if (s.trials_ok > 1) {
          s.theta_std[k] = std::sqrt(std::max(
              (sum_t2 - m * s.theta_mean[k] * s.theta_mean[k]) / (m - 1.0), 0.0));
          s.pos_std[k] = std::sqrt(std::max(
              (sum_p2 - m * s.pos_mean[k] * s.pos_mean[k]) / (m - 1.0), 0.0));
        }
      }
      int count = 0;
      for (int k = 0; k < n; ++k) {
        if (out.times[k] < out.window_start - 1e-9) continue;
        s.window_theta_mean += s.theta_mean[k];
        s.window_theta_std += s.theta_std[k];
        s.window_pos_mean += s.pos_mean[k];
        s.window_pos_std += s.pos_std[k];
        ++count;
      }
      if (count > 0) {
        s.window_theta_mean /= count;
        s.window_theta_std /= count;
        s.window_pos_mean /= count;
        s.window_pos_std /= count;
      }
    }
    out.algs[alg] = std::move(s);
  }
  return out;
}

namespace detail {

inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

/// Write trace_<alg>.csv, summary.txt and manifest.txt into out_dir.
inline void write_outputs(const McSummary& summary, const TrialConfig& cfg,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [alg, s] : summary.algs) {
    std::ofstream csv(out_dir / ("trace_" + std::string(algorithm_name(alg)) + ".csv"),
                      std::ios::binary);
    csv << "t,theta_err_mean,theta_err_std,pos_err_mean,pos_err_std\n";
    for (std::size_t k = 0; k < summary.times.size(); ++k) {
      csv << detail::fmt9(summary.times[k]) << ',' << detail::fmt9(s.theta_mean[k])
          << ',' << detail::fmt9(s.theta_std[k]) << ',' << detail::fmt9(s.pos_mean[k])
          << ',' << detail::fmt9(s.pos_std[k]) << '\n';
    }
  }

  std::ofstream sum(out_dir / "summary.txt", std::ios::binary);
  sum << "# time-averaged errors over t in [" << detail::fmt9(summary.window_start)
      << ", " << detail::fmt9(summary.window_end) << "] s\n";
  sum << "# algorithm theta_err_mean theta_err_std pos_err_mean pos_err_std "
         "trials_ok trials_failed\n";
  for (const auto& [alg, s] : summary.algs) {
    sum << algorithm_name(alg) << ' ' << detail::fmt9(s.window_theta_mean) << ' '
        << detail::fmt9(s.window_theta_std) << ' ' << detail::fmt9(s.window_pos_mean)
        << ' ' << detail::fmt9(s.window_pos_std) << ' ' << s.trials_ok << ' '
        << s.failures.size() << '\n';
  }
  bool any_fail = false;
  for (const auto& [alg, s] : summary.algs) {
    for (const std::string& f : s.failures) {
      sum << "# failure " << algorithm_name(alg) << " " << f << '\n';
      any_fail = true;
    }
  }
  if (!any_fail) sum << "# failures: none\n";

  std::ofstream man(out_dir / "manifest.txt", std::ios::binary);
  man << config_echo(cfg);
}

}  // namespace locsim
