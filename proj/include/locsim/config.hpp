#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "locsim/circular_loc.hpp"
#include "locsim/sim.hpp"
#include "locsim/types.hpp"

namespace locsim {

enum class Algorithm { mixture, circular, ekf, lgekf };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::mixture: return "mixture";
    case Algorithm::circular: return "circular";
    case Algorithm::ekf: return "ekf";
    case Algorithm::lgekf: return "lgekf";
  }
  return "?";
}

/// Full description of one Monte Carlo scenario. Defaults reproduce the
/// reference comparison shipped as configs/paper_fig2.cfg.
struct TrialConfig {
  double dt = 0.02;        // s (50 Hz time updates)
  double duration = 30.0;  // s
  std::uint64_t seed = 1;
  int trials = 50;

  double omega = 0.2;  // rad/s
  double v = 0.1;      // m/s

  NoiseParams noise{/*sigma_omega2=*/10.0, /*sigma_v2=*/1e-4,
                    /*kappa_nu_theta=*/100.0, /*sigma2_ox=*/0.01,
                    /*sigma2_oy=*/0.01, /*kappa_b=*/500.0,
                    /*sigma_r2=*/1e-4};

  double obs_rate_hz = 2.5;
  Landmark landmark{2.0, 3.0};

  std::vector<Algorithm> algorithms{Algorithm::mixture, Algorithm::circular,
                                    Algorithm::ekf, Algorithm::lgekf};

  double lambda1 = 2.5;
  double module_ratio = 1.5;
  int module_count = 4;
  double coverage_min = -5.0;
  double coverage_max = 5.0;

  Pose2 pose0{0.0, 0.0, 0.0};
  double kappa0 = 100.0;
  double sigma2_0 = 0.01;

  double readout_resolution = 0.005;
  HeadingNoiseModel heading_noise = HeadingNoiseModel::von_mises;

  int steps() const { return static_cast<int>(std::llround(duration / dt)); }

  /// Steps between observations; 0 disables sensing.
  int obs_every() const {
    if (obs_rate_hz <= 0.0) return 0;
    return static_cast<int>(std::llround(1.0 / (obs_rate_hz * dt)));
  }

  ModuleBank bank() const {
    return ModuleBank::geometric(lambda1, module_ratio, module_count);
  }
  Interval coverage() const { return Interval(coverage_min, coverage_max); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  }
  if (pos != value.size())
    throw std::invalid_argument("config: trailing junk for " + key + ": '" + value + "'");
  return out;
}

inline std::vector<Algorithm> parse_algorithms(const std::string& value) {
  std::vector<Algorithm> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "mixture") out.push_back(Algorithm::mixture);
    else if (item == "circular") out.push_back(Algorithm::circular);
    else if (item == "ekf") out.push_back(Algorithm::ekf);
    else if (item == "lgekf") out.push_back(Algorithm::lgekf);
    else throw std::invalid_argument("config: unknown algorithm '" + item + "'");
  }
  if (out.empty()) throw std::invalid_argument("config: empty algorithm list");
  return out;
}

}  // namespace detail

/// Parse `section.key = value` lines over the built-in defaults. `#` starts a
/// comment; unknown keys are rejected.
inline TrialConfig parse_config(std::istream& in) {
  TrialConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));

    if (key == "sim.dt") cfg.dt = detail::parse_double(key, value);
    else if (key == "sim.duration") cfg.duration = detail::parse_double(key, value);
    else if (key == "sim.seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_double(key, value));
    else if (key == "sim.trials") cfg.trials = static_cast<int>(detail::parse_double(key, value));
    else if (key == "odometry.omega") cfg.omega = detail::parse_double(key, value);
    else if (key == "odometry.v") cfg.v = detail::parse_double(key, value);
    else if (key == "noise.sigma_omega2") cfg.noise.sigma_omega2 = detail::parse_double(key, value);
    else if (key == "noise.sigma_v2") cfg.noise.sigma_v2 = detail::parse_double(key, value);
    else if (key == "obs.rate_hz") cfg.obs_rate_hz = detail::parse_double(key, value);
    else if (key == "obs.kappa_b") cfg.noise.kappa_b = detail::parse_double(key, value);
    else if (key == "obs.sigma_r2") cfg.noise.sigma_r2 = detail::parse_double(key, value);
    else if (key == "obs.kappa_nu_theta") cfg.noise.kappa_nu_theta = detail::parse_double(key, value);
    else if (key == "obs.sigma2_ox") cfg.noise.sigma2_ox = detail::parse_double(key, value);
    else if (key == "obs.sigma2_oy") cfg.noise.sigma2_oy = detail::parse_double(key, value);
    else if (key == "landmark.x") cfg.landmark.x = detail::parse_double(key, value);
    else if (key == "landmark.y") cfg.landmark.y = detail::parse_double(key, value);
    else if (key == "run.algorithms") cfg.algorithms = detail::parse_algorithms(value);
    else if (key == "modules.lambda1") cfg.lambda1 = detail::parse_double(key, value);
    else if (key == "modules.ratio") cfg.module_ratio = detail::parse_double(key, value);
    else if (key == "modules.count") cfg.module_count = static_cast<int>(detail::parse_double(key, value));
    else if (key == "coverage.min") cfg.coverage_min = detail::parse_double(key, value);
    else if (key == "coverage.max") cfg.coverage_max = detail::parse_double(key, value);
    else if (key == "init.theta0") cfg.pose0 = Pose2(detail::parse_double(key, value), cfg.pose0.x, cfg.pose0.y);
    else if (key == "init.x0") cfg.pose0 = Pose2(cfg.pose0.theta, detail::parse_double(key, value), cfg.pose0.y);
    else if (key == "init.y0") cfg.pose0 = Pose2(cfg.pose0.theta, cfg.pose0.x, detail::parse_double(key, value));
    else if (key == "init.kappa0") cfg.kappa0 = detail::parse_double(key, value);
    else if (key == "init.sigma2_0") cfg.sigma2_0 = detail::parse_double(key, value);
    else if (key == "readout.resolution") cfg.readout_resolution = detail::parse_double(key, value);
    else if (key == "truth.heading_noise") {
      if (value == "vm") cfg.heading_noise = HeadingNoiseModel::von_mises;
      else if (value == "gaussian") cfg.heading_noise = HeadingNoiseModel::gaussian;
      else throw std::invalid_argument("config: truth.heading_noise must be vm|gaussian");
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline TrialConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  return parse_config(in);
}

/// Sanity checks beyond per-field parsing; throws std::invalid_argument.
inline void validate(const TrialConfig& cfg) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (!(cfg.dt > 0.0)) fail("sim.dt must be > 0");
  if (!(cfg.duration > 0.0)) fail("sim.duration must be > 0");
  if (cfg.trials < 1) fail("sim.trials must be >= 1");
  if (!(cfg.noise.sigma_omega2 >= 0.0)) fail("noise.sigma_omega2 must be >= 0");
  if (!(cfg.noise.sigma_v2 >= 0.0)) fail("noise.sigma_v2 must be >= 0");
  if (cfg.obs_rate_hz < 0.0) fail("obs.rate_hz must be >= 0");
  if (cfg.obs_rate_hz > 1.0 / cfg.dt + 1e-9) fail("obs.rate_hz must be <= 1/dt");
  if (!(cfg.noise.kappa_b >= 0.0) || !std::isfinite(cfg.noise.kappa_b))
    fail("obs.kappa_b must be finite and >= 0 (use a large proxy for zero noise)");
  if (!(cfg.noise.sigma_r2 >= 0.0)) fail("obs.sigma_r2 must be >= 0");
  if (!(cfg.kappa0 > 0.0) || !std::isfinite(cfg.kappa0)) fail("init.kappa0 must be positive and finite");
  if (!(cfg.sigma2_0 > 0.0)) fail("init.sigma2_0 must be > 0");
  if (!(cfg.readout_resolution > 0.0)) fail("readout.resolution must be > 0");
  if (!(cfg.coverage_min < cfg.coverage_max)) fail("coverage.min must be < coverage.max");
  if (cfg.module_count < 1) fail("modules.count must be >= 1");
  if (!(cfg.lambda1 > 0.0)) fail("modules.lambda1 must be > 0");
  if (!(cfg.module_ratio > 1.0)) fail("modules.ratio must be > 1");
  if (cfg.algorithms.empty()) fail("run.algorithms must not be empty");
  if (!Interval(cfg.coverage_min, cfg.coverage_max).contains(cfg.pose0.x) ||
      !Interval(cfg.coverage_min, cfg.coverage_max).contains(cfg.pose0.y))
    fail("initial position must lie inside the coverage interval");
  // Constructible module bank and belief (throws with its own message).
  (void)cfg.bank();
}

/// Canonical key=value echo of the resolved configuration (manifest body).
inline std::string config_echo(const TrialConfig& cfg) {
  char buf[128];
  std::string out;
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s = %.17g\n", key, v);
    out += buf;
  };
  put("sim.dt", cfg.dt);
  put("sim.duration", cfg.duration);
  std::snprintf(buf, sizeof(buf), "sim.seed = %llu\n",
                static_cast<unsigned long long>(cfg.seed));
  out += buf;
  std::snprintf(buf, sizeof(buf), "sim.trials = %d\n", cfg.trials);
  out += buf;
  put("odometry.omega", cfg.omega);
  put("odometry.v", cfg.v);
  put("noise.sigma_omega2", cfg.noise.sigma_omega2);
  put("noise.sigma_v2", cfg.noise.sigma_v2);
  put("obs.rate_hz", cfg.obs_rate_hz);
  put("obs.kappa_b", cfg.noise.kappa_b);
  put("obs.sigma_r2", cfg.noise.sigma_r2);
  put("obs.kappa_nu_theta", cfg.noise.kappa_nu_theta);
  put("obs.sigma2_ox", cfg.noise.sigma2_ox);
  put("obs.sigma2_oy", cfg.noise.sigma2_oy);
  put("landmark.x", cfg.landmark.x);
  put("landmark.y", cfg.landmark.y);
  out += "run.algorithms = ";
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
    if (i) out += ",";
    out += algorithm_name(cfg.algorithms[i]);
  }
  out += "\n";
  put("modules.lambda1", cfg.lambda1);
  put("modules.ratio", cfg.module_ratio);
  std::snprintf(buf, sizeof(buf), "modules.count = %d\n", cfg.module_count);
  out += buf;
  put("coverage.min", cfg.coverage_min);
  put("coverage.max", cfg.coverage_max);
  put("init.theta0", cfg.pose0.theta);
  put("init.x0", cfg.pose0.x);
  put("init.y0", cfg.pose0.y);
  put("init.kappa0", cfg.kappa0);
  put("init.sigma2_0", cfg.sigma2_0);
  put("readout.resolution", cfg.readout_resolution);
  out += "truth.heading_noise = ";
  out += cfg.heading_noise == HeadingNoiseModel::von_mises ? "vm" : "gaussian";
  out += "\n";
  return out;
}

}  // namespace locsim
