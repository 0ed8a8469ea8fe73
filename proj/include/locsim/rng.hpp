#pragma once

#include <cmath>
#include <cstdint>

namespace locsim {

/// Identifies an independent noise sub-stream within one trial. Streams are
/// keyed by (seed, trial, source) so that competing estimators replay the
/// exact same noise realization (common random numbers).
enum class NoiseSource : std::uint64_t {
  heading = 1,
  speed = 2,
  bearing = 3,
  range = 4,
};

/// Counter-based splittable random stream (SplitMix64). A stream is owned by
/// a single caller at a time; construction from the same key always yields
/// the same sequence.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed)
      : state_(mix(seed ^ 0x6a09e667f3bcc908ull)) {}

  RngStream(std::uint64_t seed, std::uint64_t trial, NoiseSource source)
      : state_(mix(mix(mix(seed) ^ trial) ^ static_cast<std::uint64_t>(source))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Gaussian draw via Box-Muller; the spare value is cached.
  /// var == 0 returns the mean without consuming the stream.
  double normal(double mean, double var) {
    if (var == 0.0) return mean;
    return mean + std::sqrt(var) * standard_normal();
  }

  double standard_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTau * u2);
    has_spare_ = true;
    return r * std::cos(kTau * u2);
  }

 private:
  static constexpr double kTau = 6.283185307179586476925286766559;

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace locsim
