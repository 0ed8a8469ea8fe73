#pragma once

#include <stdexcept>
#include <string>

namespace locsim {

/// Fusion of near-antipodal, equal-weight circular beliefs: the resultant
/// vector is too short to define a mean direction.
class degenerate_fusion_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometric precondition violated (e.g. agent estimate coincides with the
/// landmark, so the bearing is undefined).
class geometry_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decoding requested from a belief that carries no information
/// (all concentrations zero).
class no_information_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside a filter step (singular innovation covariance
/// and similar).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace locsim
