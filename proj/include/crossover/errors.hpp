#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crossover {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParams : Error {
  using Error::Error;
};

struct StepSizeViolation : Error {
  using Error::Error;
};

/// NaN or overflow in a deterministic integration.
struct NumericalFailure : Error {
  using Error::Error;
};

/// Symmetrically ordered diffusion matrix has a negative eigenvalue beyond
/// the clamp tolerance; happens below the first lasing threshold.
struct NonPositiveDiffusion : Error {
  using Error::Error;
};

struct TrajectoryDiverged : Error {
  TrajectoryDiverged(std::size_t index, const std::string& what)
      : Error(what), trajectory(index) {}
  std::size_t trajectory;
};

struct CapacityError : Error {
  using Error::Error;
};

struct CutoffOverflow : Error {
  using Error::Error;
};

/// Photon index implied by the quanta counter went negative.
struct InternalQuantaError : Error {
  using Error::Error;
};

struct DeadState : Error {
  using Error::Error;
};

struct NotConverged : Error {
  using Error::Error;
};

struct WindowTooShort : Error {
  using Error::Error;
};

struct BelowNoiseFloor : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace crossover
