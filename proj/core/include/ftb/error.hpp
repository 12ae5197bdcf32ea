#pragma once

#include <stdexcept>
#include <string>

namespace ftb {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad values in a config struct (negative height, restitution out of range, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Caller handed an operation inputs that violate its preconditions.
struct InputError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct RenderError : Error {
  using Error::Error;
};

// Target lost mid-sequence; carries the last frame index that still tracked.
struct TrackingError : Error {
  int last_good_index;
  TrackingError(const std::string& msg, int last_good)
      : Error(msg), last_good_index(last_good) {}
};

struct NoCollisionError : Error {
  using Error::Error;
};

struct EstimationError : Error {
  using Error::Error;
};

struct NoOnsetError : Error {
  using Error::Error;
};

struct NegativeDelayError : Error {
  using Error::Error;
};

struct CalibrationError : Error {
  using Error::Error;
};

}  // namespace ftb
