#pragma once

#include <stdexcept>
#include <string>

namespace sympflow {

// Malformed arguments: dimension mismatches, out-of-range indices,
// nonpositive step sizes and the like.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable checkpoint, dataset or config file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint of one model family handed to the loader of another.
class KindMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

// Requested operation is not defined for this system or model.
class UnsupportedCase : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Adaptive integrator could not keep the step above its floor.
class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

}  // namespace detail
}  // namespace sympflow
