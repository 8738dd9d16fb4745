#pragma once

#include <stdexcept>
#include <string>

namespace hiveguard {

// Flat error taxonomy. The CLI maps each category to a fixed exit code,
// so new failure modes should reuse one of these rather than add a type.

/// Invalid configuration or argument values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Tensor shapes do not conform to an operation's requirements.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Misuse of the gradient tape (non-scalar loss, detached tensor, ...).
struct TapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computation produced non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failure (missing file, unreadable path, ...).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A file does not parse as the expected format (truncation, bad magic).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A file parses but fails its checksum or internal consistency checks.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hiveguard
