#ifndef MOFLP_ERRORS_HPP
#define MOFLP_ERRORS_HPP

#include <stdexcept>

namespace moflp {

/// A solution violates a problem constraint; the message names the constraint.
class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/vector dimensions do not agree.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside an operation's admissible domain (empty set, guard exceeded, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or combination.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document; the message carries field or position context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A decoded object violates its structural invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint document is inconsistent with the expected model layout.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training aborted (non-finite loss); the message names epoch and batch.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cached pipeline artifact does not match the current configuration.
class StaleCacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace moflp

#endif  // MOFLP_ERRORS_HPP
