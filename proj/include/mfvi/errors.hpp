#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfvi {

/// Distribution or configuration parameters outside their valid domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value passed to a density or transform lies outside the support.
class SupportError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Constrained input sits exactly on the boundary of a transform's domain.
class BoundaryError : public SupportError {
 public:
  using SupportError::SupportError;
};

/// Index out of range in a model or data structure.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A Monte Carlo draw produced a non-finite log density or gradient.
/// Carries the constrained draw that triggered it.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::vector<double> draw)
      : std::runtime_error(what), draw_(std::move(draw)) {}
  const std::vector<double>& draw() const noexcept { return draw_; }

 private:
  std::vector<double> draw_;
};

/// The objective could not be evaluated at the initial variational parameters.
class InitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The optimizer diverged.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Metropolis chain failed to move.
class MixingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")"
                                : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structural invariant violated in a loaded or constructed dataset.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfvi
