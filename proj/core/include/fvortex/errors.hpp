#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fvortex {

/// Base class for every failure raised by the library. Numerical failures and
/// validation failures are split so the CLI can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation that was entitled to succeed did not converge or broke down.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidStructure : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Randers second derivatives requested at the zero covector.
class SingularPoint : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotRanders : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DistanceOutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonNeutralSource : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SeparationTooSmall : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TooCloseToCore : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InadmissibleVariation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotStationary : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NewtonStall : public NumericalError {
 public:
  NewtonStall(const std::string& what, double last_residual)
      : NumericalError(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class SolverDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GramNotPD : public NumericalError {
 public:
  GramNotPD(const std::string& what, std::size_t vortex)
      : NumericalError(what), vortex_(vortex) {}
  std::size_t vortex() const noexcept { return vortex_; }

 private:
  std::size_t vortex_;
};

class StepUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PairCollapse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Structured-document problems (unknown keys, wrong types, unknown presets).
class SchemaError : public ValidationError {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : ValidationError(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A file could not be written; carries the offending path.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace fvortex
