#pragma once

#include <stdexcept>
#include <string>

namespace cpol {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Configuration document rejected; carries the JSON path of the offending field.
struct ConfigError : Error {
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), field_path(std::move(path)) {}
  std::string field_path;
};

/// File read/write failure.
struct IoError : Error {
  using Error::Error;
};

/// Event file format version incompatible with this build.
struct VersionError : Error {
  using Error::Error;
};

/// Histogram fit could not be performed (degenerate design, too few bins).
struct FitError : Error {
  using Error::Error;
};

/// Numerical quadrature failed to reach the requested tolerance.
struct QuadratureError : Error {
  QuadratureError(const std::string& what, double achieved_tol)
      : Error(what), achieved(achieved_tol) {}
  double achieved;
};

/// Analysis-stage failure (empty selection, ill-conditioned extraction).
struct AnalysisError : Error {
  using Error::Error;
};

}  // namespace cpol
