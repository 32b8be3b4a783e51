#pragma once

#include <stdexcept>
#include <string>

namespace rdslab {

/// Base of all library errors. kind() is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

/// Invalid user configuration; carries the offending field path.
class ConfigError : public Error {
public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("ConfigError", field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

/// Failure of a numerical stage (maps to CLI exit code 3).
class NumericalError : public Error {
public:
  using Error::Error;
};

#define RDSLAB_NUMERICAL_ERROR(Name)                                                      \
  class Name : public NumericalError {                                                    \
  public:                                                                                 \
    explicit Name(const std::string& what) : NumericalError(#Name, what) {}               \
  };

RDSLAB_NUMERICAL_ERROR(DegenerateJacobian)
RDSLAB_NUMERICAL_ERROR(NonConvergence)
RDSLAB_NUMERICAL_ERROR(ConeViolation)
RDSLAB_NUMERICAL_ERROR(NewtonDivergence)
RDSLAB_NUMERICAL_ERROR(ChartOverflow)
RDSLAB_NUMERICAL_ERROR(HypothesisFailure)
RDSLAB_NUMERICAL_ERROR(ReGraphFailure)
RDSLAB_NUMERICAL_ERROR(SeparationFailure)
RDSLAB_NUMERICAL_ERROR(NoAccumulation)
RDSLAB_NUMERICAL_ERROR(MassStarvation)
RDSLAB_NUMERICAL_ERROR(DegenerateGraph)

#undef RDSLAB_NUMERICAL_ERROR

}  // namespace rdslab
