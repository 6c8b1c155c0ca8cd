#pragma once

#include <stdexcept>
#include <string>

namespace effdyn {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  NonBackdrivable,
  DivergentInertia,
  SingularTopology,
  LockedTransmission,
  SingularJacobian,
  StiffnessFailure,
  NoSlip,
  DegenerateEnergy,
  Parse,
};

/// Base class for every error raised by the library. `kind()` lets callers
/// (the CLI in particular) map failures onto exit codes without RTTI chains.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

#define EFFDYN_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &what) : Error(ErrorKind::Name, what) {}   \
  }

EFFDYN_DEFINE_ERROR(InvalidArgument);
EFFDYN_DEFINE_ERROR(DimensionMismatch);
/// Friction locks the transmission against loads applied at the output.
EFFDYN_DEFINE_ERROR(NonBackdrivable);
/// Backward-driven inertia with zero efficiency is unbounded.
EFFDYN_DEFINE_ERROR(DivergentInertia);
EFFDYN_DEFINE_ERROR(SingularTopology);
EFFDYN_DEFINE_ERROR(LockedTransmission);
EFFDYN_DEFINE_ERROR(SingularJacobian);
/// Bilateral meshing contact would need to pull (negative multiplier).
EFFDYN_DEFINE_ERROR(StiffnessFailure);
EFFDYN_DEFINE_ERROR(NoSlip);
EFFDYN_DEFINE_ERROR(DegenerateEnergy);

#undef EFFDYN_DEFINE_ERROR

/// Document-level error with the 1-based line it refers to (0 if unknown).
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string &what)
      : Error(ErrorKind::Parse, line > 0 ? "line " + std::to_string(line) +
                                               ": " + what
                                         : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace effdyn
