#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace beq {

enum class ErrorKind {
  NumericalDomain,
  RootBracket,
  DegenerateCurvature,
  Extrapolation,
  InternalConsistency,
  SingularSigma,
  DegenerateMarket,
  ProjectionConvergence,
  TableRange,
  StepControl,
  Wellposedness,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base error for everything the library throws. The kind is stable and is
/// what the CLI prints on the machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Projected-gradient or Dykstra iteration hit its cap. Carries the best
/// iterate so a caller can decide whether it is usable anyway.
class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& message, Eigen::VectorXd best, double gap)
      : Error(ErrorKind::ProjectionConvergence, message),
        best_(std::move(best)),
        gap_(gap) {}

  const Eigen::VectorXd& best_iterate() const { return best_; }
  double gap() const { return gap_; }

 private:
  Eigen::VectorXd best_;
  double gap_;
};

/// A backward solve left the tabulated range of G. `reached` is the state
/// value at which it stopped.
class TableRangeError : public Error {
 public:
  TableRangeError(const std::string& message, double reached)
      : Error(ErrorKind::TableRange, message), reached_(reached) {}

  double reached() const { return reached_; }

 private:
  double reached_;
};

}  // namespace beq
