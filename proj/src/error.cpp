#include "beq/error.hpp"

namespace beq {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NumericalDomain: return "NumericalDomain";
    case ErrorKind::RootBracket: return "RootBracket";
    case ErrorKind::DegenerateCurvature: return "DegenerateCurvature";
    case ErrorKind::Extrapolation: return "Extrapolation";
    case ErrorKind::InternalConsistency: return "InternalConsistency";
    case ErrorKind::SingularSigma: return "SingularSigma";
    case ErrorKind::DegenerateMarket: return "DegenerateMarket";
    case ErrorKind::ProjectionConvergence: return "ProjectionConvergence";
    case ErrorKind::TableRange: return "TableRange";
    case ErrorKind::StepControl: return "StepControl";
    case ErrorKind::Wellposedness: return "Wellposedness";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace beq
