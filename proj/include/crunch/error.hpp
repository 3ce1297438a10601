#pragma once

#include <stdexcept>
#include <string>

namespace crunch {

// Error taxonomy shared by all modules.  Each kind maps to a process exit
// code: config problems exit 2, failures of iterative/adaptive numerics exit 3,
// every runtime invariant violation exits 1.
enum class ErrKind {
  InvariantViolation,
  NonConvergence,
  OutOfDomain,
  PoleRegularityViolation,
  SingularMetric,
  DegenerateScale,
  DegenerateCoefficient,
  ConstraintInfeasible,
  InsufficientTail,
  ConfigError,
};

struct Error : std::runtime_error {
  ErrKind kind;
  Error(ErrKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

inline int exit_code(ErrKind k) {
  switch (k) {
    case ErrKind::ConfigError: return 2;
    case ErrKind::NonConvergence: return 3;
    default: return 1;
  }
}

inline const char* err_name(ErrKind k) {
  switch (k) {
    case ErrKind::InvariantViolation: return "InvariantViolation";
    case ErrKind::NonConvergence: return "NonConvergence";
    case ErrKind::OutOfDomain: return "OutOfDomain";
    case ErrKind::PoleRegularityViolation: return "PoleRegularityViolation";
    case ErrKind::SingularMetric: return "SingularMetric";
    case ErrKind::DegenerateScale: return "DegenerateScale";
    case ErrKind::DegenerateCoefficient: return "DegenerateCoefficient";
    case ErrKind::ConstraintInfeasible: return "ConstraintInfeasible";
    case ErrKind::InsufficientTail: return "InsufficientTail";
    case ErrKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace crunch
