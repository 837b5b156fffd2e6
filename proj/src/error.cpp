#include "meicmp/error.hpp"

namespace meicmp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::RelationNotEvaluable: return "RelationNotEvaluable";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::SingularA: return "SingularA";
    case ErrorCode::SingularM: return "SingularM";
    case ErrorCode::RadiusNotFound: return "RadiusNotFound";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::InfiniteValue: return "InfiniteValue";
    case ErrorCode::NotForcible: return "NotForcible";
    case ErrorCode::LeastSquaresFailure: return "LeastSquaresFailure";
    case ErrorCode::EmptyInverse: return "EmptyInverse";
    case ErrorCode::AlgebraicLoop: return "AlgebraicLoop";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace meicmp
