#include "causalpanel/errors.hpp"

namespace causalpanel {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_config: return "InvalidConfig";
    case ErrorKind::file_unreadable: return "FileUnreadable";
    case ErrorKind::schema_mismatch: return "SchemaMismatch";
    case ErrorKind::non_binary_treatment: return "NonBinaryTreatment";
    case ErrorKind::non_binary_outcome: return "NonBinaryOutcome";
    case ErrorKind::missing_value: return "MissingValue";
    case ErrorKind::duplicate_unit_id: return "DuplicateUnitId";
    case ErrorKind::empty_result: return "EmptyResult";
    case ErrorKind::single_arm: return "SingleArm";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::invalid_design: return "InvalidDesign";
    case ErrorKind::separation: return "Separation";
    case ErrorKind::singular: return "Singular";
    case ErrorKind::not_converged: return "NotConverged";
    case ErrorKind::no_crossing: return "NoCrossing";
    case ErrorKind::estimator_failure: return "EstimatorFailure";
    case ErrorKind::degenerate_distribution: return "DegenerateDistribution";
    case ErrorKind::zero_variance: return "ZeroVariance";
    case ErrorKind::non_positive_rr: return "NonPositiveRR";
    case ErrorKind::invalid_risk: return "InvalidRisk";
    case ErrorKind::io_failure: return "IoFailure";
  }
  return "UnknownError";
}

ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_config:
    case ErrorKind::invalid_risk:
      return ErrorCategory::config;
    case ErrorKind::file_unreadable:
    case ErrorKind::schema_mismatch:
    case ErrorKind::non_binary_treatment:
    case ErrorKind::non_binary_outcome:
    case ErrorKind::missing_value:
    case ErrorKind::duplicate_unit_id:
    case ErrorKind::empty_result:
    case ErrorKind::single_arm:
    case ErrorKind::io_failure:
      return ErrorCategory::data;
    default:
      return ErrorCategory::estimation;
  }
}

}  // namespace causalpanel
