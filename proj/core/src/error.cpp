#include "defensibility/error.hpp"

#include <fmt/format.h>

namespace defensibility {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNone: return "OK";
    case ErrorCode::kMalformedTrace: return "MALFORMED_TRACE";
    case ErrorCode::kMissingField: return "MISSING_FIELD";
    case ErrorCode::kSpanNotFound: return "SPAN_NOT_FOUND";
    case ErrorCode::kUncoveredSpan: return "UNCOVERED_SPAN";
    case ErrorCode::kFieldTokenNotFound: return "FIELD_TOKEN_NOT_FOUND";
    case ErrorCode::kNoLevelCandidate: return "NO_LEVEL_CANDIDATE";
    case ErrorCode::kNoWeightCandidate: return "NO_WEIGHT_CANDIDATE";
    case ErrorCode::kMissingPolarity: return "MISSING_POLARITY";
    case ErrorCode::kEmptySpan: return "EMPTY_SPAN";
    case ErrorCode::kMissingCandidates: return "MISSING_CANDIDATES";
    case ErrorCode::kMissingComponent: return "MISSING_COMPONENT";
    case ErrorCode::kDegenerateLabels: return "DEGENERATE_LABELS";
    case ErrorCode::kNonConvergence: return "NON_CONVERGENCE";
    case ErrorCode::kTooFewSamples: return "TOO_FEW_SAMPLES";
    case ErrorCode::kIoFailure: return "IO_FAILURE";
    case ErrorCode::kSchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::kEmptyCohort: return "EMPTY_COHORT";
    case ErrorCode::kNoFalseNegatives: return "NO_FALSE_NEGATIVES";
    case ErrorCode::kNoAgreements: return "NO_AGREEMENTS";
    case ErrorCode::kCohortTooSmall: return "COHORT_TOO_SMALL";
    case ErrorCode::kZeroBaseline: return "ZERO_BASELINE";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kTooFewReplicates: return "TOO_FEW_REPLICATES";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kZeroVariance: return "ZERO_VARIANCE";
    case ErrorCode::kEmptyGroup: return "EMPTY_GROUP";
    case ErrorCode::kZeroDenominator: return "ZERO_DENOMINATOR";
    case ErrorCode::kEmptyCitation: return "EMPTY_CITATION";
    case ErrorCode::kEmptyRuleSet: return "EMPTY_RULE_SET";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(detail.empty()
                             ? std::string(to_string(code))
                             : fmt::format("{}: {}", to_string(code), detail)),
      code_(code) {}

}  // namespace defensibility
