#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace defensibility {

enum class ErrorCode {
  kNone = 0,
  // trace parsing
  kMalformedTrace,
  kMissingField,
  kSpanNotFound,
  kUncoveredSpan,
  kFieldTokenNotFound,
  // extraction
  kNoLevelCandidate,
  kNoWeightCandidate,
  kMissingPolarity,
  kEmptySpan,
  kMissingCandidates,
  // calibration
  kMissingComponent,
  kDegenerateLabels,
  kNonConvergence,
  kTooFewSamples,
  kIoFailure,
  kSchemaMismatch,
  // metrics / gate
  kEmptyCohort,
  kNoFalseNegatives,
  kNoAgreements,
  kCohortTooSmall,
  kZeroBaseline,
  kInvalidConfig,
  // stability
  kTooFewReplicates,
  kLengthMismatch,
  kZeroVariance,
  kEmptyGroup,
  kZeroDenominator,
  // grounding
  kEmptyCitation,
  kEmptyRuleSet,
};

std::string_view to_string(ErrorCode code);

/// Thrown by operations whose contract has a named error. Record-level
/// callers catch it and count the failure instead of aborting a batch.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace defensibility
