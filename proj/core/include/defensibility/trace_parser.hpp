#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "defensibility/error.hpp"
#include "defensibility/types.hpp"

namespace defensibility {

enum class TraceIssueKind {
  kMalformed,       // not a single flat JSON object
  kMissingField,    // field absent
  kInvalidValue,    // field present but outside its value set
  kFieldOrder,      // fields not in generation order
  kDuplicateKey,    // key repeated; the last occurrence is used
  kCitationBeforeLogicChain,  // located citation span precedes logic_chain
  kCitationMismatch,          // span search disagrees with the object scan
};

std::string_view to_string(TraceIssueKind kind);

struct TraceIssue {
  TraceIssueKind kind;
  std::string field;
  std::string detail;
};

struct TraceParse {
  AuditTrace trace;  // token positions not yet filled
  std::vector<TraceIssue> issues;

  bool malformed() const;
};

/// The audit fields in their required generation order.
inline constexpr std::string_view kTraceFields[] = {
    "logic_chain", "policy_citation", "precedent_weight", "inverse_check",
    "defensibility_level"};

/// Scans a flat JSON object for the five audit fields. Values keep their
/// raw (still-escaped) text; categorical values are matched exactly after
/// trimming surrounding whitespace.
TraceParse parse_trace(std::string_view trace_text);

/// Interior character range of the policy_citation value: last occurrence
/// of the key, then the opening quote of its value, then the first
/// unescaped closing quote. Throws Error(kSpanNotFound).
CharSpan find_citation_span(std::string_view trace_text);

/// Minimal contiguous token range covering `span`; partially overlapped
/// boundary tokens are included. An empty span maps to an empty range
/// positioned at the token holding span.begin. Throws Error(kUncoveredSpan).
TokenRange map_span_to_tokens(const AuditRecord& record, CharSpan span);

enum class CategoricalField { kPrecedentWeight, kInverseCheck, kDefensibilityLevel };

/// Index of the token holding the first character of the field's value.
/// Throws Error(kFieldTokenNotFound).
std::size_t locate_field_token(const AuditRecord& record, const AuditTrace& trace,
                               CategoricalField field);

/// parse_trace + citation span detection + token positions for every
/// field that could be located.
struct LocatedTrace {
  AuditTrace trace;
  std::vector<TraceIssue> issues;
  ErrorCode citation_status = ErrorCode::kNone;  // span detection + token mapping
};

LocatedTrace locate_trace(const AuditRecord& record);

/// Renders a trace object in generation order (used by the simulator and
/// fixtures). Values are emitted as given; callers escape them.
std::string render_trace(std::string_view logic_chain, std::string_view policy_citation,
                         PrecedentWeight weight, InverseCheck check, Level level);

}  // namespace defensibility
