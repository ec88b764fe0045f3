#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace defensibility {

enum class Action { kRemove, kApprove };

/// L1 robustly defensible, L2 plausibly defensible, L3 indefensible.
enum class Level { kL1 = 1, kL2 = 2, kL3 = 3 };

enum class PrecedentWeight { kHigh, kMedium, kLow };

enum class InverseCheck { kYes, kNo };

inline constexpr bool is_defensible(Level level) { return level != Level::kL3; }
inline constexpr int level_index(Level level) { return static_cast<int>(level) - 1; }

std::string_view to_string(Action action);
std::string_view to_string(Level level);
std::string_view to_string(PrecedentWeight weight);
std::string_view to_string(InverseCheck check);

// Exact-match parsers for the canonical spellings ("REMOVE", "L2", ...).
std::optional<Action> parse_action(std::string_view text);
std::optional<Level> parse_level_name(std::string_view text);

/// Half-open character range [begin, end) into a trace string.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool operator==(const CharSpan&) const = default;
};

/// Half-open token index range [begin, end).
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool operator==(const TokenRange&) const = default;
};

struct Candidate {
  std::string token;
  double logprob = 0.0;  // natural log

  bool operator==(const Candidate&) const = default;
};

inline constexpr std::size_t kMaxCandidates = 20;

/// One generated token with its top-k alternatives. Offsets index into the
/// owning record's trace_text.
struct TokenEvent {
  std::string text;
  double logprob = 0.0;
  std::vector<Candidate> top_candidates;  // sorted by descending logprob
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const TokenEvent&) const = default;
};

struct AuditRecord {
  std::string id;
  std::string community_id;
  std::string content;
  Action proposed_action = Action::kApprove;
  std::optional<Action> human_action;
  std::string trace_text;
  std::vector<TokenEvent> tokens;
  double temperature = 0.0;

  bool operator==(const AuditRecord&) const = default;
};

struct RuleBlock {
  std::string id;
  std::string body;

  bool operator==(const RuleBlock&) const = default;
};

struct RuleSet {
  std::string community_id;
  std::vector<RuleBlock> platform_rules;   // platform-wide rules
  std::vector<RuleBlock> community_rules;  // community-specific rules
  std::vector<RuleBlock> precedents;

  bool empty() const {
    return platform_rules.empty() && community_rules.empty() && precedents.empty();
  }
  bool operator==(const RuleSet&) const = default;
};

/// A parsed field value with the character span of its value text and,
/// once located, the index of the first token of that value.
template <typename T>
struct Located {
  T value{};
  CharSpan span;
  std::optional<std::size_t> token;

  bool operator==(const Located&) const = default;
};

/// The five audit fields in generation order. Absent fields stay empty.
struct AuditTrace {
  std::optional<Located<std::string>> logic_chain;
  std::optional<Located<std::string>> policy_citation;  // raw interior, escapes kept
  std::optional<TokenRange> citation_tokens;
  std::optional<Located<PrecedentWeight>> precedent_weight;
  std::optional<Located<InverseCheck>> inverse_check;
  std::optional<Located<Level>> defensibility_level;

  bool complete() const {
    return logic_chain && policy_citation && precedent_weight && inverse_check &&
           defensibility_level;
  }
  bool operator==(const AuditTrace&) const = default;
};

struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_record(const AuditRecord& record);

/// Record checks plus the trace-position invariants (citation < weight <
/// inverse check < level, all positions inside the token sequence).
std::vector<Violation> validate_record(const AuditRecord& record, const AuditTrace& trace);

/// Per-record violations prefixed with the record id, plus duplicate ids.
std::vector<Violation> validate_dataset(const std::vector<AuditRecord>& records);

std::vector<Violation> validate_rule_set(const RuleSet& rules);

/// A record counts toward N only when all five fields parsed and typed.
bool is_valid_audit(const AuditRecord& record, const std::optional<AuditTrace>& trace);

}  // namespace defensibility
