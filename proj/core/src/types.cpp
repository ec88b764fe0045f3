#include "defensibility/types.hpp"

#include <fmt/format.h>

#include <unordered_set>

namespace defensibility {

std::string_view to_string(Action action) {
  return action == Action::kRemove ? "REMOVE" : "APPROVE";
}

std::string_view to_string(Level level) {
  switch (level) {
    case Level::kL1: return "L1";
    case Level::kL2: return "L2";
    case Level::kL3: return "L3";
  }
  return "L?";
}

std::string_view to_string(PrecedentWeight weight) {
  switch (weight) {
    case PrecedentWeight::kHigh: return "High";
    case PrecedentWeight::kMedium: return "Medium";
    case PrecedentWeight::kLow: return "Low";
  }
  return "?";
}

std::string_view to_string(InverseCheck check) {
  return check == InverseCheck::kYes ? "Yes" : "No";
}

std::optional<Action> parse_action(std::string_view text) {
  if (text == "REMOVE") return Action::kRemove;
  if (text == "APPROVE") return Action::kApprove;
  return std::nullopt;
}

std::optional<Level> parse_level_name(std::string_view text) {
  if (text == "L1") return Level::kL1;
  if (text == "L2") return Level::kL2;
  if (text == "L3") return Level::kL3;
  return std::nullopt;
}

namespace {

void check_candidates(const TokenEvent& token, std::size_t index,
                      std::vector<Violation>& out) {
  const auto field = fmt::format("tokens[{}].top_candidates", index);
  if (token.top_candidates.size() > kMaxCandidates) {
    out.push_back({field, fmt::format("at most {} candidates allowed, got {}", kMaxCandidates,
                                      token.top_candidates.size())});
  }
  for (std::size_t c = 0; c < token.top_candidates.size(); ++c) {
    if (!(token.top_candidates[c].logprob <= 0.0)) {
      out.push_back({fmt::format("{}[{}].logprob", field, c), "logprob must be <= 0"});
    }
    if (c > 0 && token.top_candidates[c].logprob > token.top_candidates[c - 1].logprob) {
      out.push_back({field, fmt::format("candidates not sorted by descending logprob at {}", c)});
    }
  }
}

}  // namespace

std::vector<Violation> validate_record(const AuditRecord& record) {
  std::vector<Violation> out;
  if (record.id.empty()) out.push_back({"id", "must be non-empty"});
  if (record.community_id.empty()) out.push_back({"community_id", "must be non-empty"});
  if (!(record.temperature >= 0.0 && record.temperature <= 2.0)) {
    out.push_back({"temperature", "must lie in [0, 2]"});
  }

  std::size_t cursor = 0;
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    const auto& token = record.tokens[i];
    const auto field = fmt::format("tokens[{}]", i);
    if (!(token.logprob <= 0.0)) {
      out.push_back({field + ".logprob", "logprob must be <= 0"});
    }
    check_candidates(token, i, out);
    if (token.char_start >= token.char_end) {
      out.push_back({field, "char_start must be < char_end"});
      continue;
    }
    if (token.char_start != cursor) {
      out.push_back({field, fmt::format("span must start at {} (contiguous, non-overlapping), "
                                        "starts at {}",
                                        cursor, token.char_start)});
    }
    if (token.char_end > record.trace_text.size()) {
      out.push_back({field, "span extends past trace_text"});
    } else if (record.trace_text.compare(token.char_start, token.char_end - token.char_start,
                                         token.text) != 0) {
      out.push_back({field + ".text", "does not match trace_text at its span"});
    }
    cursor = token.char_end;
  }
  return out;
}

std::vector<Violation> validate_record(const AuditRecord& record, const AuditTrace& trace) {
  auto out = validate_record(record);
  const std::size_t n = record.tokens.size();

  struct Position {
    const char* field;
    std::optional<std::size_t> index;
  };
  std::optional<std::size_t> citation_start;
  if (trace.citation_tokens) {
    if (trace.citation_tokens->end > n || trace.citation_tokens->begin > trace.citation_tokens->end) {
      out.push_back({"policy_citation", "token span lies outside the token sequence"});
    }
    citation_start = trace.citation_tokens->begin;
  }
  const Position order[] = {
      {"policy_citation", citation_start},
      {"precedent_weight", trace.precedent_weight ? trace.precedent_weight->token : std::nullopt},
      {"inverse_check", trace.inverse_check ? trace.inverse_check->token : std::nullopt},
      {"defensibility_level",
       trace.defensibility_level ? trace.defensibility_level->token : std::nullopt},
  };
  for (const auto& pos : order) {
    if (pos.index && *pos.index >= n && pos.field != std::string_view("policy_citation")) {
      out.push_back({pos.field, "token position lies outside the token sequence"});
    }
  }
  for (std::size_t i = 0; i + 1 < std::size(order); ++i) {
    if (order[i].index && order[i + 1].index && !(*order[i].index < *order[i + 1].index)) {
      out.push_back({order[i].field, fmt::format("token position {} must precede {} at {}",
                                                 *order[i].index, order[i + 1].field,
                                                 *order[i + 1].index)});
    }
  }
  return out;
}

std::vector<Violation> validate_dataset(const std::vector<AuditRecord>& records) {
  std::vector<Violation> out;
  std::unordered_set<std::string> seen;
  for (const auto& record : records) {
    for (auto& v : validate_record(record)) {
      out.push_back({fmt::format("{}:{}", record.id, v.field), std::move(v.message)});
    }
    if (!seen.insert(record.id).second) {
      out.push_back({fmt::format("{}:id", record.id), "duplicate id within dataset"});
    }
  }
  return out;
}

std::vector<Violation> validate_rule_set(const RuleSet& rules) {
  std::vector<Violation> out;
  if (rules.community_id.empty()) out.push_back({"community_id", "must be non-empty"});
  auto check = [&](const std::vector<RuleBlock>& blocks, const char* group) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].id.empty()) out.push_back({fmt::format("{}[{}].id", group, i), "empty"});
      if (blocks[i].body.empty()) out.push_back({fmt::format("{}[{}].body", group, i), "empty"});
    }
  };
  check(rules.platform_rules, "platform_rules");
  check(rules.community_rules, "community_rules");
  check(rules.precedents, "precedents");
  return out;
}

bool is_valid_audit(const AuditRecord& record, const std::optional<AuditTrace>& trace) {
  return trace.has_value() && trace->complete() && validate_record(record).empty();
}

}  // namespace defensibility
