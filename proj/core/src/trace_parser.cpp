#include "defensibility/trace_parser.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <optional>

namespace defensibility {

std::string_view to_string(TraceIssueKind kind) {
  switch (kind) {
    case TraceIssueKind::kMalformed: return "MALFORMED_TRACE";
    case TraceIssueKind::kMissingField: return "MISSING_FIELD";
    case TraceIssueKind::kInvalidValue: return "INVALID_VALUE";
    case TraceIssueKind::kFieldOrder: return "FIELD_ORDER";
    case TraceIssueKind::kDuplicateKey: return "DUPLICATE_KEY";
    case TraceIssueKind::kCitationBeforeLogicChain: return "CITATION_BEFORE_LOGIC_CHAIN";
    case TraceIssueKind::kCitationMismatch: return "CITATION_MISMATCH";
  }
  return "UNKNOWN";
}

bool TraceParse::malformed() const {
  return std::any_of(issues.begin(), issues.end(),
                     [](const TraceIssue& i) { return i.kind == TraceIssueKind::kMalformed; });
}

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

/// Minimal scanner over a flat JSON object.
class ObjectScanner {
 public:
  struct Member {
    CharSpan key;    // interior of the key string
    CharSpan value;  // interior for strings, literal text otherwise
    bool is_string = false;
  };

  explicit ObjectScanner(std::string_view text) : text_(text) {}

  std::optional<std::vector<Member>> scan(std::string& error) {
    std::vector<Member> members;
    skip_ws();
    if (!consume('{')) return fail(error, "expected '{'");
    skip_ws();
    if (consume('}')) return finish(members, error);
    for (;;) {
      skip_ws();
      Member m;
      if (!peek('"')) return fail(error, "expected key string");
      auto key = string_interior();
      if (!key) return fail(error, "unterminated key string");
      m.key = *key;
      skip_ws();
      if (!consume(':')) return fail(error, "expected ':'");
      skip_ws();
      if (peek('"')) {
        auto value = string_interior();
        if (!value) return fail(error, "unterminated value string");
        m.value = *value;
        m.is_string = true;
      } else if (peek('{') || peek('[')) {
        return fail(error, "nested values are not supported");
      } else {
        auto value = literal();
        if (!value) return fail(error, "expected value");
        m.value = *value;
      }
      members.push_back(m);
      skip_ws();
      if (consume(',')) continue;
      if (consume('}')) return finish(members, error);
      return fail(error, "expected ',' or '}'");
    }
  }

 private:
  std::optional<std::vector<Member>> finish(std::vector<Member>& members, std::string& error) {
    skip_ws();
    if (pos_ != text_.size()) return fail(error, "trailing characters after object");
    return std::move(members);
  }

  std::optional<std::vector<Member>> fail(std::string& error, const char* what) {
    error = fmt::format("{} at offset {}", what, pos_);
    return std::nullopt;
  }

  void skip_ws() {
    while (pos_ < text_.size() && is_ws(text_[pos_])) ++pos_;
  }
  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
  bool consume(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  std::optional<CharSpan> string_interior() {
    const std::size_t open = pos_++;
    for (; pos_ < text_.size(); ++pos_) {
      if (text_[pos_] == '\\') {
        ++pos_;
        continue;
      }
      if (text_[pos_] == '"') {
        CharSpan span{open + 1, pos_};
        ++pos_;
        return span;
      }
    }
    return std::nullopt;
  }

  std::optional<CharSpan> literal() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_ws(text_[pos_]) && text_[pos_] != ',' &&
           text_[pos_] != '}') {
      ++pos_;
    }
    if (pos_ == start) return std::nullopt;
    const auto lit = text_.substr(start, pos_ - start);
    const bool number = lit.find_first_not_of("+-.0123456789eE") == std::string_view::npos;
    if (!number && lit != "true" && lit != "false" && lit != "null") return std::nullopt;
    return CharSpan{start, pos_};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

CharSpan trim_span(std::string_view text, CharSpan span) {
  while (span.begin < span.end && is_ws(text[span.begin])) ++span.begin;
  while (span.end > span.begin && is_ws(text[span.end - 1])) --span.end;
  return span;
}

std::string_view view(std::string_view text, CharSpan span) {
  return text.substr(span.begin, span.size());
}

std::optional<PrecedentWeight> weight_value(std::string_view v) {
  if (v == "High") return PrecedentWeight::kHigh;
  if (v == "Medium") return PrecedentWeight::kMedium;
  if (v == "Low") return PrecedentWeight::kLow;
  return std::nullopt;
}

std::optional<InverseCheck> check_value(std::string_view v) {
  if (v == "Yes") return InverseCheck::kYes;
  if (v == "No") return InverseCheck::kNo;
  return std::nullopt;
}

std::optional<Level> level_value(std::string_view v) {
  if (v == "1") return Level::kL1;
  if (v == "2") return Level::kL2;
  if (v == "3") return Level::kL3;
  return std::nullopt;
}

}  // namespace

TraceParse parse_trace(std::string_view text) {
  TraceParse result;
  std::string error;
  ObjectScanner scanner(text);
  auto members = scanner.scan(error);
  if (!members) {
    result.issues.push_back({TraceIssueKind::kMalformed, "", error});
    return result;
  }

  // Last occurrence of each known key, with its member position.
  std::array<std::optional<std::size_t>, std::size(kTraceFields)> found;
  for (std::size_t m = 0; m < members->size(); ++m) {
    const auto key = view(text, (*members)[m].key);
    for (std::size_t f = 0; f < std::size(kTraceFields); ++f) {
      if (key != kTraceFields[f]) continue;
      if (found[f]) {
        result.issues.push_back({TraceIssueKind::kDuplicateKey, std::string(key),
                                 "repeated key; last occurrence used"});
      }
      found[f] = m;
    }
  }

  std::optional<std::size_t> previous;
  for (std::size_t f = 0; f < std::size(kTraceFields); ++f) {
    if (!found[f]) continue;
    if (previous && *found[f] < *previous) {
      result.issues.push_back({TraceIssueKind::kFieldOrder, std::string(kTraceFields[f]),
                               "field appears out of generation order"});
    }
    previous = std::max(previous.value_or(0), *found[f]);
  }

  auto& trace = result.trace;
  auto missing = [&](std::size_t f) {
    result.issues.push_back({TraceIssueKind::kMissingField, std::string(kTraceFields[f]), ""});
  };
  auto invalid = [&](std::size_t f, std::string_view v) {
    result.issues.push_back({TraceIssueKind::kInvalidValue, std::string(kTraceFields[f]),
                             fmt::format("unexpected value '{}'", v)});
  };

  for (std::size_t f = 0; f < std::size(kTraceFields); ++f) {
    if (!found[f]) {
      missing(f);
      continue;
    }
    const auto& member = (*members)[*found[f]];
    const CharSpan raw = member.value;
    const CharSpan trimmed = trim_span(text, raw);
    const auto value = view(text, trimmed);
    switch (f) {
      case 0:
      case 1: {
        if (!member.is_string) {
          invalid(f, value);
          break;
        }
        Located<std::string> located{std::string(view(text, raw)), raw, std::nullopt};
        (f == 0 ? trace.logic_chain : trace.policy_citation) = std::move(located);
        break;
      }
      case 2:
        if (auto w = member.is_string ? weight_value(value) : std::nullopt) {
          trace.precedent_weight = Located<PrecedentWeight>{*w, trimmed, std::nullopt};
        } else {
          invalid(f, value);
        }
        break;
      case 3:
        if (auto c = member.is_string ? check_value(value) : std::nullopt) {
          trace.inverse_check = Located<InverseCheck>{*c, trimmed, std::nullopt};
        } else {
          invalid(f, value);
        }
        break;
      case 4:
        // Accept both "2" and the bare number 2.
        if (auto l = level_value(value)) {
          trace.defensibility_level = Located<Level>{*l, trimmed, std::nullopt};
        } else {
          invalid(f, value);
        }
        break;
    }
  }
  return result;
}

CharSpan find_citation_span(std::string_view text) {
  constexpr std::string_view kKey = "policy_citation";
  const auto key = text.rfind(kKey);
  if (key == std::string_view::npos) {
    throw Error(ErrorCode::kSpanNotFound, "key 'policy_citation' absent");
  }
  std::size_t pos = key + kKey.size();
  if (pos < text.size() && text[pos] == '"') ++pos;  // closing quote of the key
  while (pos < text.size() && is_ws(text[pos])) ++pos;
  if (pos >= text.size() || text[pos] != ':') {
    throw Error(ErrorCode::kSpanNotFound, "no ':' after last 'policy_citation' key");
  }
  ++pos;
  while (pos < text.size() && is_ws(text[pos])) ++pos;
  if (pos >= text.size() || text[pos] != '"') {
    throw Error(ErrorCode::kSpanNotFound, "citation value is not a string");
  }
  const std::size_t open = pos;
  for (pos = open + 1; pos < text.size(); ++pos) {
    if (text[pos] == '\\') {
      ++pos;
      continue;
    }
    if (text[pos] == '"') return CharSpan{open + 1, pos};
  }
  throw Error(ErrorCode::kSpanNotFound, "citation value unterminated");
}

namespace {

// First token whose span ends after `offset`.
std::size_t first_token_ending_after(const std::vector<TokenEvent>& tokens, std::size_t offset) {
  auto it = std::partition_point(tokens.begin(), tokens.end(),
                                 [offset](const TokenEvent& t) { return t.char_end <= offset; });
  return static_cast<std::size_t>(it - tokens.begin());
}

}  // namespace

TokenRange map_span_to_tokens(const AuditRecord& record, CharSpan span) {
  const auto& tokens = record.tokens;
  const std::size_t first = first_token_ending_after(tokens, span.begin);
  if (first == tokens.size() || tokens[first].char_start > span.begin) {
    throw Error(ErrorCode::kUncoveredSpan,
                fmt::format("no token covers offset {} in record '{}'", span.begin, record.id));
  }
  if (span.empty()) return TokenRange{first, first};
  const std::size_t last = first_token_ending_after(tokens, span.end - 1);
  if (last == tokens.size()) {
    throw Error(ErrorCode::kUncoveredSpan,
                fmt::format("token stream ends before offset {} in record '{}'", span.end,
                            record.id));
  }
  return TokenRange{first, last + 1};
}

std::size_t locate_field_token(const AuditRecord& record, const AuditTrace& trace,
                               CategoricalField field) {
  std::optional<CharSpan> span;
  const char* name = "";
  switch (field) {
    case CategoricalField::kPrecedentWeight:
      name = "precedent_weight";
      if (trace.precedent_weight) span = trace.precedent_weight->span;
      break;
    case CategoricalField::kInverseCheck:
      name = "inverse_check";
      if (trace.inverse_check) span = trace.inverse_check->span;
      break;
    case CategoricalField::kDefensibilityLevel:
      name = "defensibility_level";
      if (trace.defensibility_level) span = trace.defensibility_level->span;
      break;
  }
  if (!span || span->empty()) {
    throw Error(ErrorCode::kFieldTokenNotFound, fmt::format("{} not parsed", name));
  }
  const auto& tokens = record.tokens;
  const std::size_t index = first_token_ending_after(tokens, span->begin);
  if (index == tokens.size() || tokens[index].char_start > span->begin) {
    throw Error(ErrorCode::kFieldTokenNotFound,
                fmt::format("no token covers the {} value in record '{}'", name, record.id));
  }
  return index;
}

LocatedTrace locate_trace(const AuditRecord& record) {
  LocatedTrace out;
  auto parsed = parse_trace(record.trace_text);
  out.trace = std::move(parsed.trace);
  out.issues = std::move(parsed.issues);
  auto& trace = out.trace;

  try {
    const CharSpan span = find_citation_span(record.trace_text);
    if (trace.logic_chain && span.begin < trace.logic_chain->span.end) {
      out.issues.push_back({TraceIssueKind::kCitationBeforeLogicChain, "policy_citation",
                            "located citation span precedes the end of logic_chain"});
    }
    if (trace.policy_citation && !(trace.policy_citation->span == span)) {
      out.issues.push_back({TraceIssueKind::kCitationMismatch, "policy_citation",
                            fmt::format("span search [{}, {}) vs object scan [{}, {})",
                                        span.begin, span.end, trace.policy_citation->span.begin,
                                        trace.policy_citation->span.end)});
    }
    trace.citation_tokens = map_span_to_tokens(record, span);
  } catch (const Error& e) {
    out.citation_status = e.code();
  }

  auto locate = [&](auto& located, CategoricalField field) {
    if (!located) return;
    try {
      located->token = locate_field_token(record, trace, field);
    } catch (const Error&) {
      located->token.reset();
    }
  };
  locate(trace.precedent_weight, CategoricalField::kPrecedentWeight);
  locate(trace.inverse_check, CategoricalField::kInverseCheck);
  locate(trace.defensibility_level, CategoricalField::kDefensibilityLevel);
  return out;
}

std::string render_trace(std::string_view logic_chain, std::string_view policy_citation,
                         PrecedentWeight weight, InverseCheck check, Level level) {
  return fmt::format(
      R"({{"logic_chain": "{}", "policy_citation": "{}", "precedent_weight": "{}", )"
      R"("inverse_check": "{}", "defensibility_level": "{}"}})",
      logic_chain, policy_citation, to_string(weight), to_string(check),
      static_cast<int>(level));
}

}  // namespace defensibility
