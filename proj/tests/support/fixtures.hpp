#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "defensibility/trace_parser.hpp"
#include "defensibility/types.hpp"

namespace fixtures {

using namespace defensibility;

struct Piece {
  std::string text;
  std::vector<Candidate> candidates;
};

inline std::vector<Candidate> probs(std::vector<std::pair<std::string, double>> pairs) {
  std::vector<Candidate> out;
  for (auto& [t, p] : pairs) out.push_back({t, std::log(p)});
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.logprob > b.logprob; });
  return out;
}

inline AuditRecord from_pieces(const std::vector<Piece>& pieces, std::string id = "r1") {
  AuditRecord r;
  r.id = std::move(id);
  r.community_id = "test";
  r.content = "content";
  r.proposed_action = Action::kRemove;
  r.temperature = 0.7;
  for (const auto& p : pieces) {
    TokenEvent t;
    t.text = p.text;
    t.char_start = r.trace_text.size();
    r.trace_text += p.text;
    t.char_end = r.trace_text.size();
    t.top_candidates = p.candidates;
    t.logprob = p.candidates.empty() ? 0.0 : p.candidates.front().logprob;
    for (const auto& c : p.candidates) {
      if (c.token == p.text) t.logprob = c.logprob;
    }
    r.tokens.push_back(std::move(t));
  }
  return r;
}

// Runs of word characters, or single other characters.
inline std::vector<std::string> chunk(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < text.size()) {
    std::size_t j = i + 1;
    if (word(text[i])) {
      while (j < text.size() && word(text[j])) ++j;
    }
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

struct AuditSpec {
  std::string logic = "the post repeats a link";
  std::string citation = "Rule 3 no spam";
  PrecedentWeight weight = PrecedentWeight::kHigh;
  InverseCheck check = InverseCheck::kNo;
  Level level = Level::kL1;
  std::vector<Candidate> weight_cands = probs({{"High", 0.9}, {"Medium", 0.05}, {"Low", 0.05}});
  std::vector<Candidate> check_cands = probs({{"No", 0.8}, {"Yes", 0.2}});
  std::vector<Candidate> level_cands = probs({{"1", 0.8}, {"2", 0.15}, {"3", 0.05}});
  // Citation tokens get this distribution when set; deterministic otherwise.
  std::vector<Candidate> citation_cands;
};

// Renders a trace, splits it into word/punctuation tokens and attaches
// candidate distributions at the field value tokens.
inline AuditRecord make_audit(const AuditSpec& s, std::string id = "r1") {
  const std::string trace = render_trace(s.logic, s.citation, s.weight, s.check, s.level);
  const auto cit = find_citation_span(trace);
  const std::string w = "\"precedent_weight\": \"";
  const std::string c = "\"inverse_check\": \"";
  const std::string l = "\"defensibility_level\": \"";
  const std::size_t wpos = trace.find(w) + w.size();
  const std::size_t cpos = trace.find(c) + c.size();
  const std::size_t lpos = trace.find(l) + l.size();

  std::vector<Piece> pieces;
  std::size_t off = 0;
  for (auto& t : chunk(trace)) {
    Piece p{t, {}};
    if (off == wpos) {
      p.candidates = s.weight_cands;
    } else if (off == cpos) {
      p.candidates = s.check_cands;
    } else if (off == lpos) {
      p.candidates = s.level_cands;
    } else if (off >= cit.begin && off < cit.end && !s.citation_cands.empty()) {
      p.candidates = s.citation_cands;
    } else {
      p.candidates = {{t, 0.0}};
    }
    off += t.size();
    pieces.push_back(std::move(p));
  }
  return from_pieces(pieces, std::move(id));
}

}  // namespace fixtures
