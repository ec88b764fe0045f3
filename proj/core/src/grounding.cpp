#include "defensibility/grounding.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "defensibility/error.hpp"

namespace defensibility {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::set<std::string> unique_tokens(std::string_view text) {
  auto tokens = normalize_tokens(text);
  return {std::make_move_iterator(tokens.begin()), std::make_move_iterator(tokens.end())};
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

OverlapResult overlap_score(std::string_view citation, const RuleSet& rules) {
  const auto cited = unique_tokens(citation);
  if (cited.empty()) throw Error(ErrorCode::kEmptyCitation, "citation has no tokens");
  const std::size_t blocks =
      rules.platform_rules.size() + rules.community_rules.size() + rules.precedents.size();
  if (blocks == 0) {
    throw Error(ErrorCode::kEmptyRuleSet,
                fmt::format("rule set for '{}' has no blocks", rules.community_id));
  }

  OverlapResult best;
  std::size_t best_shared = 0;
  for (const auto* group : {&rules.platform_rules, &rules.community_rules, &rules.precedents}) {
    for (const auto& block : *group) {
      const auto body = unique_tokens(block.body);
      std::size_t shared = 0;
      for (const auto& t : cited) shared += body.count(t);
      if (shared > best_shared) {
        best_shared = shared;
        best.best_block_id = block.id;
      }
    }
  }
  best.score = static_cast<double>(best_shared) / static_cast<double>(cited.size());
  return best;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kClean: return "CLEAN";
    case Verdict::kFlagPds: return "FLAG_PDS";
    case Verdict::kFlagGrounding: return "FLAG_GROUNDING";
    case Verdict::kFlagBoth: return "FLAG_BOTH";
  }
  return "UNKNOWN";
}

Verdict two_layer_verdict(double s, double overlap, const GroundingThresholds& t) {
  const bool pds = s < t.s_min;
  const bool grounding = overlap < t.overlap_min;
  if (pds && grounding) return Verdict::kFlagBoth;
  if (pds) return Verdict::kFlagPds;
  if (grounding) return Verdict::kFlagGrounding;
  return Verdict::kClean;
}

std::string_view to_string(Archetype archetype) {
  switch (archetype) {
    case Archetype::kLowEntropyFabrication: return "LOW_ENTROPY_FABRICATION";
    case Archetype::kPolicyPenumbra: return "POLICY_PENUMBRA";
    case Archetype::kUnclassified: return "UNCLASSIFIED";
  }
  return "UNKNOWN";
}

HKappaBand clean_baseline_band(std::span<const double> clean, double quantile) {
  if (clean.empty()) throw Error(ErrorCode::kTooFewSamples, "no clean H[kappa] values");
  std::vector<double> sorted(clean.begin(), clean.end());
  std::sort(sorted.begin(), sorted.end());
  // Nearest rank: ceil(q * n), 1-based.
  auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return {0.0, sorted[rank - 1]};
}

Archetype classify_archetype(double h_kappa, double s, double overlap,
                             const GroundingThresholds& t, const HKappaBand& band) {
  if (overlap < t.overlap_min && s < t.s_min) return Archetype::kLowEntropyFabrication;
  if (overlap >= t.overlap_min && band.contains(h_kappa)) return Archetype::kPolicyPenumbra;
  return Archetype::kUnclassified;
}

std::map<std::string, DetectionRate> detection_summary(std::span<const VerificationRow> rows) {
  std::map<std::string, DetectionRate> out;
  for (const auto& r : rows) {
    auto& rate = out[r.label.value_or("unlabeled")];
    ++rate.cases;
    rate.flagged += is_flagged(r.verdict);
  }
  return out;
}

}  // namespace defensibility
