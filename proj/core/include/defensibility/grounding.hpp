#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "defensibility/types.hpp"

namespace defensibility {

/// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so
/// UTF-8 sequences stay inside their token.
std::vector<std::string> normalize_tokens(std::string_view text);

struct OverlapResult {
  std::string best_block_id;  // empty when no block shares a token
  double score = 0.0;         // |U(citation) & U(block)| / |U(citation)|
};

/// Best containment of the citation's unique tokens in any platform rule,
/// community rule or precedent block. Ties keep the first block in that
/// order. Throws Error(kEmptyCitation) / Error(kEmptyRuleSet).
OverlapResult overlap_score(std::string_view citation, const RuleSet& rules);

struct GroundingThresholds {
  double s_min = 0.10;
  double overlap_min = 0.5;
};

enum class Verdict { kClean, kFlagPds, kFlagGrounding, kFlagBoth };
std::string_view to_string(Verdict verdict);
inline bool is_flagged(Verdict v) { return v != Verdict::kClean; }

Verdict two_layer_verdict(double s, double overlap, const GroundingThresholds& thresholds = {});

enum class Archetype { kLowEntropyFabrication, kPolicyPenumbra, kUnclassified };
std::string_view to_string(Archetype archetype);

struct HKappaBand {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double h) const { return h >= lo && h <= hi; }
};

/// Band used when no clean cohort is supplied.
inline constexpr HKappaBand kDefaultHKappaBand{0.0, 0.5};

/// [0, p95] of clean-cohort H[kappa] by nearest rank. Throws
/// Error(kTooFewSamples) on an empty input.
HKappaBand clean_baseline_band(std::span<const double> clean_h_kappa, double quantile = 0.95);

Archetype classify_archetype(double h_kappa, double s, double overlap,
                             const GroundingThresholds& thresholds = {},
                             const HKappaBand& band = kDefaultHKappaBand);

struct VerificationRow {
  std::string record_id;
  std::optional<std::string> label;  // injected-attack tag when known
  double s = 0.0;
  std::optional<double> h_kappa;
  OverlapResult overlap;
  Verdict verdict = Verdict::kClean;
  Archetype archetype = Archetype::kUnclassified;
};

struct DetectionRate {
  std::size_t cases = 0;
  std::size_t flagged = 0;
  double rate() const { return cases ? static_cast<double>(flagged) / static_cast<double>(cases) : 0.0; }
};

/// Flag rate per label, keyed by label text; unlabeled rows are grouped
/// under "unlabeled".
std::map<std::string, DetectionRate> detection_summary(std::span<const VerificationRow> rows);

}  // namespace defensibility
