#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "defensibility/types.hpp"

namespace defensibility {

/// Per-record audit outcome used for cohort aggregation.
struct CaseOutcome {
  Level level = Level::kL1;
  InverseCheck inverse_check = InverseCheck::kNo;
  Action proposed = Action::kApprove;
  std::optional<Action> human;
};

struct ActionPair {
  Action model;
  Action human;
};

struct LabeledOutcome {
  Action model;
  Action human;
  Level level;
};

struct LevelCounts {
  std::size_t l1 = 0;
  std::size_t l2 = 0;
  std::size_t l3 = 0;

  std::size_t total() const { return l1 + l2 + l3; }
  void add(Level level);
  bool operator==(const LevelCounts&) const = default;
};

enum class GovernanceState { kEarnedAutonomy, kPolicyGaps, kNormativeComplexity };
std::string_view to_string(GovernanceState state);

struct GovernanceThresholds {
  double di_threshold = 0.90;
  double ai_threshold = 0.15;
  std::size_t min_cohort_size = 25;
};

struct CohortReport {
  std::string cohort_id;
  std::size_t n = 0;
  double di = 0.0;
  double ai = 0.0;
  LevelCounts level_counts;
  std::size_t inverse_yes = 0;

  // Agreement metrics, over records with a human action.
  std::size_t labeled = 0;
  std::size_t agreements = 0;
  std::size_t disagreements = 0;
  std::size_t false_negatives = 0;
  std::optional<double> f1;
  std::optional<double> gap;  // di - f1
  std::optional<double> defensible_fn_rate;
  std::optional<double> accurate_but_indefensible_rate;
  std::optional<double> defensible_disagreement_rate;  // over all disagreements

  std::optional<GovernanceState> governance_state;
};

/// Fraction of levels in {L1, L2}. Throws Error(kEmptyCohort).
double compute_di(std::span<const Level> levels);

/// Fraction of inverse checks that fired. Throws Error(kEmptyCohort).
double compute_ai(std::span<const InverseCheck> checks);

/// F1 of model `positive` decisions against human `positive` decisions;
/// 0 when precision + recall = 0. Throws Error(kEmptyCohort).
double compute_f1(std::span<const ActionPair> pairs, Action positive = Action::kRemove);

/// Among false negatives (model != positive, human == positive), the
/// fraction audited L1/L2. Throws Error(kNoFalseNegatives).
double defensible_fn_rate(std::span<const LabeledOutcome> outcomes,
                          Action positive = Action::kRemove);

/// Among model-human agreements, the fraction audited L3.
/// Throws Error(kNoAgreements).
double accurate_but_indefensible_rate(std::span<const LabeledOutcome> outcomes);

/// Among all model-human disagreements, the fraction audited L1/L2.
/// Throws Error(kNoFalseNegatives) when there are no disagreements.
double defensible_disagreement_rate(std::span<const LabeledOutcome> outcomes);

/// EARNED_AUTONOMY iff DI >= di and AI <= ai; POLICY_GAPS iff DI < di;
/// otherwise NORMATIVE_COMPLEXITY. Throws Error(kCohortTooSmall).
GovernanceState classify_governance_state(const CohortReport& report,
                                          const GovernanceThresholds& thresholds = {});

/// Aggregates outcomes into a report; the governance state is filled when
/// the cohort meets the minimum size. Throws Error(kEmptyCohort).
CohortReport build_cohort_report(std::string cohort_id, std::span<const CaseOutcome> outcomes,
                                 const GovernanceThresholds& thresholds = {},
                                 Action positive = Action::kRemove);

/// Signed differences b - a, rates in percentage points.
struct CohortDelta {
  std::string from;
  std::string to;
  double delta_di_pp = 0.0;
  double delta_ai_pp = 0.0;
  std::array<long long, 3> delta_levels{};
  long long delta_n = 0;
};

CohortDelta compare_cohorts(const CohortReport& a, const CohortReport& b);

}  // namespace defensibility
