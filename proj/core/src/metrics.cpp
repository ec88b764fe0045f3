#include "defensibility/metrics.hpp"

#include <fmt/format.h>

#include <vector>

#include "defensibility/error.hpp"

namespace defensibility {

void LevelCounts::add(Level level) {
  switch (level) {
    case Level::kL1: ++l1; break;
    case Level::kL2: ++l2; break;
    case Level::kL3: ++l3; break;
  }
}

std::string_view to_string(GovernanceState state) {
  switch (state) {
    case GovernanceState::kEarnedAutonomy: return "EARNED_AUTONOMY";
    case GovernanceState::kPolicyGaps: return "POLICY_GAPS";
    case GovernanceState::kNormativeComplexity: return "NORMATIVE_COMPLEXITY";
  }
  return "UNKNOWN";
}

double compute_di(std::span<const Level> levels) {
  if (levels.empty()) throw Error(ErrorCode::kEmptyCohort, "DI over no decisions");
  std::size_t defensible = 0;
  for (Level l : levels) defensible += is_defensible(l) ? 1 : 0;
  return static_cast<double>(defensible) / static_cast<double>(levels.size());
}

double compute_ai(std::span<const InverseCheck> checks) {
  if (checks.empty()) throw Error(ErrorCode::kEmptyCohort, "AI over no decisions");
  std::size_t yes = 0;
  for (InverseCheck c : checks) yes += c == InverseCheck::kYes ? 1 : 0;
  return static_cast<double>(yes) / static_cast<double>(checks.size());
}

double compute_f1(std::span<const ActionPair> pairs, Action positive) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyCohort, "F1 over no decisions");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& p : pairs) {
    const bool model_pos = p.model == positive;
    const bool human_pos = p.human == positive;
    tp += model_pos && human_pos;
    fp += model_pos && !human_pos;
    fn += !model_pos && human_pos;
  }
  // 2PR/(P+R) simplifies to 2TP/(2TP+FP+FN); zero when TP = 0.
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double defensible_fn_rate(std::span<const LabeledOutcome> outcomes, Action positive) {
  std::size_t fn = 0, defensible = 0;
  for (const auto& o : outcomes) {
    if (o.model != positive && o.human == positive) {
      ++fn;
      defensible += is_defensible(o.level);
    }
  }
  if (fn == 0) throw Error(ErrorCode::kNoFalseNegatives, "");
  return static_cast<double>(defensible) / static_cast<double>(fn);
}

double accurate_but_indefensible_rate(std::span<const LabeledOutcome> outcomes) {
  std::size_t agree = 0, l3 = 0;
  for (const auto& o : outcomes) {
    if (o.model == o.human) {
      ++agree;
      l3 += o.level == Level::kL3;
    }
  }
  if (agree == 0) throw Error(ErrorCode::kNoAgreements, "");
  return static_cast<double>(l3) / static_cast<double>(agree);
}

double defensible_disagreement_rate(std::span<const LabeledOutcome> outcomes) {
  std::size_t disagree = 0, defensible = 0;
  for (const auto& o : outcomes) {
    if (o.model != o.human) {
      ++disagree;
      defensible += is_defensible(o.level);
    }
  }
  if (disagree == 0) throw Error(ErrorCode::kNoFalseNegatives, "no disagreements");
  return static_cast<double>(defensible) / static_cast<double>(disagree);
}

GovernanceState classify_governance_state(const CohortReport& report,
                                          const GovernanceThresholds& thresholds) {
  if (report.n < thresholds.min_cohort_size) {
    throw Error(ErrorCode::kCohortTooSmall,
                fmt::format("cohort '{}' has {} < {} decisions", report.cohort_id, report.n,
                            thresholds.min_cohort_size));
  }
  if (report.di < thresholds.di_threshold) return GovernanceState::kPolicyGaps;
  if (report.ai <= thresholds.ai_threshold) return GovernanceState::kEarnedAutonomy;
  return GovernanceState::kNormativeComplexity;
}

CohortReport build_cohort_report(std::string cohort_id, std::span<const CaseOutcome> outcomes,
                                 const GovernanceThresholds& thresholds, Action positive) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::kEmptyCohort, fmt::format("cohort '{}' is empty", cohort_id));
  }
  CohortReport r;
  r.cohort_id = std::move(cohort_id);
  r.n = outcomes.size();

  std::vector<Level> levels;
  std::vector<InverseCheck> checks;
  std::vector<ActionPair> pairs;
  std::vector<LabeledOutcome> labeled;
  levels.reserve(r.n);
  checks.reserve(r.n);
  for (const auto& o : outcomes) {
    levels.push_back(o.level);
    checks.push_back(o.inverse_check);
    r.level_counts.add(o.level);
    r.inverse_yes += o.inverse_check == InverseCheck::kYes;
    if (o.human) {
      pairs.push_back({o.proposed, *o.human});
      labeled.push_back({o.proposed, *o.human, o.level});
      if (o.proposed == *o.human) {
        ++r.agreements;
      } else {
        ++r.disagreements;
        r.false_negatives += o.proposed != positive && *o.human == positive;
      }
    }
  }
  r.di = compute_di(levels);
  r.ai = compute_ai(checks);
  r.labeled = pairs.size();
  if (!pairs.empty()) {
    r.f1 = compute_f1(pairs, positive);
    r.gap = r.di - *r.f1;
    if (r.false_negatives > 0) r.defensible_fn_rate = defensible_fn_rate(labeled, positive);
    if (r.agreements > 0) r.accurate_but_indefensible_rate = accurate_but_indefensible_rate(labeled);
    if (r.disagreements > 0) r.defensible_disagreement_rate = defensible_disagreement_rate(labeled);
  }
  if (r.n >= thresholds.min_cohort_size) {
    r.governance_state = classify_governance_state(r, thresholds);
  }
  return r;
}

CohortDelta compare_cohorts(const CohortReport& a, const CohortReport& b) {
  CohortDelta d;
  d.from = a.cohort_id;
  d.to = b.cohort_id;
  d.delta_di_pp = (b.di - a.di) * 100.0;
  d.delta_ai_pp = (b.ai - a.ai) * 100.0;
  auto diff = [](std::size_t x, std::size_t y) {
    return static_cast<long long>(y) - static_cast<long long>(x);
  };
  d.delta_levels = {diff(a.level_counts.l1, b.level_counts.l1),
                    diff(a.level_counts.l2, b.level_counts.l2),
                    diff(a.level_counts.l3, b.level_counts.l3)};
  d.delta_n = diff(a.n, b.n);
  return d;
}

}  // namespace defensibility
