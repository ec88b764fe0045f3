#include "defensibility/gate.hpp"

#include <fmt/format.h>

#include "defensibility/error.hpp"

namespace defensibility {

void validate_gate_config(const GateConfig& c) {
  if (!(c.di_min > 0.0 && c.di_min <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("di_min {} outside (0, 1]", c.di_min));
  }
  if (!(c.ai_max >= 0.0 && c.ai_max < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("ai_max {} outside [0, 1)", c.ai_max));
  }
  if (c.min_decisions < 1) throw Error(ErrorCode::kInvalidConfig, "min_decisions must be >= 1");
}

std::vector<GateConfig> default_scenarios() {
  return {
      {0.80, 0.20, 25, "Lenient"},
      {0.85, 0.15, 25, "Moderate"},
      {0.90, 0.15, 25, "Standard"},
      {0.95, 0.10, 25, "Strict"},
  };
}

std::string_view to_string(BindingConstraint constraint) {
  switch (constraint) {
    case BindingConstraint::kNone: return "NONE";
    case BindingConstraint::kSize: return "SIZE";
    case BindingConstraint::kDi: return "DI";
    case BindingConstraint::kAi: return "AI";
  }
  return "UNKNOWN";
}

std::string_view to_string(RiskFormula formula) {
  return formula == RiskFormula::kRateRatio ? "rate_ratio" : "exposure_weighted";
}

GateOutcome evaluate_gate(const CohortReport& report, const GateConfig& config) {
  if (report.n < config.min_decisions) return {false, BindingConstraint::kSize};
  if (report.di < config.di_min) return {false, BindingConstraint::kDi};
  if (report.ai > config.ai_max) return {false, BindingConstraint::kAi};
  return {true, BindingConstraint::kNone};
}

double risk_reduction(double baseline, double gated, double coverage, RiskFormula formula) {
  if (baseline == 0.0) throw Error(ErrorCode::kZeroBaseline, "baseline indefensible rate is 0");
  switch (formula) {
    case RiskFormula::kRateRatio: return 1.0 - gated / baseline;
    case RiskFormula::kExposureWeighted: return (baseline - gated * coverage) / baseline;
  }
  return 0.0;
}

std::vector<ScenarioRow> scenario_sweep(std::span<const CohortReport> fleet,
                                        std::span<const GateConfig> scenarios) {
  if (fleet.empty()) throw Error(ErrorCode::kEmptyCohort, "scenario sweep over an empty fleet");

  std::size_t total_n = 0, total_l3 = 0;
  for (const auto& c : fleet) {
    total_n += c.n;
    total_l3 += c.level_counts.l3;
  }
  const double baseline = static_cast<double>(total_l3) / static_cast<double>(total_n);

  std::vector<ScenarioRow> rows;
  rows.reserve(scenarios.size());
  for (const auto& config : scenarios) {
    validate_gate_config(config);
    ScenarioRow row;
    row.config = config;
    row.cohorts = fleet.size();
    row.decisions = total_n;
    row.baseline_indefensible_rate = baseline;
    std::size_t defensible = 0, yes = 0, l3 = 0;
    for (const auto& c : fleet) {
      if (!evaluate_gate(c, config).pass) continue;
      ++row.passing_cohorts;
      row.passing_decisions += c.n;
      defensible += c.level_counts.l1 + c.level_counts.l2;
      yes += c.inverse_yes;
      l3 += c.level_counts.l3;
    }
    row.community_coverage =
        static_cast<double>(row.passing_cohorts) / static_cast<double>(row.cohorts);
    row.decision_coverage =
        static_cast<double>(row.passing_decisions) / static_cast<double>(row.decisions);
    if (row.passing_decisions > 0) {
      const double n = static_cast<double>(row.passing_decisions);
      row.fleet_di = static_cast<double>(defensible) / n;
      row.fleet_ai = static_cast<double>(yes) / n;
      row.indefensible_rate = static_cast<double>(l3) / n;
      if (baseline > 0.0) {
        row.risk_reduction_rate_ratio =
            risk_reduction(baseline, *row.indefensible_rate, row.decision_coverage,
                           RiskFormula::kRateRatio);
        row.risk_reduction_exposure =
            risk_reduction(baseline, *row.indefensible_rate, row.decision_coverage,
                           RiskFormula::kExposureWeighted);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace defensibility
