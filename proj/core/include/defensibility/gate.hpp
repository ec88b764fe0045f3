#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "defensibility/metrics.hpp"

namespace defensibility {

struct GateConfig {
  double di_min = 0.90;
  double ai_max = 0.15;
  std::size_t min_decisions = 25;
  std::string scenario_name = "Standard";
};

/// Throws Error(kInvalidConfig) unless 0 < di_min <= 1, 0 <= ai_max < 1,
/// min_decisions >= 1.
void validate_gate_config(const GateConfig& config);

/// Lenient 80/20, Moderate 85/15, Standard 90/15, Strict 95/10 (min 25).
std::vector<GateConfig> default_scenarios();

enum class BindingConstraint { kNone, kSize, kDi, kAi };
std::string_view to_string(BindingConstraint constraint);

struct GateOutcome {
  bool pass = false;
  BindingConstraint binding_constraint = BindingConstraint::kNone;
};

/// Pass iff n >= min_decisions, di >= di_min, ai <= ai_max. The binding
/// constraint is the first failing check in the order SIZE, DI, AI.
GateOutcome evaluate_gate(const CohortReport& report, const GateConfig& config);

enum class RiskFormula {
  kRateRatio,        // 1 - gated / baseline
  kExposureWeighted  // (baseline - gated * coverage) / baseline
};
std::string_view to_string(RiskFormula formula);

/// Throws Error(kZeroBaseline) when baseline is 0.
double risk_reduction(double baseline_indef_rate, double gated_indef_rate,
                      double decision_coverage, RiskFormula formula);

struct ScenarioRow {
  GateConfig config;
  std::size_t cohorts = 0;
  std::size_t passing_cohorts = 0;
  std::size_t decisions = 0;
  std::size_t passing_decisions = 0;
  double community_coverage = 0.0;
  double decision_coverage = 0.0;
  // Decision-weighted over passing cohorts; empty when none pass.
  std::optional<double> fleet_di;
  std::optional<double> fleet_ai;
  std::optional<double> indefensible_rate;
  double baseline_indefensible_rate = 0.0;
  std::optional<double> risk_reduction_rate_ratio;
  std::optional<double> risk_reduction_exposure;
};

/// One row per scenario over a fixed fleet. Throws Error(kEmptyCohort)
/// for an empty fleet.
std::vector<ScenarioRow> scenario_sweep(std::span<const CohortReport> fleet,
                                        std::span<const GateConfig> scenarios);

}  // namespace defensibility
