#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "defensibility/audit.hpp"
#include "defensibility/calibration.hpp"
#include "defensibility/error.hpp"
#include "defensibility/gate.hpp"
#include "defensibility/grounding.hpp"
#include "defensibility/metrics.hpp"
#include "defensibility/record_io.hpp"
#include "defensibility/simulator.hpp"
#include "defensibility/stability.hpp"

namespace defensibility::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Options {
  std::vector<std::string> inputs;
  std::string rules;
  std::string weights;
  std::string out;
  std::string secondary_out;
  std::string scenarios;
  std::string truth;
  std::string component = "h_w";
  std::string partition = "all";
  std::string mode = "fleet";
  std::string hypothesis = "H_G";
  std::string labels = "sampled";
  std::string layout;
  std::size_t bins = 10;
  std::optional<double> di_min;
  std::optional<double> ai_max;
  std::optional<std::size_t> min_decisions;
  std::uint64_t seed = 1;
  double temperature = 0.7;
  std::vector<double> temperatures{0.1, 0.3, 0.7, 1.0};
  std::size_t replicates = 1;
  std::optional<std::size_t> n;
  std::size_t cohorts = 20;
  double adversarial_fraction = 0.0;
  double test_fraction = 0.2;
  double s_min = 0.10;
  double overlap_min = 0.5;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) { return fmt::format("{:.17g}", v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }
std::string fixed(double v, int digits = 4) { return fmt::format("{:.{}f}", v, digits); }
std::string fixed(const std::optional<double>& v, int digits = 4) {
  return v ? fixed(*v, digits) : std::string();
}
std::string pct(const std::optional<double>& v) {
  return v ? fixed(*v * 100.0, 2) : std::string();
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    write_file_atomic(path, content);
  }
}

const std::string& single_input(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("exactly one --input is required");
  return o.inputs.front();
}

std::vector<AuditRecord> load_records(const std::string& path, std::ostream& err) {
  auto result = read_dataset(path);
  for (const auto& e : result.errors) {
    err << fmt::format("skip line {}: {}\n", e.line, e.message);
  }
  if (!result.errors.empty()) {
    err << fmt::format("skipped {} of {} line(s) in {}\n", result.errors.size(), result.lines, path);
  }
  return std::move(result.records);
}

EntropyComponent component_of(const Options& o) {
  const auto c = parse_component(o.component);
  if (!c) throw UsageError(fmt::format("--component must be h_w or h_kappa, got '{}'", o.component));
  return *c;
}

CalibrationModel model_of(const Options& o, std::ostream& err) {
  if (o.weights.empty()) {
    err << "no --weights given; using equal weights\n";
    return CalibrationModel::equal_weights(component_of(o));
  }
  auto model = load_weights(o.weights, true);
  if (model.is_fallback) {
    err << fmt::format("weights file '{}' not found; using equal weights\n", o.weights);
    model.component = component_of(o);
  }
  return model;
}

bool in_partition(const Options& o, std::string_view id) {
  if (o.partition == "all") return true;
  const bool test =
      static_cast<double>(stable_hash(id) % 10000) < o.test_fraction * 10000.0;
  return o.partition == "test" ? test : !test;
}

void check_partition(const Options& o) {
  if (o.partition != "all" && o.partition != "train" && o.partition != "test") {
    throw UsageError("--partition must be all, train or test");
  }
  if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) {
    throw UsageError("--test-fraction must be in (0, 1)");
  }
}

GovernanceThresholds thresholds_of(const Options& o) {
  GovernanceThresholds t;
  if (o.di_min) t.di_threshold = *o.di_min;
  if (o.ai_max) t.ai_threshold = *o.ai_max;
  if (o.min_decisions) t.min_cohort_size = *o.min_decisions;
  return t;
}

// ---------------------------------------------------------------- cohorts

std::vector<CohortReport> cohort_reports(const std::vector<AuditRecord>& records,
                                         const GovernanceThresholds& thresholds,
                                         std::ostream& err) {
  std::map<std::string, std::vector<CaseOutcome>> by_cohort;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    const auto outcome = case_outcome(r, audit_record(r));
    if (!outcome) {
      ++skipped;
      continue;
    }
    by_cohort[r.community_id].push_back(*outcome);
  }
  if (skipped) err << fmt::format("skipped {} invalid audit(s)\n", skipped);
  std::vector<CohortReport> reports;
  for (const auto& [id, outcomes] : by_cohort) {
    reports.push_back(build_cohort_report(id, outcomes, thresholds));
  }
  if (reports.empty()) throw Error(ErrorCode::kEmptyCohort, "no valid audits in input");
  return reports;
}

std::string cohort_table(const std::vector<CohortReport>& reports) {
  std::string s = csv_line({"community_id", "n", "di_pct", "ai_pct", "l1", "l2", "l3", "labeled",
                            "f1_prob", "gap_pp", "defensible_fn_pct",
                            "accurate_but_indefensible_pct", "governance_state"});
  for (const auto& r : reports) {
    s += csv_line({r.cohort_id, std::to_string(r.n), pct(r.di), pct(r.ai),
                   std::to_string(r.level_counts.l1), std::to_string(r.level_counts.l2),
                   std::to_string(r.level_counts.l3), std::to_string(r.labeled), fixed(r.f1),
                   r.gap ? fixed(*r.gap * 100.0, 2) : std::string(), pct(r.defensible_fn_rate),
                   pct(r.accurate_but_indefensible_rate),
                   r.governance_state ? std::string(to_string(*r.governance_state))
                                      : std::string("INSUFFICIENT_DECISIONS")});
  }
  return s;
}

std::string state_table(const std::vector<CohortReport>& reports) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (auto s : {GovernanceState::kEarnedAutonomy, GovernanceState::kPolicyGaps,
                 GovernanceState::kNormativeComplexity}) {
    counts[std::string(to_string(s))] = {0, 0};
  }
  counts["INSUFFICIENT_DECISIONS"] = {0, 0};
  std::size_t total = 0;
  for (const auto& r : reports) {
    const std::string key = r.governance_state ? std::string(to_string(*r.governance_state))
                                               : std::string("INSUFFICIENT_DECISIONS");
    ++counts[key].first;
    counts[key].second += r.n;
    total += r.n;
  }
  std::string s = csv_line({"governance_state", "cohorts", "decisions", "decision_share_pct"});
  for (const auto& [state, c] : counts) {
    s += csv_line({state, std::to_string(c.first), std::to_string(c.second),
                   pct(static_cast<double>(c.second) / static_cast<double>(total))});
  }
  return s;
}

// ---------------------------------------------------------------- gate

std::vector<GateConfig> scenarios_of(const Options& o) {
  if (!o.scenarios.empty()) {
    std::vector<GateConfig> out;
    try {
      const auto j = nlohmann::json::parse(read_file(o.scenarios));
      if (!j.is_array()) throw Error(ErrorCode::kSchemaMismatch, "scenarios file must be an array");
      for (const auto& s : j) {
        GateConfig c;
        c.scenario_name = s.at("name").get<std::string>();
        c.di_min = s.at("di_min").get<double>();
        c.ai_max = s.at("ai_max").get<double>();
        c.min_decisions = s.value("min_decisions", std::size_t{25});
        out.push_back(c);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaMismatch, fmt::format("scenarios: {}", e.what()));
    }
    return out;
  }
  if (o.di_min || o.ai_max || o.min_decisions) {
    GateConfig c;
    c.scenario_name = "Custom";
    if (o.di_min) c.di_min = *o.di_min;
    if (o.ai_max) c.ai_max = *o.ai_max;
    if (o.min_decisions) c.min_decisions = *o.min_decisions;
    return {c};
  }
  return default_scenarios();
}

std::string gate_table(const std::vector<ScenarioRow>& rows) {
  std::string s = csv_line({"scenario", "di_min_prob", "ai_max_prob", "min_decisions",
                            "passing_cohorts", "cohorts", "community_coverage_pct",
                            "decision_coverage_pct", "fleet_di_pct", "fleet_ai_pct",
                            "indefensible_rate_pct", "baseline_indefensible_pct",
                            "risk_reduction_rate_ratio_pct", "risk_reduction_exposure_pct"});
  for (const auto& r : rows) {
    s += csv_line({r.config.scenario_name, fixed(r.config.di_min, 2), fixed(r.config.ai_max, 2),
                   std::to_string(r.config.min_decisions), std::to_string(r.passing_cohorts),
                   std::to_string(r.cohorts), pct(r.community_coverage),
                   pct(r.decision_coverage), pct(r.fleet_di), pct(r.fleet_ai),
                   pct(r.indefensible_rate), pct(r.baseline_indefensible_rate),
                   pct(r.risk_reduction_rate_ratio), pct(r.risk_reduction_exposure)});
  }
  return s;
}

std::string run_gate(const Options& o, std::ostream& err) {
  const auto scenarios = scenarios_of(o);
  const auto records = load_records(single_input(o), err);
  const auto reports = cohort_reports(records, GovernanceThresholds{}, err);
  return gate_table(scenario_sweep(reports, scenarios));
}

// ---------------------------------------------------------------- stability

std::vector<CaseTruth> load_truth(const std::string& path) {
  std::vector<CaseTruth> out;
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(truth_from_json_line(line));
  }
  return out;
}

std::string sweep_table(const std::vector<SweepColumn>& cols) {
  std::vector<std::string> header{"metric", "unit"};
  for (const auto& c : cols) header.push_back(fmt::format("T={:g}", c.temperature));
  std::string s = csv_line(header);
  auto row = [&](std::string name, std::string unit, auto getter) {
    std::vector<std::string> f{std::move(name), std::move(unit)};
    for (const auto& c : cols) f.push_back(getter(c));
    s += csv_line(f);
  };
  row("cases", "count", [](const SweepColumn& c) { return std::to_string(c.cases); });
  row("mean_sigma_pds_all", "S", [](const SweepColumn& c) { return fixed(c.mean_sigma_all); });
  row("mean_sigma_pds_stable", "S", [](const SweepColumn& c) { return fixed(c.mean_sigma_stable); });
  row("mean_sigma_pds_flippers", "S",
      [](const SweepColumn& c) { return fixed(c.mean_sigma_flippers); });
  row("sigma_ratio_flippers_over_stable", "ratio",
      [](const SweepColumn& c) { return fixed(c.sigma_ratio, 3); });
  row("boundary_flip_rate_flippers_interval", "pct",
      [](const SweepColumn& c) { return pct(c.boundary_rate_flippers); });
  row("boundary_flip_rate_stable_interval", "pct",
      [](const SweepColumn& c) { return pct(c.boundary_rate_stable); });
  row("h_kappa_rank_corr_vs_lowest_t", "spearman",
      [](const SweepColumn& c) { return fixed(c.h_kappa_rank_corr, 3); });
  row("aggregate_di", "pct", [](const SweepColumn& c) { return pct(c.di_aggregate); });
  return s;
}

struct StabilityRun {
  std::vector<StabilityProfile> profiles;
  std::vector<SweepColumn> sweep;
};

StabilityRun run_stability_core(const Options& o, std::ostream& err) {
  if (o.inputs.empty()) throw UsageError("at least one --input is required");
  const auto model = model_of(o, err);
  ReplicateGrouping all;
  for (const auto& path : o.inputs) {
    auto g = group_replicates(load_records(path, err), model);
    all.skipped += g.skipped;
    for (auto& s : g.sets) all.sets.push_back(std::move(s));
  }
  if (all.skipped) err << fmt::format("skipped {} record(s) without a score\n", all.skipped);
  StabilityRun run;
  for (const auto& set : all.sets) {
    try {
      run.profiles.push_back(stability_profile(set));
    } catch (const Error& e) {
      err << fmt::format("case {}: {}\n", set.case_id, e.what());
    }
  }
  if (!o.truth.empty()) {
    const auto cases = sweep_input(all, load_truth(o.truth));
    std::vector<SweepCase> usable;
    for (const auto& c : cases) {
      if (c.replicates.k() >= 2) usable.push_back(c);
    }
    if (!usable.empty()) run.sweep = temperature_sweep(usable);
  }
  return run;
}

std::string profile_table(const std::vector<StabilityProfile>& profiles) {
  std::string s = csv_line({"case_id", "temperature", "k", "sigma_pds", "mean_s_prob",
                            "p_l3_prob", "dominant_level", "dominant_fraction_prob",
                            "boundary_unstable", "stability_class", "inverse_yes_prob",
                            "mean_h_kappa_bits"});
  for (const auto& p : profiles) {
    s += csv_line({p.case_id, fmt::format("{:g}", p.temperature), std::to_string(p.k),
                   fixed(p.sigma_pds, 6), fixed(p.mean_s, 6), fixed(p.p_l3),
                   std::to_string(static_cast<int>(p.dominant_level)), fixed(p.dominant_fraction),
                   p.boundary_unstable ? "true" : "false", std::string(to_string(p.stability_class)),
                   fixed(p.inverse_yes_rate), fixed(p.mean_h_kappa, 6)});
  }
  return s;
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
  const auto& path = single_input(o);
  const auto result = read_dataset(path);
  std::size_t valid = 0, malformed = 0, missing = 0, invalid_value = 0, violations = 0;
  for (const auto& r : result.records) {
    const auto a = audit_record(r);
    if (a.valid) {
      ++valid;
      continue;
    }
    auto has = [&](TraceIssueKind k) {
      return std::any_of(a.located.issues.begin(), a.located.issues.end(),
                         [k](const TraceIssue& i) { return i.kind == k; });
    };
    std::string reason;
    if (has(TraceIssueKind::kMalformed)) {
      ++malformed;
      reason = "malformed trace";
    } else if (has(TraceIssueKind::kMissingField)) {
      ++missing;
      reason = "missing field";
    } else if (has(TraceIssueKind::kInvalidValue)) {
      ++invalid_value;
      reason = "invalid value";
    } else {
      ++violations;
      reason = a.violations.empty() ? "invariant violation"
                                    : fmt::format("{}: {}", a.violations.front().field,
                                                  a.violations.front().message);
    }
    err << fmt::format("record {}: {}\n", r.id, reason);
  }
  std::size_t duplicates = 0;
  for (const auto& v : validate_dataset(result.records)) {
    if (v.message.find("duplicate") != std::string::npos) ++duplicates;
  }
  ojson j;
  j["lines"] = result.lines;
  j["parse_errors"] = result.errors.size();
  j["records"] = result.records.size();
  j["valid_audits"] = valid;
  j["invalid_audits"] = result.records.size() - valid;
  j["attrition"] = {{"malformed_trace", malformed},
                    {"missing_field", missing},
                    {"invalid_value", invalid_value},
                    {"record_violations", violations}};
  j["duplicate_ids"] = duplicates;
  emit(o.out, j.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_extract(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = model_of(o, err);
  const auto records = load_records(single_input(o), err);
  std::string s = csv_line({"id", "community_id", "lambda_xi_nats", "h_kappa_bits", "h_w_bits",
                            "sigma_rho_prob", "map_level", "level", "inverse_check", "s_prob"});
  std::size_t rows = 0, skipped = 0;
  for (const auto& r : records) {
    const auto a = audit_record(r, &model);
    if (!a.valid) {
      ++skipped;
      continue;
    }
    const auto& t = a.located.trace;
    s += csv_line({r.id, r.community_id, num(a.pds.lambda_xi), num(a.pds.h_kappa), num(a.pds.h_w),
                   num(a.pds.sigma_rho),
                   a.pds.map_level ? std::to_string(static_cast<int>(*a.pds.map_level)) : "",
                   std::to_string(static_cast<int>(t.defensibility_level->value)),
                   std::string(to_string(t.inverse_check->value)), num(a.s)});
    ++rows;
  }
  emit(o.out, s, out);
  err << fmt::format("extracted {} row(s); skipped {} invalid audit(s)\n", rows, skipped);
  return kExitOk;
}

struct FeatureRow {
  std::string id;
  PdsVector pds;
  int y = 0;
};

std::vector<FeatureRow> load_features(const Options& o) {
  check_partition(o);
  const auto table = parse_csv(read_file(single_input(o)));
  const auto c_id = table.column("id");
  const auto c_lambda = table.column("lambda_xi_nats");
  const auto c_hk = table.column("h_kappa_bits");
  const auto c_hw = table.column("h_w_bits");
  const auto c_sigma = table.column("sigma_rho_prob");
  const auto c_level = table.column("level");
  std::vector<FeatureRow> rows;
  for (const auto& row : table.rows) {
    if (!in_partition(o, row[c_id])) continue;
    FeatureRow f;
    f.id = row[c_id];
    f.pds.lambda_xi = parse_optional_number(row[c_lambda]);
    f.pds.h_kappa = parse_optional_number(row[c_hk]);
    f.pds.h_w = parse_optional_number(row[c_hw]);
    f.pds.sigma_rho = parse_optional_number(row[c_sigma]);
    const auto level = parse_optional_number(row[c_level]);
    if (!level || (*level != 1 && *level != 2 && *level != 3)) {
      throw Error(ErrorCode::kSchemaMismatch, fmt::format("row {}: bad level", f.id));
    }
    f.y = calibration_label(static_cast<Level>(static_cast<int>(*level)));
    rows.push_back(std::move(f));
  }
  return rows;
}

int cmd_calibrate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto component = component_of(o);
  const auto rows = load_features(o);
  std::vector<std::pair<PdsVector, int>> samples;
  samples.reserve(rows.size());
  for (const auto& r : rows) samples.emplace_back(r.pds, r.y);
  const auto model = fit_weights(samples, component);
  if (!model.converged) {
    err << fmt::format("warning: {} after {} iterations; returning best iterate\n",
                       to_string(ErrorCode::kNonConvergence), model.iterations);
  }
  if (model.skipped) err << fmt::format("skipped {} row(s) with missing components\n", model.skipped);
  if (o.out.empty()) {
    out << weights_to_json(model) << "\n";
  } else {
    save_weights(model, o.out);
    out << fmt::format("alpha={:.6f} beta={:.6f} gamma={:.6f} component={} loss={:.6f} n={}\n",
                       model.alpha, model.beta, model.gamma, to_string(model.component),
                       model.loss, model.n_samples);
  }
  return kExitOk;
}

int cmd_ece(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = model_of(o, err);
  const auto rows = load_features(o);
  std::vector<ScoredLabel> scores;
  std::size_t skipped = 0;
  for (const auto& r : rows) {
    try {
      scores.push_back({scalar_collapse(r.pds, model), r.y});
    } catch (const Error&) {
      ++skipped;
    }
  }
  const auto result = compute_ece(scores, o.bins);
  ojson j;
  j["ece_prob"] = result.ece;
  j["n"] = scores.size();
  j["skipped"] = skipped;
  j["component"] = std::string(to_string(model.component));
  j["partition"] = o.partition;
  ojson bins = ojson::array();
  for (const auto& b : result.bins) {
    bins.push_back({{"count", b.count}, {"mean_s_prob", b.mean_s}, {"mean_y_prob", b.mean_y}});
  }
  j["bins"] = std::move(bins);
  emit(o.out, j.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto records = load_records(single_input(o), err);
  emit(o.out, cohort_table(cohort_reports(records, thresholds_of(o), err)), out);
  return kExitOk;
}

int cmd_gate(const Options& o, std::ostream& out, std::ostream& err) {
  emit(o.out, run_gate(o, err), out);
  return kExitOk;
}

int cmd_stability(const Options& o, std::ostream& out, std::ostream& err) {
  const auto run = run_stability_core(o, err);
  emit(o.out, profile_table(run.profiles), out);
  if (!run.sweep.empty()) emit(o.secondary_out, sweep_table(run.sweep), out);
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.rules.empty()) throw UsageError("--rules is required");
  const auto rules = read_rule_sets(o.rules);
  const auto model = model_of(o, err);
  const auto records = load_records(single_input(o), err);
  std::map<std::string, AdversarialTag> tags;
  if (!o.truth.empty()) {
    for (const auto& t : load_truth(o.truth)) tags[t.case_id] = t.tag;
  }
  GroundingThresholds thresholds{o.s_min, o.overlap_min};

  std::vector<VerificationRow> rows;
  std::vector<double> clean_h;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    const auto a = audit_record(r, &model);
    const auto rs = rules.find(r.community_id);
    if (!a.valid || !a.s || rs == rules.end()) {
      ++skipped;
      continue;
    }
    VerificationRow row;
    row.record_id = r.id;
    if (auto it = tags.find(case_id_of(r.id)); it != tags.end()) {
      row.label = std::string(to_string(it->second));
    }
    row.s = *a.s;
    row.h_kappa = a.pds.h_kappa;
    try {
      row.overlap = overlap_score(a.located.trace.policy_citation->value, rs->second);
    } catch (const Error& e) {
      err << fmt::format("record {}: {}\n", r.id, e.what());
      ++skipped;
      continue;
    }
    row.verdict = two_layer_verdict(row.s, row.overlap.score, thresholds);
    if (row.label == "clean" && row.h_kappa) clean_h.push_back(*row.h_kappa);
    rows.push_back(std::move(row));
  }
  const HKappaBand band = clean_h.empty() ? kDefaultHKappaBand : clean_baseline_band(clean_h);
  std::string s = csv_line({"id", "label", "s_prob", "h_kappa_bits", "overlap_prob",
                            "best_block", "verdict", "archetype"});
  for (auto& row : rows) {
    row.archetype = row.h_kappa
                        ? classify_archetype(*row.h_kappa, row.s, row.overlap.score, thresholds, band)
                        : Archetype::kUnclassified;
    s += csv_line({row.record_id, row.label.value_or(""), fixed(row.s, 6), fixed(row.h_kappa, 6),
                   fixed(row.overlap.score, 6), row.overlap.best_block_id,
                   std::string(to_string(row.verdict)), std::string(to_string(row.archetype))});
  }
  emit(o.out, s, out);
  std::string summary = csv_line({"label", "cases", "flagged", "flag_rate_pct"});
  for (const auto& [label, rate] : detection_summary(rows)) {
    summary += csv_line({label, std::to_string(rate.cases), std::to_string(rate.flagged),
                         pct(rate.rate())});
  }
  emit(o.secondary_out, summary, out);
  if (skipped) err << fmt::format("skipped {} record(s)\n", skipped);
  err << fmt::format("h_kappa band [{:.4f}, {:.4f}] bits\n", band.lo, band.hi);
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& /*err*/) {
  if (o.out.empty()) throw UsageError("--out <directory> is required");
  SimConfig cfg;
  cfg.seed = o.seed;
  cfg.temperature = o.temperature;
  cfg.replicates = o.replicates;
  cfg.cohorts = o.cohorts;
  cfg.adversarial_fraction = o.adversarial_fraction;
  const auto h = parse_hypothesis(o.hypothesis);
  if (!h) throw UsageError("--hypothesis must be H_G or H_N");
  cfg.hypothesis = *h;
  if (o.labels == "sampled") {
    cfg.label_model = LabelModel::kSampled;
  } else if (o.labels == "calibrated") {
    cfg.label_model = LabelModel::kCalibrated;
  } else {
    throw UsageError("--labels must be sampled or calibrated");
  }
  try {
    validate_sim_config(cfg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  std::size_t written = 0;
  if (o.mode == "fleet") {
    const auto fleet = generate_fleet(cfg);
    write_fleet(fleet, o.out);
    written = fleet.records.size();
  } else if (o.mode == "calibration") {
    const auto fleet = generate_calibration_set(cfg, o.n.value_or(20000));
    write_fleet(fleet, o.out);
    written = fleet.records.size();
  } else if (o.mode == "adversarial") {
    const auto fleet = generate_adversarial_batch(cfg, o.n.value_or(50));
    write_fleet(fleet, o.out);
    written = fleet.records.size();
  } else if (o.mode == "sweep") {
    for (double t : o.temperatures) {
      if (!(t > 0.0 && t <= 2.0)) throw UsageError("temperatures must be in (0, 2]");
    }
    const std::size_t cases = o.n.value_or(100);
    const auto fleets = simulate_sweep(cfg, o.temperatures, cases / 2, cases - cases / 2);
    for (std::size_t i = 0; i < fleets.size(); ++i) {
      const auto dir = std::filesystem::path(o.out) / fmt::format("T{:g}", o.temperatures[i]);
      write_fleet(fleets[i], dir.string());
      written += fleets[i].records.size();
    }
  } else {
    throw UsageError("--mode must be fleet, sweep, calibration or adversarial");
  }
  out << fmt::format("wrote {} record(s) to {}\n", written, o.out);
  return kExitOk;
}

std::string inverse_table(const std::vector<AuditRecord>& records, std::ostream& err) {
  std::array<std::vector<double>, 3> sigma;
  std::array<std::vector<double>, 3> yes;
  std::vector<double> all_sigma, all_yes;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    const auto a = audit_record(r);
    if (!a.valid || !a.pds.sigma_rho) {
      ++skipped;
      continue;
    }
    const auto li = static_cast<std::size_t>(level_index(a.located.trace.defensibility_level->value));
    const double y = a.located.trace.inverse_check->value == InverseCheck::kYes ? 1.0 : 0.0;
    sigma[li].push_back(*a.pds.sigma_rho);
    yes[li].push_back(y);
    all_sigma.push_back(*a.pds.sigma_rho);
    all_yes.push_back(y);
  }
  if (skipped) err << fmt::format("skipped {} record(s)\n", skipped);
  auto row = [](std::string label, const std::vector<double>& s, const std::vector<double>& y) {
    std::optional<double> mean_s, ai, rho;
    if (!s.empty()) {
      double ss = 0, sy = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        ss += s[i];
        sy += y[i];
      }
      mean_s = ss / static_cast<double>(s.size());
      ai = sy / static_cast<double>(s.size());
      try {
        rho = spearman(s, y);
      } catch (const Error&) {
      }
    }
    return csv_line({std::move(label), std::to_string(s.size()), fixed(mean_s), pct(ai),
                     fixed(rho, 3)});
  };
  std::string s = csv_line({"level", "n", "mean_sigma_rho_prob", "ai_pct", "spearman_sigma_rho_vs_yes"});
  for (std::size_t l = 0; l < 3; ++l) s += row(fmt::format("L{}", l + 1), sigma[l], yes[l]);
  s += row("all", all_sigma, all_yes);
  return s;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  std::string content;
  if (o.layout == "cohorts") {
    content = cohort_table(cohort_reports(load_records(single_input(o), err), thresholds_of(o), err));
  } else if (o.layout == "states") {
    content = state_table(cohort_reports(load_records(single_input(o), err), thresholds_of(o), err));
  } else if (o.layout == "inverse") {
    content = inverse_table(load_records(single_input(o), err), err);
  } else if (o.layout == "sweep") {
    if (o.truth.empty()) throw UsageError("--truth is required for the sweep layout");
    const auto run = run_stability_core(o, err);
    if (run.sweep.empty()) throw Error(ErrorCode::kEmptyGroup, "no grouped replicate sets");
    content = sweep_table(run.sweep);
  } else if (o.layout == "gate") {
    content = run_gate(o, err);
  } else {
    throw UsageError("--layout must be cohorts, states, inverse, sweep or gate");
  }
  emit(o.out, content, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Defensibility audit pipeline"};
  app.name("defensibility");
  app.require_subcommand(1);
  Options o;

  auto add_input = [&](CLI::App* c, bool multiple = false) {
    auto* opt = c->add_option("--input,-i", o.inputs, multiple ? "Input file(s)" : "Input file")
                    ->required();
    if (!multiple) opt->expected(1);
  };
  auto add_out = [&](CLI::App* c, const std::string& what) {
    c->add_option("--out,-o", o.out, what);
  };
  auto add_weights = [&](CLI::App* c) {
    c->add_option("--weights", o.weights, "Weights JSON (equal weights when absent)");
    c->add_option("--component", o.component, "Entropy component: h_w or h_kappa");
  };
  auto add_gate_flags = [&](CLI::App* c) {
    c->add_option("--di-min", o.di_min, "Minimum DI (probability)");
    c->add_option("--ai-max", o.ai_max, "Maximum AI (probability)");
    c->add_option("--min-decisions", o.min_decisions, "Minimum cohort size");
  };
  auto add_partition = [&](CLI::App* c) {
    c->add_option("--partition", o.partition, "all, train or test (split by id hash)");
    c->add_option("--test-fraction", o.test_fraction, "Held-out share for the id-hash split");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and count valid audits");
  add_input(ingest);
  add_out(ingest, "Summary JSON path");

  auto* extract = app.add_subcommand("extract", "PDS components per record as CSV");
  add_input(extract);
  add_out(extract, "CSV path");
  add_weights(extract);

  auto* calibrate = app.add_subcommand("calibrate", "Fit collapse weights from an extract CSV");
  add_input(calibrate);
  add_out(calibrate, "Weights JSON path");
  calibrate->add_option("--component", o.component, "Entropy component: h_w or h_kappa");
  add_partition(calibrate);

  auto* ece = app.add_subcommand("ece", "Equal-frequency ECE of an extract CSV");
  add_input(ece);
  add_out(ece, "Result JSON path");
  add_weights(ece);
  ece->add_option("--bins", o.bins, "Number of bins");
  add_partition(ece);

  auto* evaluate = app.add_subcommand("evaluate", "Per-community DI/AI/F1 report");
  add_input(evaluate);
  add_out(evaluate, "CSV path");
  add_gate_flags(evaluate);

  auto* gate = app.add_subcommand("gate", "Governance gate scenario sweep");
  add_input(gate);
  add_out(gate, "CSV path");
  add_gate_flags(gate);
  gate->add_option("--scenarios", o.scenarios, "Scenario JSON array");

  auto* stability = app.add_subcommand("stability", "Replicate stability profiles and sweep");
  add_input(stability, true);
  add_out(stability, "Profile CSV path");
  add_weights(stability);
  stability->add_option("--truth", o.truth, "Ground-truth sidecar (enables the sweep table)");
  stability->add_option("--sweep-out", o.secondary_out, "Sweep table CSV path");

  auto* verify = app.add_subcommand("verify", "Two-layer grounding verdicts");
  add_input(verify);
  add_out(verify, "Verdict CSV path");
  add_weights(verify);
  verify->add_option("--rules", o.rules, "Rule-set JSON");
  verify->add_option("--truth", o.truth, "Ground-truth sidecar (attack labels)");
  verify->add_option("--summary-out", o.secondary_out, "Detection summary CSV path");
  verify->add_option("--s-min", o.s_min, "PDS flag threshold");
  verify->add_option("--overlap-min", o.overlap_min, "Grounding flag threshold");

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  add_out(simulate, "Output directory");
  simulate->add_option("--mode", o.mode, "fleet, sweep, calibration or adversarial");
  simulate->add_option("--seed", o.seed, "Master seed");
  simulate->add_option("--temperature", o.temperature, "Sampling temperature");
  simulate->add_option("--temperatures", o.temperatures, "Sweep temperatures")->delimiter(',');
  simulate->add_option("--replicates", o.replicates, "Replicates per case (K)");
  simulate->add_option("--hypothesis", o.hypothesis, "H_G or H_N");
  simulate->add_option("--labels", o.labels, "sampled or calibrated");
  simulate->add_option("--n", o.n, "Cases (calibration, sweep) or cases per tag (adversarial)");
  simulate->add_option("--cohorts", o.cohorts, "Fleet cohorts");
  simulate->add_option("--adversarial-fraction", o.adversarial_fraction, "Fleet attack share");

  auto* report = app.add_subcommand("report", "Tabular reports");
  report->add_option("--layout", o.layout, "cohorts, states, inverse, sweep or gate")->required();
  add_input(report, true);
  add_out(report, "CSV path");
  add_weights(report);
  add_gate_flags(report);
  report->add_option("--scenarios", o.scenarios, "Scenario JSON array (gate layout)");
  report->add_option("--truth", o.truth, "Ground-truth sidecar (sweep layout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out, err);
    if (extract->parsed()) return cmd_extract(o, out, err);
    if (calibrate->parsed()) return cmd_calibrate(o, out, err);
    if (ece->parsed()) return cmd_ece(o, out, err);
    if (evaluate->parsed()) return cmd_evaluate(o, out, err);
    if (gate->parsed()) return cmd_gate(o, out, err);
    if (stability->parsed()) return cmd_stability(o, out, err);
    if (verify->parsed()) return cmd_verify(o, out, err);
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (report->parsed()) {
      if (o.layout != "sweep" && o.inputs.size() != 1) {
        throw UsageError("exactly one --input is required for this layout");
      }
      return cmd_report(o, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace defensibility::cli
