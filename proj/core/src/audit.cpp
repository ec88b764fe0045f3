#include "defensibility/audit.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "defensibility/error.hpp"
#include "defensibility/simulator.hpp"

namespace defensibility {

AuditResult audit_record(const AuditRecord& record, const CalibrationModel* model) {
  AuditResult out;
  out.located = locate_trace(record);
  const auto& trace = out.located.trace;
  out.violations = validate_record(record, trace);
  out.valid = trace.complete() && out.violations.empty() &&
              !std::any_of(out.located.issues.begin(), out.located.issues.end(),
                           [](const TraceIssue& i) { return i.kind == TraceIssueKind::kMalformed; });
  if (!out.valid) return out;
  out.pds = assemble_pds(record, trace);
  if (model) {
    try {
      out.s = scalar_collapse(out.pds, *model);
    } catch (const Error&) {
    }
  }
  return out;
}

std::optional<CaseOutcome> case_outcome(const AuditRecord& record, const AuditResult& result) {
  if (!result.valid) return std::nullopt;
  const auto& trace = result.located.trace;
  return CaseOutcome{trace.defensibility_level->value, trace.inverse_check->value,
                     record.proposed_action, record.human_action};
}

ReplicateGrouping group_replicates(const std::vector<AuditRecord>& records,
                                   const CalibrationModel& model) {
  ReplicateGrouping out;
  std::map<std::pair<std::string, double>, ReplicateSet> sets;
  for (const auto& record : records) {
    const auto result = audit_record(record, &model);
    if (!result.valid || !result.s) {
      ++out.skipped;
      continue;
    }
    const std::string case_id = case_id_of(record.id);
    auto& set = sets[{case_id, record.temperature}];
    set.case_id = case_id;
    set.temperature = record.temperature;
    const auto& trace = result.located.trace;
    set.replicates.push_back(
        {result.pds, *result.s, trace.defensibility_level->value, trace.inverse_check->value});
  }
  for (auto& [key, set] : sets) out.sets.push_back(std::move(set));
  return out;
}

std::vector<SweepCase> sweep_input(const ReplicateGrouping& grouping,
                                   const std::vector<CaseTruth>& truth) {
  std::map<std::string, CaseGroup> groups;
  for (const auto& t : truth) {
    if (t.group) groups[t.case_id] = *t.group;
  }
  std::vector<SweepCase> out;
  for (const auto& set : grouping.sets) {
    auto it = groups.find(set.case_id);
    if (it != groups.end()) out.push_back({it->second, set});
  }
  return out;
}

}  // namespace defensibility
