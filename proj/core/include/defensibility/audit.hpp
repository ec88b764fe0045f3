#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "defensibility/calibration.hpp"
#include "defensibility/metrics.hpp"
#include "defensibility/pds.hpp"
#include "defensibility/stability.hpp"
#include "defensibility/trace_parser.hpp"
#include "defensibility/types.hpp"

namespace defensibility {

/// Everything the pipeline derives from one record.
struct AuditResult {
  LocatedTrace located;
  std::vector<Violation> violations;  // record + ordering invariants
  bool valid = false;                 // counts toward N
  PdsVector pds;
  std::optional<double> s;  // present when a model is given and components exist
};

AuditResult audit_record(const AuditRecord& record, const CalibrationModel* model = nullptr);

/// Cohort outcome of a valid audit; nullopt otherwise.
std::optional<CaseOutcome> case_outcome(const AuditRecord& record, const AuditResult& result);

struct ReplicateGrouping {
  std::vector<ReplicateSet> sets;  // ordered by (case id, temperature)
  std::size_t skipped = 0;         // invalid audits or missing components
};

/// Groups records `<case>#<k>` by case id and temperature.
ReplicateGrouping group_replicates(const std::vector<AuditRecord>& records,
                                   const CalibrationModel& model);

struct CaseTruth;

/// Attaches truth groups to replicate sets; sets whose case has no group
/// are dropped.
std::vector<SweepCase> sweep_input(const ReplicateGrouping& grouping,
                                   const std::vector<CaseTruth>& truth);

}  // namespace defensibility
