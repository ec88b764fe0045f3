#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "defensibility/types.hpp"

namespace defensibility {

/// Parses one dataset line (a JSON object). Unknown keys are ignored.
/// Throws Error(kSchemaMismatch) on missing/mistyped fields.
AuditRecord parse_record_line(std::string_view line);

/// Serializes a record as a single JSON line without trailing newline.
std::string to_json_line(const AuditRecord& record);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct DatasetReadResult {
  std::vector<AuditRecord> records;
  std::vector<LineError> errors;
  std::size_t lines = 0;  // non-blank lines seen
};

/// Reads newline-delimited records, skipping and counting bad lines.
/// Throws Error(kIoFailure) when the file cannot be opened.
DatasetReadResult read_dataset(const std::string& path);
DatasetReadResult parse_dataset(std::string_view text);

void write_dataset(const std::string& path, const std::vector<AuditRecord>& records);

/// Rule-set file: a JSON array of objects with `community_id`,
/// `platform_rules`, `community_rules`, `precedents` (arrays of {id, body}).
std::map<std::string, RuleSet> read_rule_sets(const std::string& path);
std::map<std::string, RuleSet> parse_rule_sets(std::string_view text);
std::string rule_sets_to_json(const std::map<std::string, RuleSet>& rules);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

}  // namespace defensibility
