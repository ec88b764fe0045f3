#include "defensibility/record_io.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "defensibility/error.hpp"

namespace defensibility {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kSchemaMismatch, fmt::format("missing field '{}'", key));
  }
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) {
    throw Error(ErrorCode::kSchemaMismatch, fmt::format("field '{}' must be a string", key));
  }
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_number()) {
    throw Error(ErrorCode::kSchemaMismatch, fmt::format("field '{}' must be a number", key));
  }
  return v.get<double>();
}

std::size_t require_offset(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw Error(ErrorCode::kSchemaMismatch,
                fmt::format("field '{}' must be a non-negative integer", key));
  }
  return v.get<std::size_t>();
}

Action require_action(const json& v, const char* key) {
  if (!v.is_string()) {
    throw Error(ErrorCode::kSchemaMismatch, fmt::format("field '{}' must be a string", key));
  }
  auto action = parse_action(v.get<std::string>());
  if (!action) {
    throw Error(ErrorCode::kSchemaMismatch,
                fmt::format("field '{}' must be REMOVE or APPROVE", key));
  }
  return *action;
}

TokenEvent token_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaMismatch, "token must be an object");
  TokenEvent token;
  token.text = require_string(j, "text");
  token.logprob = require_number(j, "logprob");
  token.char_start = require_offset(j, "char_start");
  token.char_end = require_offset(j, "char_end");
  if (auto it = j.find("top_candidates"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw Error(ErrorCode::kSchemaMismatch, "top_candidates must be an array");
    }
    token.top_candidates.reserve(it->size());
    for (const auto& c : *it) {
      if (!c.is_object()) throw Error(ErrorCode::kSchemaMismatch, "candidate must be an object");
      token.top_candidates.push_back({require_string(c, "token"), require_number(c, "logprob")});
    }
  }
  return token;
}

nlohmann::ordered_json token_to_json(const TokenEvent& token) {
  nlohmann::ordered_json candidates = nlohmann::ordered_json::array();
  for (const auto& c : token.top_candidates) {
    nlohmann::ordered_json cand;
    cand["token"] = c.token;
    cand["logprob"] = c.logprob;
    candidates.push_back(std::move(cand));
  }
  nlohmann::ordered_json j;
  j["text"] = token.text;
  j["logprob"] = token.logprob;
  j["top_candidates"] = std::move(candidates);
  j["char_start"] = token.char_start;
  j["char_end"] = token.char_end;
  return j;
}

std::vector<RuleBlock> blocks_from_json(const json& obj, const char* key) {
  std::vector<RuleBlock> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) {
    throw Error(ErrorCode::kSchemaMismatch, fmt::format("'{}' must be an array", key));
  }
  for (const auto& b : *it) {
    if (!b.is_object()) throw Error(ErrorCode::kSchemaMismatch, "rule block must be an object");
    out.push_back({require_string(b, "id"), require_string(b, "body")});
  }
  return out;
}

}  // namespace

AuditRecord parse_record_line(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kSchemaMismatch, "line is not a JSON object");
  }
  AuditRecord record;
  record.id = require_string(j, "id");
  record.community_id = require_string(j, "community_id");
  record.content = require_string(j, "content");
  record.proposed_action = require_action(require(j, "proposed_action"), "proposed_action");
  if (auto it = j.find("human_action"); it != j.end() && !it->is_null()) {
    record.human_action = require_action(*it, "human_action");
  }
  record.trace_text = require_string(j, "trace_text");
  const auto& tokens = require(j, "tokens");
  if (!tokens.is_array()) throw Error(ErrorCode::kSchemaMismatch, "tokens must be an array");
  record.tokens.reserve(tokens.size());
  for (const auto& t : tokens) record.tokens.push_back(token_from_json(t));
  record.temperature = require_number(j, "temperature");
  return record;
}

std::string to_json_line(const AuditRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["community_id"] = record.community_id;
  j["content"] = record.content;
  j["proposed_action"] = std::string(to_string(record.proposed_action));
  if (record.human_action) {
    j["human_action"] = std::string(to_string(*record.human_action));
  } else {
    j["human_action"] = nullptr;
  }
  j["trace_text"] = record.trace_text;
  nlohmann::ordered_json tokens = nlohmann::ordered_json::array();
  for (const auto& t : record.tokens) tokens.push_back(token_to_json(t));
  j["tokens"] = std::move(tokens);
  j["temperature"] = record.temperature;
  return j.dump();
}

DatasetReadResult parse_dataset(std::string_view text) {
  DatasetReadResult result;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (nl == text.size()) break;
      continue;
    }
    ++result.lines;
    try {
      result.records.push_back(parse_record_line(line));
    } catch (const Error& e) {
      result.errors.push_back({line_no, e.what()});
    } catch (const json::exception& e) {
      result.errors.push_back({line_no, e.what()});
    }
    if (nl == text.size()) break;
  }
  return result;
}

DatasetReadResult read_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

void write_dataset(const std::string& path, const std::vector<AuditRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json_line(r);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::map<std::string, RuleSet> parse_rule_sets(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw Error(ErrorCode::kSchemaMismatch, "rule-set file must be a JSON array");
  }
  std::map<std::string, RuleSet> out;
  for (const auto& item : j) {
    if (!item.is_object()) throw Error(ErrorCode::kSchemaMismatch, "rule set must be an object");
    RuleSet rules;
    rules.community_id = require_string(item, "community_id");
    rules.platform_rules = blocks_from_json(item, "platform_rules");
    rules.community_rules = blocks_from_json(item, "community_rules");
    rules.precedents = blocks_from_json(item, "precedents");
    if (auto v = validate_rule_set(rules); !v.empty()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  fmt::format("rule set '{}': {} {}", rules.community_id, v[0].field, v[0].message));
    }
    out[rules.community_id] = std::move(rules);
  }
  return out;
}

std::map<std::string, RuleSet> read_rule_sets(const std::string& path) {
  return parse_rule_sets(read_file(path));
}

std::string rule_sets_to_json(const std::map<std::string, RuleSet>& rules) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  auto blocks = [](const std::vector<RuleBlock>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& b : v) {
      nlohmann::ordered_json o;
      o["id"] = b.id;
      o["body"] = b.body;
      a.push_back(std::move(o));
    }
    return a;
  };
  for (const auto& [id, r] : rules) {
    nlohmann::ordered_json o;
    o["community_id"] = r.community_id;
    o["platform_rules"] = blocks(r.platform_rules);
    o["community_rules"] = blocks(r.community_rules);
    o["precedents"] = blocks(r.precedents);
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = fs::path(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoFailure, fmt::format("cannot write '{}'", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIoFailure, fmt::format("write failed '{}'", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailure, fmt::format("rename to '{}' failed: {}", path, ec.message()));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace defensibility
