#include <gtest/gtest.h>

#include <algorithm>

#include "defensibility/error.hpp"
#include "defensibility/record_io.hpp"
#include "defensibility/trace_parser.hpp"
#include "defensibility/types.hpp"
#include "fixtures.hpp"
#include "gen.hpp"

using namespace defensibility;

namespace {

bool names_field(const std::vector<Violation>& v, std::string_view field) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) {
    return x.field.find(field) != std::string::npos;
  });
}

}  // namespace

TEST(ValidateRecord, ContiguousTokensAreClean) {
  const auto r = fixtures::make_audit({});
  EXPECT_TRUE(validate_record(r).empty());
  const auto located = locate_trace(r);
  EXPECT_TRUE(validate_record(r, located.trace).empty());
}

TEST(ValidateRecord, PositiveLogprobIsOneViolation) {
  auto r = fixtures::make_audit({});
  r.tokens[3].logprob = 0.5;
  const auto v = validate_record(r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "tokens[3].logprob");
  EXPECT_NE(v[0].message.find("<= 0"), std::string::npos);
}

TEST(ValidateRecord, SwappedWeightAndCheckPositionsFlagOrdering) {
  const auto r = fixtures::make_audit({});
  auto trace = locate_trace(r).trace;
  ASSERT_TRUE(trace.precedent_weight->token && trace.inverse_check->token);
  std::swap(trace.precedent_weight->token, trace.inverse_check->token);
  const auto v = validate_record(r, trace);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "precedent_weight");
}

TEST(ValidateRecord, StructuralBreaches) {
  auto r = fixtures::make_audit({});
  r.id.clear();
  r.temperature = 2.5;
  r.tokens[1].char_start += 1;
  const auto v = validate_record(r);
  EXPECT_TRUE(names_field(v, "id"));
  EXPECT_TRUE(names_field(v, "temperature"));
  EXPECT_TRUE(names_field(v, "tokens[1]"));

  auto unsorted = fixtures::make_audit({});
  auto& c = unsorted.tokens[0].top_candidates;
  c = {{"a", -2.0}, {"b", -1.0}};
  EXPECT_TRUE(names_field(validate_record(unsorted), "tokens[0].top_candidates"));

  auto many = fixtures::make_audit({});
  many.tokens[0].top_candidates.assign(kMaxCandidates + 1, Candidate{"x", -3.0});
  EXPECT_TRUE(names_field(validate_record(many), "top_candidates"));
}

TEST(ValidateRecord, IsPure) {
  auto r = fixtures::make_audit({});
  r.tokens[2].logprob = 1.0;
  r.temperature = -1.0;
  EXPECT_EQ(validate_record(r), validate_record(r));
}

TEST(ValidateDataset, DuplicateIds) {
  const auto a = fixtures::make_audit({}, "same");
  const auto v = validate_dataset({a, a});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "same:id");
}

TEST(ValidateRuleSet, EmptyBlocks) {
  RuleSet rs{"", {{"", "body"}}, {{"c1", ""}}, {}};
  const auto v = validate_rule_set(rs);
  EXPECT_EQ(v.size(), 3u);
}

TEST(IsValidAudit, CompleteTrace) {
  const auto r = fixtures::make_audit({});
  EXPECT_TRUE(is_valid_audit(r, locate_trace(r).trace));
  EXPECT_FALSE(is_valid_audit(r, std::nullopt));
}

TEST(IsValidAudit, MissingInverseCheck) {
  const auto r = fixtures::make_audit({});
  auto trace = locate_trace(r).trace;
  trace.inverse_check.reset();
  EXPECT_FALSE(is_valid_audit(r, trace));
}

TEST(IsValidAudit, LevelFourIsRejected) {
  auto r = fixtures::make_audit({});
  const auto pos = r.trace_text.find("\"defensibility_level\": \"1\"");
  ASSERT_NE(pos, std::string::npos);
  const std::string text = r.trace_text.substr(0, pos) + "\"defensibility_level\": \"4\"}";
  auto r4 = fixtures::from_pieces({{text, {{text, 0.0}}}});
  const auto located = locate_trace(r4);
  EXPECT_FALSE(located.trace.defensibility_level.has_value());
  EXPECT_FALSE(is_valid_audit(r4, located.trace));
}

TEST(Enums, CanonicalSpellings) {
  EXPECT_EQ(parse_action("REMOVE"), Action::kRemove);
  EXPECT_EQ(parse_action("APPROVE"), Action::kApprove);
  EXPECT_FALSE(parse_action("remove"));
  EXPECT_EQ(parse_level_name("L2"), Level::kL2);
  EXPECT_FALSE(parse_level_name("L4"));
  EXPECT_TRUE(is_defensible(Level::kL2));
  EXPECT_FALSE(is_defensible(Level::kL3));
}

TEST(RecordIo, RoundTripProperty) {
  gen::Gen g(42);
  for (int trial = 0; trial < 300; ++trial) {
    AuditRecord r;
    r.id = "id-" + g.word() + g.text(6);
    r.community_id = g.word();
    r.content = g.text(40);
    r.proposed_action = g.coin() ? Action::kRemove : Action::kApprove;
    if (g.coin()) r.human_action = g.coin() ? Action::kRemove : Action::kApprove;
    r.temperature = g.uniform(0.0, 2.0);
    const int n = g.integer(0, 12);
    for (int i = 0; i < n; ++i) {
      TokenEvent t;
      t.text = g.text(5);
      if (t.text.empty()) t.text = "x";
      t.char_start = r.trace_text.size();
      r.trace_text += t.text;
      t.char_end = r.trace_text.size();
      t.logprob = -g.uniform(0.0, 20.0);
      const int k = g.integer(0, 4);
      for (int j = 0; j < k; ++j) t.top_candidates.push_back({g.text(3), -g.uniform(0.0, 30.0)});
      r.tokens.push_back(std::move(t));
    }
    const auto line = to_json_line(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(parse_record_line(line), r) << line;
  }
}

TEST(RecordIo, UnknownKeysIgnoredAndNullHumanAction) {
  const std::string line =
      R"({"id":"a","community_id":"c","content":"x","proposed_action":"APPROVE",)"
      R"("human_action":null,"trace_text":"ab","tokens":[{"text":"ab","logprob":-0.1,)"
      R"("top_candidates":[{"token":"ab","logprob":-0.1}],"char_start":0,"char_end":2}],)"
      R"("temperature":0.7,"extra":{"nested":true}})";
  const auto r = parse_record_line(line);
  EXPECT_EQ(r.id, "a");
  EXPECT_FALSE(r.human_action);
  EXPECT_EQ(r.tokens.size(), 1u);
}

TEST(RecordIo, SchemaErrors) {
  EXPECT_THROW(parse_record_line("not json"), Error);
  try {
    parse_record_line(R"({"id":"a"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
  try {
    parse_record_line(
        R"({"id":"a","community_id":"c","content":"","proposed_action":"DELETE","trace_text":"",)"
        R"("tokens":[],"temperature":0})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(RecordIo, DatasetSkipsAndCountsBadLines) {
  const auto good = to_json_line(fixtures::make_audit({}));
  const auto result = parse_dataset(good + "\n\n{broken\n" + good + "\n");
  EXPECT_EQ(result.lines, 3u);
  EXPECT_EQ(result.records.size(), 2u);
  ASSERT_EQ(result.errors.size(), 1u);
  EXPECT_EQ(result.errors[0].line, 3u);
}

TEST(RecordIo, MissingFileIsIoFailure) {
  try {
    read_dataset("/nonexistent/records.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoFailure);
  }
}

TEST(RecordIo, RuleSetsRoundTrip) {
  std::map<std::string, RuleSet> rules;
  rules["c1"] = RuleSet{"c1", {{"p1", "Be civil"}}, {{"c1/r1", "No spam"}}, {{"pr1", "Prior"}}};
  rules["c2"] = RuleSet{"c2", {}, {{"c2/r1", "No ads"}}, {}};
  EXPECT_EQ(parse_rule_sets(rule_sets_to_json(rules)), rules);
  EXPECT_THROW(parse_rule_sets(R"([{"platform_rules":[]}])"), Error);
  EXPECT_THROW(parse_rule_sets(R"({"community_id":"x"})"), Error);
}
