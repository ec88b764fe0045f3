#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "defensibility/audit.hpp"
#include "defensibility/calibration.hpp"
#include "defensibility/simulator.hpp"
#include "defensibility/trace_parser.hpp"

namespace {

using namespace defensibility;

const SimulatedFleet& calibration_fleet() {
  static const SimulatedFleet fleet = [] {
    SimConfig cfg;
    cfg.seed = 11;
    cfg.label_model = LabelModel::kCalibrated;
    return generate_calibration_set(cfg, 4000);
  }();
  return fleet;
}

void BM_SpanDetection(benchmark::State& state) {
  const auto& records = calibration_fleet().records;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& r = records[i++ % records.size()];
    const auto span = find_citation_span(r.trace_text);
    benchmark::DoNotOptimize(map_span_to_tokens(r, span));
  }
}
BENCHMARK(BM_SpanDetection);

void BM_LocateTrace(benchmark::State& state) {
  const auto& records = calibration_fleet().records;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(locate_trace(records[i++ % records.size()]));
  }
}
BENCHMARK(BM_LocateTrace);

void BM_AuditRecord(benchmark::State& state) {
  const auto& records = calibration_fleet().records;
  const auto model = CalibrationModel::equal_weights();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(audit_record(records[i++ % records.size()], &model));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AuditRecord);

std::vector<std::pair<PdsVector, int>> labeled_pds(std::size_t n) {
  std::vector<std::pair<PdsVector, int>> out;
  for (const auto& r : calibration_fleet().records) {
    if (out.size() == n) break;
    const auto a = audit_record(r);
    if (!a.valid) continue;
    out.emplace_back(a.pds, calibration_label(a.located.trace.defensibility_level->value));
  }
  return out;
}

void BM_FitWeights(benchmark::State& state) {
  const auto samples = labeled_pds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_weights(samples, EntropyComponent::kHw));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(samples.size()));
}
BENCHMARK(BM_FitWeights)->Arg(500)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_Ece(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredLabel> scores(static_cast<std::size_t>(state.range(0)));
  for (auto& s : scores) {
    s.s = u(rng);
    s.y = u(rng) < s.s ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_ece(scores, 10));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ece)->Arg(1000)->Arg(100000);

void BM_GenerateReplicate(benchmark::State& state) {
  const RuleSet rules = synthetic_rule_set("bench");
  CaseSpec spec;
  spec.case_id = "bench-000";
  spec.community_id = "bench";
  spec.ambiguity = 0.5;
  spec.true_level = Level::kL2;
  spec.citation_source = rules.community_rules.front().id;
  SimConfig cfg;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_replicate(spec, rules, cfg, substream_seed(1, k), k));
    ++k;
  }
}
BENCHMARK(BM_GenerateReplicate);

}  // namespace

BENCHMARK_MAIN();
