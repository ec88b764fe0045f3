// Acceptance suite: one PASS/FAIL line per criterion.

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "defensibility/audit.hpp"
#include "defensibility/calibration.hpp"
#include "defensibility/error.hpp"
#include "defensibility/gate.hpp"
#include "defensibility/grounding.hpp"
#include "defensibility/metrics.hpp"
#include "defensibility/pds.hpp"
#include "defensibility/record_io.hpp"
#include "defensibility/simulator.hpp"
#include "defensibility/stability.hpp"
#include "defensibility/trace_parser.hpp"
#include "gen.hpp"

using namespace defensibility;

namespace {

struct Check {
  bool pass = true;
  std::string detail;
};

// Exact rational for the metric oracles.
struct Frac {
  std::int64_t num = 0;
  std::int64_t den = 1;
  Frac(std::int64_t n, std::int64_t d) : num(n), den(d) {
    const auto g = std::gcd(num, den);
    if (g) {
      num /= g;
      den /= g;
    }
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};
Frac operator*(Frac a, Frac b) { return {a.num * b.num, a.den * b.den}; }
Frac operator+(Frac a, Frac b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
Frac operator/(Frac a, Frac b) { return {a.num * b.den, a.den * b.num}; }

template <typename Fn>
bool throws_code(Fn&& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

// Calls visit(digits) for every base^n digit vector.
template <typename Fn>
void odometer(std::size_t n, std::size_t base, Fn&& visit) {
  std::vector<std::size_t> d(n, 0);
  while (true) {
    visit(d);
    std::size_t i = 0;
    while (i < n && ++d[i] == base) d[i++] = 0;
    if (i == n) return;
  }
}

// ---------------------------------------------------------------- 1

Check metric_exactness() {
  constexpr Level kLevels[] = {Level::kL1, Level::kL2, Level::kL3};
  constexpr Action kActions[] = {Action::kRemove, Action::kApprove};
  std::size_t cases = 0, bad = 0;

  for (std::size_t n = 1; n <= 8; ++n) {
    std::vector<Level> levels(n);
    odometer(n, 3, [&](const auto& d) {
      std::int64_t ok = 0;
      for (std::size_t i = 0; i < n; ++i) {
        levels[i] = kLevels[d[i]];
        ok += levels[i] != Level::kL3;
      }
      ++cases;
      bad += compute_di(levels) != Frac(ok, static_cast<std::int64_t>(n)).value();
    });

    std::vector<InverseCheck> checks(n);
    odometer(n, 2, [&](const auto& d) {
      std::int64_t yes = 0;
      for (std::size_t i = 0; i < n; ++i) {
        checks[i] = d[i] ? InverseCheck::kYes : InverseCheck::kNo;
        yes += d[i];
      }
      ++cases;
      bad += compute_ai(checks) != Frac(yes, static_cast<std::int64_t>(n)).value();
    });

    std::vector<ActionPair> pairs(n);
    odometer(n, 4, [&](const auto& d) {
      std::int64_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        pairs[i] = {kActions[d[i] & 1], kActions[d[i] >> 1]};
        const bool m = pairs[i].model == Action::kRemove, h = pairs[i].human == Action::kRemove;
        tp += m && h;
        fp += m && !h;
        fn += !m && h;
      }
      double want = 0.0;
      if (tp > 0) {
        const Frac p(tp, tp + fp), r(tp, tp + fn);
        want = (Frac(2, 1) * p * r / (p + r)).value();
      }
      ++cases;
      bad += compute_f1(pairs) != want;
    });

    // Full (model, human, level) space up to n = 6; levels {L2, L3} beyond.
    const std::size_t nlev = n <= 6 ? 3 : 2;
    const std::size_t lev0 = n <= 6 ? 0 : 1;
    std::vector<LabeledOutcome> out(n);
    odometer(n, 4 * nlev, [&](const auto& d) {
      std::int64_t fn = 0, fn_def = 0, agree = 0, agree_l3 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = {kActions[d[i] & 1], kActions[(d[i] >> 1) & 1], kLevels[lev0 + d[i] / 4]};
        if (out[i].model == Action::kApprove && out[i].human == Action::kRemove) {
          ++fn;
          fn_def += out[i].level != Level::kL3;
        }
        if (out[i].model == out[i].human) {
          ++agree;
          agree_l3 += out[i].level == Level::kL3;
        }
      }
      cases += 2;
      if (fn == 0) {
        bad += !throws_code([&] { defensible_fn_rate(out); }, ErrorCode::kNoFalseNegatives);
      } else {
        bad += defensible_fn_rate(out) != Frac(fn_def, fn).value();
      }
      if (agree == 0) {
        bad += !throws_code([&] { accurate_but_indefensible_rate(out); }, ErrorCode::kNoAgreements);
      } else {
        bad += accurate_but_indefensible_rate(out) != Frac(agree_l3, agree).value();
      }
    });
  }
  return {bad == 0, fmt::format("{} instances, {} mismatches", cases, bad)};
}

// ---------------------------------------------------------------- 2

TokenEvent token(std::vector<Candidate> cands) {
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return a.logprob > b.logprob; });
  TokenEvent t;
  t.text = cands.front().token;
  t.logprob = cands.front().logprob;
  t.top_candidates = std::move(cands);
  return t;
}

Check entropy_and_log_odds() {
  gen::Gen g(2);
  double worst_hw = 0, worst_p = 0, worst_shift = 0;
  for (int i = 0; i < 100; ++i) {
    const double c = g.uniform(-40, 5);
    const double lp = std::log(1.0 / 3.0) + c;
    const double h = compute_h_w(token({{"High", lp}, {"Medium", lp}, {"Low", lp}}));
    worst_hw = std::max(worst_hw, std::abs(h - std::log2(3.0)));
  }
  for (int i = 0; i < 1000; ++i) {
    const double p = g.uniform(1e-6, 1 - 1e-6);
    const double s = compute_sigma_rho(token({{"Yes", std::log(p)}, {"No", std::log1p(-p)}}));
    worst_p = std::max(worst_p, std::abs(s - p));
  }
  for (int i = 0; i < 1000; ++i) {
    std::vector<Candidate> cands{{"Yes", g.uniform(-8, 0)}, {"No", g.uniform(-8, 0)},
                                 {" yes", g.uniform(-12, -2)}, {"Maybe", g.uniform(-6, 0)}};
    const double base = compute_sigma_rho(token(cands));
    const double shift = g.uniform(-50, 50);
    for (auto& c : cands) c.logprob += shift;
    worst_shift = std::max(worst_shift, std::abs(compute_sigma_rho(token(cands)) - base));
  }
  const bool ok = worst_hw <= 1e-12 && worst_p <= 1e-12 && worst_shift <= 1e-12;
  return {ok, fmt::format("max |H[w]-log2 3| {:.2e}, max |sigma-p| {:.2e}, max shift drift {:.2e}",
                          worst_hw, worst_p, worst_shift)};
}

// ---------------------------------------------------------------- 3, 4

struct CalibrationRun {
  std::vector<LabeledFeatures> train;
  std::vector<LabeledFeatures> held_out;
};

CalibrationRun calibration_data(std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.label_model = LabelModel::kCalibrated;
  const auto fleet = generate_calibration_set(cfg, 25000);
  CalibrationRun run;
  for (const auto& r : fleet.records) {
    const auto a = audit_record(r);
    const auto f = collapse_features(a.pds, EntropyComponent::kHw);
    if (!a.valid || !f) continue;
    const LabeledFeatures lf{*f, calibration_label(a.located.trace.defensibility_level->value)};
    (run.train.size() < 20000 ? run.train : run.held_out).push_back(lf);
  }
  return run;
}

std::vector<CalibrationRun>& calibration_runs() {
  static std::vector<CalibrationRun> runs = [] {
    std::vector<CalibrationRun> v;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) v.push_back(calibration_data(seed));
    return v;
  }();
  return runs;
}

std::vector<CalibrationModel>& fitted_models() {
  static std::vector<CalibrationModel> models = [] {
    std::vector<CalibrationModel> v;
    for (const auto& run : calibration_runs()) v.push_back(fit_weights(run.train, EntropyComponent::kHw));
    return v;
  }();
  return models;
}

Check calibration_recovery() {
  std::size_t within = 0, loss_ok = 0;
  std::string fits;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& m = fitted_models()[i];
    const auto& train = calibration_runs()[i].train;
    const bool close = train.size() == 20000 && std::abs(m.alpha - 0.6) <= 0.05 &&
                       std::abs(m.beta - 0.1) <= 0.05 && std::abs(m.gamma - 0.3) <= 0.05;
    within += close;
    loss_ok += m.loss <= calibration_loss(train, {0, 0, 0});
    fits += fmt::format(" ({:.3f},{:.3f},{:.3f})", m.alpha, m.beta, m.gamma);
  }

  gen::Gen g(3);
  const auto& samples = calibration_runs()[0].train;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const std::array<double, 3> u{g.uniform(-3, 3), g.uniform(-3, 3), g.uniform(-3, 3)};
    std::array<double, 3> grad{};
    calibration_loss(samples, u, &grad);
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-5;
      auto up = u, dn = u;
      up[k] += h;
      dn[k] -= h;
      const double fd = (calibration_loss(samples, up) - calibration_loss(samples, dn)) / (2 * h);
      worst = std::max(worst, std::abs(grad[k] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  const bool ok = within >= 4 && loss_ok == 5 && worst <= 1e-5;
  return {ok, fmt::format("{}/5 seeds within 0.05, loss <= equal-weight on {}/5, max gradient "
                          "rel err {:.2e}; fits{}",
                          within, loss_ok, worst, fits)};
}

Check ece_protocol() {
  std::size_t size_bad = 0;
  for (std::size_t n = 1; n <= 1500; ++n) {
    for (std::size_t b = 1; b <= std::min<std::size_t>(n, 40); ++b) {
      const auto s = equal_frequency_sizes(n, b);
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      size_bad += s.size() != b || *hi - *lo > 1 ||
                  std::accumulate(s.begin(), s.end(), std::size_t{0}) != n;
    }
  }

  gen::Gen g(4);
  double worst_fixture = 0;
  for (int t = 0; t < 200; ++t) {
    // bins of m equal scores k/m with exactly k positives; distinct k keep bins apart
    const std::size_t bins = 1 + g.index(20), m = bins - 1 + g.index(25);
    std::vector<std::size_t> ks(m + 1);
    std::iota(ks.begin(), ks.end(), std::size_t{0});
    for (std::size_t i = 0; i < bins; ++i) std::swap(ks[i], ks[i + g.index(ks.size() - i)]);
    ks.resize(bins);
    std::vector<ScoredLabel> fx;
    for (std::size_t k : ks) {
      for (std::size_t i = 0; i < m; ++i) {
        fx.push_back({static_cast<double>(k) / static_cast<double>(m), i < k ? 1 : 0});
      }
    }
    worst_fixture = std::max(worst_fixture, compute_ece(fx, bins).ece);
  }

  double worst_held = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& m = fitted_models()[i];
    std::vector<ScoredLabel> scores;
    for (const auto& lf : calibration_runs()[i].held_out) {
      scores.push_back({scalar_collapse(lf.features, m.alpha, m.beta, m.gamma), lf.y});
    }
    worst_held = std::max(worst_held, compute_ece(scores).ece);
  }
  const bool ok = size_bad == 0 && worst_fixture <= 1e-12 && worst_held <= 0.05;
  return {ok, fmt::format("{} bad bin partitions, max fixture ECE {:.2e}, max held-out ECE {:.4f}",
                          size_bad, worst_fixture, worst_held)};
}

// ---------------------------------------------------------------- 5

struct SpanFixture {
  std::string text;
  CharSpan span;
};

SpanFixture span_fixture(std::string_view logic, std::string_view citation, std::string_view gap,
                         std::string_view tail = R"(, "precedent_weight": "High", "inverse_check": "No", "defensibility_level": "1"})") {
  SpanFixture f;
  f.text = fmt::format(R"({{"logic_chain": "{}", "policy_citation"{}:{}")", logic, gap, gap);
  f.span.begin = f.text.size();
  f.text += citation;
  f.span.end = f.text.size();
  f.text += '"';
  f.text += tail;
  return f;
}

// Random cut points, never inside a UTF-8 sequence.
AuditRecord tokenize(const std::string& text, gen::Gen& g) {
  AuditRecord r;
  r.id = "span";
  r.community_id = "c";
  r.trace_text = text;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = std::min(text.size(), i + 1 + g.index(6));
    while (j < text.size() && (static_cast<unsigned char>(text[j]) & 0xC0) == 0x80) ++j;
    TokenEvent t;
    t.text = text.substr(i, j - i);
    t.char_start = i;
    t.char_end = j;
    t.top_candidates = {{t.text, 0.0}};
    r.tokens.push_back(std::move(t));
    i = j;
  }
  return r;
}

Check span_detection() {
  std::vector<SpanFixture> corpus;
  // hand-counted: 14 chars of {"logic_chain", then `: "x", ` to 21, key to 38, `: "` to 41
  corpus.push_back({R"({"logic_chain": "x", "policy_citation": "Rule 3", "precedent_weight": "High", "inverse_check": "No", "defensibility_level": "1"})",
                    {41, 47}});
  // escaped quote inside the value; the value ends at the bare quote at 50
  corpus.push_back({R"({"logic_chain": "x", "policy_citation": "Rule \"3\"", "precedent_weight": "High", "inverse_check": "No", "defensibility_level": "1"})",
                    {41, 51}});
  // decoy key in logic_chain; logic value closes at 48, real key spans 51..68, then `: "`
  corpus.push_back({R"({"logic_chain": "\"policy_citation\": \"Rule 9\"", "policy_citation": "Rule 1", "precedent_weight": "High", "inverse_check": "No", "defensibility_level": "1"})",
                    {71, 77}});

  const std::vector<std::string> logics = {
      "short", R"(cites \"policy_citation\": \"Rule 7\" as a decoy)",
      "the user posted \\ twice", "policy_citation mentioned bare",
      R"(nested {\"policy_citation\": \"x\"})", "unicode caf\u00e9 \u2014 note"};
  const std::vector<std::string> citations = {
      "Rule 3: no spam", R"(Rule \"2\" (civility))", R"(path C:\\rules\\r4)", "",
      "R\u00e8gle 5 \u2014 pas de pub", "a,b:c{d}[e]", "   padded   ", R"(\\)",
      "Rule 1 / Rule 2 / precedent 2019-04", R"(ends with escaped quote \")"};
  const std::vector<std::string> gaps = {"", " ", "  ", "\t"};
  gen::Gen g(5);
  while (corpus.size() < 50) {
    const std::size_t i = corpus.size();
    corpus.push_back(span_fixture(logics[i % logics.size()], citations[(i * 7) % citations.size()],
                                  gaps[(i / 3) % gaps.size()]));
  }

  std::size_t detected = 0, mapped = 0;
  std::string failures;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& f = corpus[i];
    bool ok = false;
    try {
      const auto span = find_citation_span(f.text);
      ok = span.begin == f.span.begin && span.end == f.span.end;
    } catch (const Error&) {
    }
    detected += ok;
    if (!ok) failures += fmt::format(" #{}", i);

    // the record-level locator must map the same span onto tokens
    for (int rep = 0; rep < 3; ++rep) {
      const auto rec = tokenize(f.text, g);
      TokenRange want{rec.tokens.size(), 0};
      for (std::size_t t = 0; t < rec.tokens.size(); ++t) {
        const auto& tk = rec.tokens[t];
        const bool overlaps = f.span.begin < f.span.end
                                  ? tk.char_start < f.span.end && tk.char_end > f.span.begin
                                  : tk.char_start <= f.span.begin && f.span.begin < tk.char_end;
        if (overlaps) {
          want.begin = std::min(want.begin, t);
          want.end = std::max(want.end, f.span.begin < f.span.end ? t + 1 : t);
        }
      }
      if (f.span.begin == f.span.end) want.end = want.begin;
      const auto located = locate_trace(rec);
      mapped += located.citation_status == ErrorCode::kNone && located.trace.citation_tokens &&
                *located.trace.citation_tokens == want;
    }
  }
  const bool ok = detected == corpus.size() && mapped == 3 * corpus.size();
  return {ok, fmt::format("{}/{} spans at constructed offsets, {}/{} token mappings{}", detected,
                          corpus.size(), mapped, 3 * corpus.size(),
                          failures.empty() ? "" : "; missed" + failures)};
}

// ---------------------------------------------------------------- 6

Check stability_estimator() {
  gen::Gen g(6);
  std::size_t bad_sigma = 0;
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t k = 2 + g.index(199);
    std::vector<double> x(k);
    if (g.coin()) {
      for (auto& v : x) v = g.uniform(0, 1);
    } else {
      const double centre = g.uniform(0, 1), spread = std::pow(10.0, -g.uniform(0, 3));
      for (auto& v : x) v = std::clamp(centre + spread * g.uniform(-1, 1), 0.0, 1.0);
    }
    long double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<long double>(k);
    long double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double oracle = static_cast<double>(std::sqrt(ss / static_cast<long double>(k - 1)));
    const double got = sigma_pds(x);
    const double rel = oracle == 0.0 ? got : std::abs(got - oracle) / oracle;
    worst = std::max(worst, rel);
    bad_sigma += rel > 1e-12;
  }

  std::size_t bad_class = 0;
  const std::pair<double, StabilityClass> edges[] = {
      {0.95, StabilityClass::kRockSolid}, {0.80, StabilityClass::kMostlyStable},
      {0.60, StabilityClass::kModerate}};
  const StabilityClass below[] = {StabilityClass::kMostlyStable, StabilityClass::kModerate,
                                  StabilityClass::kHighlyUnstable};
  for (std::size_t i = 0; i < 3; ++i) {
    bad_class += classify_stability(edges[i].first) != edges[i].second;
    bad_class += classify_stability(std::nextafter(edges[i].first, 0.0)) != below[i];
  }
  bad_class += classify_stability(1.0) != StabilityClass::kRockSolid;
  bad_class += classify_stability(0.0) != StabilityClass::kHighlyUnstable;

  std::size_t bad_boundary = 0;
  for (int t = 0; t < 300; ++t) {
    ReplicateSet set;
    set.case_id = "c";
    const Level level = static_cast<Level>(1 + g.index(3));
    for (std::size_t i = 0, k = 2 + g.index(60); i < k; ++i) {
      Replicate r;
      r.s = g.uniform(0, 1);
      r.level = level;
      set.replicates.push_back(r);
    }
    bad_boundary += stability_profile(set).boundary_unstable;
  }
  const bool ok = bad_sigma == 0 && bad_class == 0 && bad_boundary == 0;
  return {ok, fmt::format("sigma max rel err {:.2e} ({} over 1e-12), {} class-edge errors, {} "
                          "unanimous sets flagged boundary-unstable",
                          worst, bad_sigma, bad_class, bad_boundary)};
}

// ---------------------------------------------------------------- 7

std::vector<double> sweep_ratios(Hypothesis h, std::uint64_t seed) {
  SimConfig base;
  base.seed = seed;
  base.hypothesis = h;
  base.replicates = 200;
  const CalibrationModel model{0.6, 0.1, 0.3};
  std::vector<SweepCase> cases;
  for (const auto& fleet : simulate_sweep(base, {0.1, 0.3, 0.7, 1.0}, 50, 50)) {
    const auto input = sweep_input(group_replicates(fleet.records, model), fleet.truth);
    cases.insert(cases.end(), input.begin(), input.end());
  }
  std::vector<double> ratios;
  for (const auto& col : temperature_sweep(cases)) ratios.push_back(col.sigma_ratio.value_or(NAN));
  return ratios;
}

Check hypothesis_discrimination() {
  std::size_t flat = 0, converged = 0;
  std::string g_detail, n_detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rg = sweep_ratios(Hypothesis::kGovernance, seed);
    const auto [lo, hi] = std::minmax_element(rg.begin(), rg.end());
    flat += rg.size() == 4 && *hi - *lo <= 0.25;
    g_detail += fmt::format(" {:.2f}", *hi - *lo);
    const auto rn = sweep_ratios(Hypothesis::kNoise, seed);
    converged += rn.size() == 4 && std::abs(rn.back() - 1.0) <= 0.15;
    n_detail += fmt::format(" {:.2f}", rn.back());
  }
  return {flat >= 4 && converged >= 4,
          fmt::format("H_G flat on {}/5 (ranges{}), H_N final ratio near 1 on {}/5 (T=1.0:{})",
                      flat, g_detail, converged, n_detail)};
}

// ---------------------------------------------------------------- 8

CohortReport cohort(std::string id, std::size_t n, std::size_t l3, std::size_t yes) {
  CohortReport r;
  r.cohort_id = std::move(id);
  r.n = n;
  r.level_counts = {n - l3, 0, l3};
  r.di = static_cast<double>(n - l3) / static_cast<double>(n);
  r.ai = static_cast<double>(yes) / static_cast<double>(n);
  r.inverse_yes = yes;
  return r;
}

bool same_metrics(const ScenarioRow& a, const ScenarioRow& b) {
  return a.cohorts == b.cohorts && a.passing_cohorts == b.passing_cohorts &&
         a.decisions == b.decisions && a.passing_decisions == b.passing_decisions &&
         a.community_coverage == b.community_coverage &&
         a.decision_coverage == b.decision_coverage && a.fleet_di == b.fleet_di &&
         a.fleet_ai == b.fleet_ai && a.indefensible_rate == b.indefensible_rate &&
         a.baseline_indefensible_rate == b.baseline_indefensible_rate &&
         a.risk_reduction_rate_ratio == b.risk_reduction_rate_ratio &&
         a.risk_reduction_exposure == b.risk_reduction_exposure;
}

Check gate_algebra() {
  auto rates = [](double di, double ai, std::size_t n) {
    CohortReport r;
    r.n = n;
    r.di = di;
    r.ai = ai;
    return r;
  };
  const GateConfig standard;
  const auto a = evaluate_gate(rates(0.968, 0.07, 100), standard);
  const auto b = evaluate_gate(rates(0.923, 0.183, 26902), standard);
  const auto c = evaluate_gate(rates(0.95, 0.10, 10), standard);
  const bool examples = a.pass && a.binding_constraint == BindingConstraint::kNone && !b.pass &&
                         b.binding_constraint == BindingConstraint::kAi && !c.pass &&
                         c.binding_constraint == BindingConstraint::kSize;

  // no cohort DI in [0.85, 0.90)
  const std::vector<CohortReport> fleet = {cohort("a", 100, 3, 5),  cohort("b", 80, 6, 10),
                                           cohort("c", 120, 22, 12), cohort("d", 60, 18, 4),
                                           cohort("e", 40, 0, 2),    cohort("f", 20, 1, 1)};
  const auto scenarios = default_scenarios();
  const auto rows = scenario_sweep(fleet, scenarios);
  const bool degenerate = rows[1].config.scenario_name == "Moderate" &&
                          rows[2].config.scenario_name == "Standard" &&
                          same_metrics(rows[1], rows[2]) && !same_metrics(rows[0], rows[1]);

  // tighten one threshold at a time on random fleets with exact DI/AI
  gen::Gen g(8);
  std::array<std::size_t, 3> coverage_up{}, indef_up{}, trials{};
  for (int t = 0; t < 1000; ++t) {
    std::vector<CohortReport> f;
    for (std::size_t i = 0, m = 2 + g.index(11); i < m; ++i) {
      const std::size_t n = 1 + g.index(120);
      f.push_back(cohort("c" + std::to_string(i), n, g.index(std::max<std::size_t>(1, n / 4) + 1) % (n + 1),
                         g.index(std::max<std::size_t>(1, n / 3) + 1) % (n + 1)));
    }
    GateConfig loose;
    loose.di_min = g.uniform(0.6, 0.95);
    loose.ai_max = g.uniform(0.05, 0.35);
    loose.min_decisions = 1 + g.index(40);
    for (int which = 0; which < 3; ++which) {
      GateConfig tight = loose;
      if (which == 0) tight.di_min = g.uniform(loose.di_min, 1.0);
      if (which == 1) tight.ai_max = g.uniform(0.0, loose.ai_max);
      if (which == 2) tight.min_decisions = loose.min_decisions + g.index(40);
      const std::vector<GateConfig> pair{loose, tight};
      const auto r = scenario_sweep(f, pair);
      ++trials[which];
      coverage_up[which] += r[1].community_coverage > r[0].community_coverage ||
                            r[1].decision_coverage > r[0].decision_coverage;
      indef_up[which] += r[0].indefensible_rate && r[1].indefensible_rate &&
                         *r[1].indefensible_rate > *r[0].indefensible_rate;
    }
  }
  const std::size_t cov_bad = coverage_up[0] + coverage_up[1] + coverage_up[2];
  const std::size_t indef_bad = indef_up[0] + indef_up[1] + indef_up[2];
  const bool ok = examples && degenerate && cov_bad == 0 && indef_bad == 0;
  return {ok, fmt::format("gate examples {}, Moderate=Standard {}; over 1000 fleets coverage "
                          "rose {} times, indefensible rate rose DI {} / AI {} / size {} times",
                          examples ? "ok" : "WRONG", degenerate ? "ok" : "WRONG", cov_bad,
                          indef_up[0], indef_up[1], indef_up[2])};
}

// ---------------------------------------------------------------- 9

Check verifier() {
  RuleSet rs;
  rs.community_id = "c";
  rs.platform_rules = {{"p1", "be civil to other members at all times"}};
  rs.community_rules = {{"r1", "alpha beta gamma delta epsilon zeta eta theta iota kappa"}};
  rs.precedents = {{"x1", "removed repeated link drops as spam"}};
  bool fixtures_ok = overlap_score("Removed repeated link-drops, as SPAM!", rs).score == 1.0 &&
                     overlap_score("Removed repeated link-drops, as SPAM!", rs).best_block_id == "x1" &&
                     overlap_score("quantum zebra", rs).score == 0.0;
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "epsilon",
                                          "zeta",  "eta",  "theta", "iota",  "kappa"};
  for (std::size_t m = 1; m <= 10; ++m) {
    for (std::size_t k = 0; k <= m; ++k) {
      std::string cit;
      for (std::size_t i = 0; i < k; ++i) cit += words[i] + " ";
      for (std::size_t i = k; i < m; ++i) cit += "zz" + std::to_string(i) + " ";
      fixtures_ok &= overlap_score(cit, rs).score ==
                     static_cast<double>(k) / static_cast<double>(m);
    }
  }

  std::size_t halluc = 0, halluc_caught = 0, halluc_zero = 0, pen = 0, pen_flagged = 0,
              pen_in_band = 0;
  const auto model = CalibrationModel::equal_weights();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig cfg;
    cfg.seed = seed;
    const auto batch = generate_adversarial_batch(cfg, 40);
    std::map<std::string, AdversarialTag> tags;
    for (const auto& t : batch.truth) tags[t.case_id] = t.tag;
    std::vector<VerificationRow> rows;
    std::vector<double> clean_h;
    for (const auto& r : batch.records) {
      const auto a = audit_record(r, &model);
      if (!a.valid || !a.s) continue;
      VerificationRow row;
      row.label = std::string(to_string(tags.at(case_id_of(r.id))));
      row.s = *a.s;
      row.h_kappa = a.pds.h_kappa;
      row.overlap = overlap_score(a.located.trace.policy_citation->value, batch.rules.at(r.community_id));
      row.verdict = two_layer_verdict(row.s, row.overlap.score);
      if (row.label == "clean" && row.h_kappa) clean_h.push_back(*row.h_kappa);
      rows.push_back(std::move(row));
    }
    const auto band = clean_baseline_band(clean_h);
    for (const auto& row : rows) {
      if (row.label == "hallucinated") {
        ++halluc;
        halluc_zero += row.overlap.score == 0.0;
        halluc_caught += is_flagged(row.verdict);
      } else if (row.label == "penumbra") {
        ++pen;
        pen_in_band += row.h_kappa && band.contains(*row.h_kappa);
        pen_flagged += is_flagged(row.verdict);
      }
    }
  }
  const bool ok = fixtures_ok && halluc > 0 && halluc_zero == halluc && halluc_caught == halluc &&
                  pen > 0 && pen_in_band == pen && pen_flagged == 0;
  return {ok, fmt::format("overlap fixtures {}; fabricated {}/{} flagged ({} zero overlap); "
                          "penumbra {}/{} flagged ({} in clean band)",
                          fixtures_ok ? "exact" : "WRONG", halluc_caught, halluc, halluc_zero,
                          pen_flagged, pen, pen_in_band)};
}

// ---------------------------------------------------------------- 10

Check end_to_end_determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "defensibility_acceptance_e2e";
  auto pipeline = [&]() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();
    std::string all;
    int status = 0;
    auto step = [&](std::vector<std::string> args) {
      std::ostringstream out, err;
      status |= cli::run(args, out, err);
      all += out.str();
    };
    step({"simulate", "--mode", "calibration", "--labels", "calibrated", "--n", "3000", "--seed", "17", "--out", d + "/cal"});
    step({"extract", "--input", d + "/cal/records.jsonl", "--out", d + "/features.csv"});
    step({"calibrate", "--input", d + "/features.csv", "--partition", "train", "--out", d + "/weights.json"});
    step({"ece", "--input", d + "/features.csv", "--partition", "test", "--weights", d + "/weights.json"});
    step({"simulate", "--mode", "fleet", "--seed", "17", "--out", d + "/fleet"});
    step({"gate", "--input", d + "/fleet/records.jsonl", "--out", d + "/gate.csv"});
    for (const auto* f : {"/cal/records.jsonl", "/cal/truth.jsonl", "/features.csv", "/weights.json",
                          "/fleet/records.jsonl", "/gate.csv"}) {
      all += read_file(d + f);
    }
    return std::make_pair(status, all);
  };
  const auto [s1, first] = pipeline();
  const auto [s2, second] = pipeline();
  fs::remove_all(dir);
  const bool ok = s1 == 0 && s2 == 0 && first == second;
  return {ok, fmt::format("{} bytes per run, exit codes {}/{}, {}", first.size(), s1, s2,
                          first == second ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"metric exactness", metric_exactness},
      {"entropy and log-odds", entropy_and_log_odds},
      {"calibration recovery", calibration_recovery},
      {"ECE protocol", ece_protocol},
      {"span detection", span_detection},
      {"stability estimator", stability_estimator},
      {"H_G/H_N discrimination", hypothesis_discrimination},
      {"gate algebra", gate_algebra},
      {"verifier", verifier},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Check v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    fmt::print("{} {:>2} {}: {} ({:.1f}s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
               v.detail, secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
