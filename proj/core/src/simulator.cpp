#include "defensibility/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <random>

#include "defensibility/calibration.hpp"
#include "defensibility/error.hpp"
#include "defensibility/pds.hpp"
#include "defensibility/record_io.hpp"

namespace defensibility {

namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kRuleBodyWords = 40;

// Rows: interpretation level; columns: High, Medium, Low.
constexpr std::array<std::array<double, 3>, 3> kWeightBase{{
    {0.88, 0.09, 0.03},
    {0.35, 0.50, 0.15},
    {0.70, 0.20, 0.10},
}};
const std::array<std::string_view, 12> kConsonants{"b", "d", "f", "g", "k", "l",
                                                   "m", "n", "p", "r", "s", "t"};
const std::array<std::string_view, 5> kVowels{"a", "e", "i", "o", "u"};
const std::array<std::string_view, 16> kFiller{
    "the",   "this",   "that",  "which", "under", "per",    "with",   "about",
    "where", "whether", "those", "such",  "any",   "within", "toward", "upon"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // 53 random bits; avoids implementation-defined std distributions.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  std::size_t categorical(std::span<const double> logprobs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < logprobs.size(); ++i) {
      acc += std::exp(logprobs[i]);
      if (u < acc) return i;
    }
    return logprobs.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};


std::string pseudo_word(Rng& rng, std::string_view prefix, std::size_t syllables) {
  std::string w(prefix);
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kConsonants[rng.index(kConsonants.size())];
    w += kVowels[rng.index(kVowels.size())];
  }
  return w;
}

std::vector<std::string> split_words(std::string_view body) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && body[i] == ' ') ++i;
    std::size_t j = i;
    while (j < body.size() && body[j] != ' ') ++j;
    if (j > i) words.emplace_back(body.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<double> normalize_logits(std::vector<double> logits) {
  const double z = log_sum_exp(logits);
  for (double& l : logits) l -= z;
  return logits;
}

Level alternate_level(Level level) {
  return level == Level::kL3 ? Level::kL2 : Level::kL3;
}

double fork_probability(double a, Hypothesis h, const GenerativeParams& p) {
  const double q = std::clamp(p.fork_base + p.fork_slope * a, 0.0, 1.0);
  return h == Hypothesis::kGovernance ? q : p.noise_fork_scale * q;
}

double sharpness(double a, Hypothesis h, const GenerativeParams& p) {
  return h == Hypothesis::kGovernance ? 1.0 - p.sharpness_slope * a : p.noise_sharpness;
}

class TraceBuilder {
 public:
  explicit TraceBuilder(AuditRecord& record) : r_(record) {}

  void fixed(std::string_view text) { push(std::string(text), 0.0, {{std::string(text), 0.0}}); }

  // `logprobs` must be normalized; candidates are stored in descending order.
  std::size_t choose(const std::vector<std::string>& texts, const std::vector<double>& logprobs,
                     std::size_t chosen) {
    std::vector<Candidate> cands;
    cands.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) cands.push_back({texts[i], logprobs[i]});
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& x, const Candidate& y) { return x.logprob > y.logprob; });
    push(texts[chosen], logprobs[chosen], std::move(cands));
    return r_.tokens.size() - 1;
  }

 private:
  void push(std::string text, double logprob, std::vector<Candidate> cands) {
    TokenEvent t;
    t.char_start = r_.trace_text.size();
    r_.trace_text += text;
    t.char_end = r_.trace_text.size();
    t.text = std::move(text);
    t.logprob = logprob;
    t.top_candidates = std::move(cands);
    r_.tokens.push_back(std::move(t));
  }

  AuditRecord& r_;
};

const RuleBlock* find_block(const RuleSet& rules, std::string_view id) {
  for (const auto* group : {&rules.platform_rules, &rules.community_rules, &rules.precedents}) {
    for (const auto& b : *group) {
      if (b.id == id) return &b;
    }
  }
  return nullptr;
}

std::vector<std::string> fabricated_words(Rng& rng, std::size_t n) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(pseudo_word(rng, "z", 2));
  return words;
}

Action flip(Action a) { return a == Action::kRemove ? Action::kApprove : Action::kRemove; }

Level draw_level(Rng& rng, const std::array<double, 3>& mix) {
  const double u = rng.uniform();
  if (u < mix[0]) return Level::kL1;
  if (u < mix[0] + mix[1]) return Level::kL2;
  return Level::kL3;
}

std::string random_community_block(Rng& rng, const RuleSet& rules) {
  return rules.community_rules[rng.index(rules.community_rules.size())].id;
}

void assign_actions(Rng& rng, CaseSpec& spec) {
  spec.human_action = rng.bernoulli(0.5) ? Action::kRemove : Action::kApprove;
  const double disagree = spec.true_level == Level::kL3 ? 0.4 : 0.1;
  spec.proposed_action = rng.bernoulli(disagree) ? flip(spec.human_action) : spec.human_action;
  if (spec.tag == AdversarialTag::kActionFlip) spec.proposed_action = flip(spec.human_action);
}

json truth_json(const CaseTruth& t) {
  json j;
  j["case_id"] = t.case_id;
  j["community_id"] = t.community_id;
  j["ambiguity"] = t.ambiguity;
  j["true_level"] = static_cast<int>(t.true_level);
  j["tag"] = std::string(to_string(t.tag));
  j["citation_source"] = t.citation_source;
  j["group"] = t.group ? json(std::string(to_string(*t.group))) : json(nullptr);
  j["temperature"] = t.temperature;
  return j;
}

}  // namespace

std::string_view to_string(Hypothesis h) { return h == Hypothesis::kGovernance ? "H_G" : "H_N"; }

std::optional<Hypothesis> parse_hypothesis(std::string_view text) {
  if (text == "H_G") return Hypothesis::kGovernance;
  if (text == "H_N") return Hypothesis::kNoise;
  return std::nullopt;
}

std::string_view to_string(AdversarialTag tag) {
  switch (tag) {
    case AdversarialTag::kClean: return "clean";
    case AdversarialTag::kActionFlip: return "action_flip";
    case AdversarialTag::kHallucinated: return "hallucinated";
    case AdversarialTag::kPenumbra: return "penumbra";
  }
  return "unknown";
}

std::optional<AdversarialTag> parse_adversarial_tag(std::string_view text) {
  for (auto tag : {AdversarialTag::kClean, AdversarialTag::kActionFlip,
                   AdversarialTag::kHallucinated, AdversarialTag::kPenumbra}) {
    if (text == to_string(tag)) return tag;
  }
  return std::nullopt;
}

void validate_sim_config(const SimConfig& c) {
  if (!(c.temperature > 0.0 && c.temperature <= 2.0)) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("temperature {} outside (0, 2]", c.temperature));
  }
  if (c.replicates < 1) throw Error(ErrorCode::kInvalidConfig, "replicates must be >= 1");
  if (c.min_cohort_size < 1 || c.min_cohort_size > c.max_cohort_size) {
    throw Error(ErrorCode::kInvalidConfig, "cohort size bounds are inconsistent");
  }
  if (!(c.adversarial_fraction >= 0.0 && c.adversarial_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "adversarial_fraction outside [0, 1]");
  }
  if (c.citation_tokens < 1 || c.citation_tokens > kRuleBodyWords) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("citation_tokens must be in [1, {}]", kRuleBodyWords));
  }
  const auto& w = c.true_weights;
  if (!(w.alpha > 0 && w.beta > 0 && w.gamma > 0) ||
      std::abs(w.alpha + w.beta + w.gamma - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "true weights must be positive and sum to 1");
  }
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

RuleSet synthetic_rule_set(const std::string& community_id) {
  RuleSet rules;
  rules.community_id = community_id;
  auto make = [&](std::vector<RuleBlock>& out, std::string_view kind, std::size_t n,
                  bool shared) {
    for (std::size_t i = 0; i < n; ++i) {
      RuleBlock b;
      b.id = shared ? fmt::format("{}-{}", kind, i + 1)
                    : fmt::format("{}/{}-{}", community_id, kind, i + 1);
      Rng rng(stable_hash(b.id));
      std::vector<std::string> words;
      for (std::size_t w = 0; w < kRuleBodyWords; ++w) words.push_back(pseudo_word(rng, "", 3));
      b.body = fmt::format("{}", fmt::join(words, " "));
      out.push_back(std::move(b));
    }
  };
  make(rules.platform_rules, "platform", 2, true);
  make(rules.community_rules, "rule", 4, false);
  make(rules.precedents, "precedent", 2, false);
  return rules;
}

AuditRecord generate_replicate(const CaseSpec& spec, const RuleSet& rules,
                               const SimConfig& config, std::uint64_t stream_seed,
                               std::size_t k) {
  Rng rng(stream_seed);
  const double a = std::clamp(spec.ambiguity, 0.0, 1.0);
  const double t = config.temperature;
  const Hypothesis h = config.hypothesis;
  const GenerativeParams& p = config.params;

  // Interpretive fork, independent of temperature.
  Level m = spec.true_level;
  if (rng.bernoulli(fork_probability(a, h, p))) m = alternate_level(m);
  const double c = sharpness(a, h, p);
  const auto mi = static_cast<std::size_t>(level_index(m));
  const double gain = h == Hypothesis::kGovernance ? p.governance_gain : 1.0;

  AuditRecord r;
  r.id = fmt::format("{}#{}", spec.case_id, k);
  r.community_id = spec.community_id;
  r.content = fmt::format("synthetic case {}", spec.case_id);
  r.proposed_action = spec.proposed_action;
  r.human_action = spec.human_action;
  r.temperature = t;
  TraceBuilder out(r);

  out.fixed("{\"logic_chain\": \"");
  for (std::string_view w : {"The", " post", " is", " assessed", " against", " the", " cited",
                             " rule", "."}) {
    out.fixed(w);
  }
  out.fixed("\", \"policy_citation\": \"");

  // Citation: a window of the source block, or fabricated words.
  const bool fabricated = spec.citation_source == kFabricatedSource;
  std::vector<std::string> words;
  if (fabricated) {
    Rng vocab(stable_hash(spec.case_id));
    words = fabricated_words(vocab, config.citation_tokens);
  } else {
    const RuleBlock* block = find_block(rules, spec.citation_source);
    if (!block) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("citation source '{}' not in rule set", spec.citation_source));
    }
    auto body = split_words(block->body);
    const std::size_t offset = rng.index(body.size() - config.citation_tokens + 1);
    words.assign(body.begin() + static_cast<std::ptrdiff_t>(offset),
                 body.begin() + static_cast<std::ptrdiff_t>(offset + config.citation_tokens));
  }
  const double gap = (fabricated ? p.fabricated_gap : p.citation_gap_base + p.citation_gap_scale * c) / t;
  const double lp_word = -std::log1p(std::exp(-gap));
  const double lp_alt = lp_word - gap;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string lead = i == 0 ? "" : " ";
    const std::string filler(kFiller[(i + stable_hash(spec.case_id)) % kFiller.size()]);
    const std::size_t pick = rng.bernoulli(std::exp(lp_alt)) ? 1 : 0;
    out.choose({lead + words[i], lead + filler}, {lp_word, lp_alt}, pick);
  }

  // Precedent weight.
  out.fixed("\", \"precedent_weight\": \"");
  std::vector<double> w_logits(3);
  for (std::size_t j = 0; j < 3; ++j) w_logits[j] = gain * c * std::log(kWeightBase[mi][j]) / t;
  const auto w_lp = normalize_logits(w_logits);
  const std::size_t w_pick = rng.categorical(w_lp);
  const std::size_t w_tok = out.choose({"High", "Medium", "Low"}, w_lp, w_pick);

  // Inverse check, conditioned on the sampled weight.
  out.fixed("\", \"inverse_check\": \"");
  double rho = p.inverse_base[mi] + p.inverse_weight_shift[w_pick];
  if (h == Hypothesis::kGovernance) {
    rho += p.inverse_ambiguity * a;
    rho *= gain;
  } else {
    rho *= c;
  }
  rho /= t;
  const double lp_yes = -std::log1p(std::exp(-rho));
  const double lp_no = -std::log1p(std::exp(rho));
  const bool yes = rng.bernoulli(std::exp(lp_yes));
  const std::size_t i_tok = out.choose({"Yes", "No"}, {lp_yes, lp_no}, yes ? 0 : 1);

  // Defensibility level, conditioned on the sampled inverse check.
  out.fixed("\", \"defensibility_level\": \"");
  std::vector<double> l_logits(3);
  for (std::size_t l = 0; l < 3; ++l) {
    const double dist = std::abs(static_cast<double>(l) - static_cast<double>(mi));
    const double push = yes ? p.inverse_push * static_cast<double>(l) : 0.0;
    l_logits[l] = gain * c * (-p.level_distance * dist + push) / t;
  }
  const auto l_lp = normalize_logits(l_logits);
  std::size_t l_pick = rng.categorical(l_lp);
  const double y_draw = rng.uniform();  // drawn unconditionally to keep streams aligned
  if (config.label_model == LabelModel::kCalibrated) {
    TokenEvent level_event;
    level_event.top_candidates = {{"1", l_lp[0]}, {"2", l_lp[1]}, {"3", l_lp[2]}};
    PdsVector v;
    v.lambda_xi = extract_lambda_xi(level_event).lambda_xi;
    const auto map = extract_lambda_xi(level_event).map_level;
    v.h_w = compute_h_w(r.tokens[w_tok]);
    v.sigma_rho = compute_sigma_rho(r.tokens[i_tok]);
    const auto f = *collapse_features(v, EntropyComponent::kHw);
    const auto& tw = config.true_weights;
    const double s = scalar_collapse(f, tw.alpha, tw.beta, tw.gamma);
    if (y_draw < s) {
      l_pick = map == Level::kL3 ? 1 : static_cast<std::size_t>(level_index(map));
    } else {
      l_pick = 2;
    }
  }
  out.choose({"1", "2", "3"}, l_lp, l_pick);
  out.fixed("\"}");
  return r;
}

SimulatedFleet simulate_cases(const std::vector<CaseSpec>& cases, const SimConfig& config) {
  validate_sim_config(config);
  SimulatedFleet fleet;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& spec = cases[i];
    auto it = fleet.rules.find(spec.community_id);
    if (it == fleet.rules.end()) {
      it = fleet.rules.emplace(spec.community_id, synthetic_rule_set(spec.community_id)).first;
    }
    const std::uint64_t case_seed = substream_seed(config.seed, i);
    for (std::size_t k = 0; k < config.replicates; ++k) {
      fleet.records.push_back(
          generate_replicate(spec, it->second, config, substream_seed(case_seed, k), k));
    }
    fleet.truth.push_back({spec.case_id, spec.community_id, spec.ambiguity, spec.true_level,
                           spec.tag, spec.citation_source, spec.group, config.temperature});
  }
  return fleet;
}

SimulatedFleet generate_fleet(const SimConfig& config) {
  validate_sim_config(config);
  Rng rng(splitmix64(config.seed ^ 0xF1EE7ULL));
  std::vector<CaseSpec> cases;
  for (std::size_t c = 0; c < config.cohorts; ++c) {
    const std::string community = fmt::format("c{:02}", c);
    const RuleSet rules = synthetic_rule_set(community);
    const bool contested = c % 2 == 1;
    const std::size_t size =
        config.min_cohort_size + rng.index(config.max_cohort_size - config.min_cohort_size + 1);
    const std::array<double, 3> mix =
        contested ? std::array<double, 3>{0.45, 0.35, 0.20} : std::array<double, 3>{0.95, 0.04, 0.01};
    for (std::size_t i = 0; i < size; ++i) {
      CaseSpec s;
      s.case_id = fmt::format("{}-{:03}", community, i);
      s.community_id = community;
      s.ambiguity = contested ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.1);
      s.true_level = draw_level(rng, mix);
      s.citation_source = random_community_block(rng, rules);
      if (rng.bernoulli(config.adversarial_fraction)) {
        if (rng.bernoulli(0.5)) {
          s.tag = AdversarialTag::kHallucinated;
          s.citation_source = std::string(kFabricatedSource);
          s.true_level = Level::kL3;
        } else {
          s.tag = AdversarialTag::kActionFlip;
        }
      }
      assign_actions(rng, s);
      cases.push_back(std::move(s));
    }
  }
  return simulate_cases(cases, config);
}

std::vector<CaseSpec> sweep_cases(std::uint64_t seed, std::size_t flippers, std::size_t stable) {
  Rng rng(splitmix64(seed ^ 0x5EEEULL));
  const RuleSet rules = synthetic_rule_set("sweep");
  constexpr std::array<Level, 3> kMix{Level::kL1, Level::kL2, Level::kL3};
  std::vector<CaseSpec> cases;
  auto add = [&](CaseGroup group, std::size_t n, double lo, double hi, char prefix) {
    for (std::size_t i = 0; i < n; ++i) {
      CaseSpec s;
      s.case_id = fmt::format("{}{:03}", prefix, i);
      s.community_id = "sweep";
      s.ambiguity = rng.uniform(lo, hi);
      s.true_level = kMix[i % kMix.size()];
      s.citation_source = random_community_block(rng, rules);
      s.group = group;
      assign_actions(rng, s);
      cases.push_back(std::move(s));
    }
  };
  add(CaseGroup::kFlipper, flippers, 0.6, 1.0, 'f');
  add(CaseGroup::kStable, stable, 0.0, 0.3, 's');
  return cases;
}

std::vector<SimulatedFleet> simulate_sweep(const SimConfig& base,
                                           const std::vector<double>& temperatures,
                                           std::size_t flippers, std::size_t stable) {
  const auto cases = sweep_cases(base.seed, flippers, stable);
  std::vector<SimulatedFleet> out;
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    SimConfig cfg = base;
    cfg.temperature = temperatures[i];
    cfg.seed = substream_seed(base.seed, i);
    out.push_back(simulate_cases(cases, cfg));
  }
  return out;
}

SimulatedFleet generate_calibration_set(const SimConfig& config, std::size_t n) {
  validate_sim_config(config);
  Rng rng(splitmix64(config.seed ^ 0xCA1ULL));
  const RuleSet rules = synthetic_rule_set("cal");
  SimulatedFleet fleet;
  fleet.rules.emplace("cal", rules);
  for (std::size_t i = 0; i < n; ++i) {
    CaseSpec s;
    s.case_id = fmt::format("cal{:05}", i);
    s.community_id = "cal";
    s.ambiguity = rng.uniform();
    s.true_level = static_cast<Level>(1 + rng.index(3));
    s.citation_source = random_community_block(rng, rules);
    assign_actions(rng, s);
    SimConfig local = config;
    local.temperature = std::round(rng.uniform(0.3, 1.2) * 100.0) / 100.0;
    const std::uint64_t case_seed = substream_seed(config.seed, i);
    for (std::size_t k = 0; k < config.replicates; ++k) {
      fleet.records.push_back(
          generate_replicate(s, rules, local, substream_seed(case_seed, k), k));
    }
    fleet.truth.push_back({s.case_id, s.community_id, s.ambiguity, s.true_level, s.tag,
                           s.citation_source, s.group, local.temperature});
  }
  return fleet;
}

SimulatedFleet generate_adversarial_batch(const SimConfig& config, std::size_t per_tag) {
  validate_sim_config(config);
  Rng rng(splitmix64(config.seed ^ 0xAD5ULL));
  const RuleSet rules = synthetic_rule_set("adv");
  std::vector<CaseSpec> cases;
  for (auto tag : {AdversarialTag::kClean, AdversarialTag::kActionFlip,
                   AdversarialTag::kHallucinated, AdversarialTag::kPenumbra}) {
    for (std::size_t i = 0; i < per_tag; ++i) {
      CaseSpec s;
      s.case_id = fmt::format("{}-{:03}", to_string(tag), i);
      s.community_id = "adv";
      s.tag = tag;
      s.citation_source = random_community_block(rng, rules);
      switch (tag) {
        case AdversarialTag::kClean:
          s.ambiguity = rng.uniform();
          s.true_level = static_cast<Level>(1 + rng.index(3));
          break;
        case AdversarialTag::kActionFlip:
          s.ambiguity = rng.uniform(0.3, 0.8);
          s.true_level = Level::kL3;
          break;
        case AdversarialTag::kHallucinated:
          s.ambiguity = rng.uniform();
          s.true_level = Level::kL3;
          s.citation_source = std::string(kFabricatedSource);
          break;
        case AdversarialTag::kPenumbra:
          s.ambiguity = rng.uniform(0.0, 0.2);
          s.true_level = rng.bernoulli(0.5) ? Level::kL1 : Level::kL2;
          break;
      }
      assign_actions(rng, s);
      cases.push_back(std::move(s));
    }
  }
  return simulate_cases(cases, config);
}

std::string truth_to_json_line(const CaseTruth& truth) { return truth_json(truth).dump(); }

CaseTruth truth_from_json_line(std::string_view line) {
  try {
    const auto j = json::parse(line);
    CaseTruth t;
    t.case_id = j.at("case_id").get<std::string>();
    t.community_id = j.at("community_id").get<std::string>();
    t.ambiguity = j.at("ambiguity").get<double>();
    const int level = j.at("true_level").get<int>();
    if (level < 1 || level > 3) throw Error(ErrorCode::kSchemaMismatch, "true_level out of range");
    t.true_level = static_cast<Level>(level);
    const auto tag = parse_adversarial_tag(j.at("tag").get<std::string>());
    if (!tag) throw Error(ErrorCode::kSchemaMismatch, "unknown tag");
    t.tag = *tag;
    t.citation_source = j.at("citation_source").get<std::string>();
    const auto& g = j.at("group");
    if (!g.is_null()) {
      const auto name = g.get<std::string>();
      if (name == "flipper") {
        t.group = CaseGroup::kFlipper;
      } else if (name == "stable") {
        t.group = CaseGroup::kStable;
      } else {
        throw Error(ErrorCode::kSchemaMismatch, fmt::format("unknown group '{}'", name));
      }
    }
    t.temperature = j.at("temperature").get<double>();
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, e.what());
  }
}

void write_fleet(const SimulatedFleet& fleet, const std::string& directory) {
  const std::filesystem::path dir(directory);
  write_dataset((dir / "records.jsonl").string(), fleet.records);
  std::string truth;
  for (const auto& t : fleet.truth) {
    truth += truth_to_json_line(t);
    truth += '\n';
  }
  write_file_atomic((dir / "truth.jsonl").string(), truth);
  write_file_atomic((dir / "rules.json").string(), rule_sets_to_json(fleet.rules));
}

std::string case_id_of(std::string_view record_id) {
  const auto pos = record_id.rfind('#');
  return std::string(pos == std::string_view::npos ? record_id : record_id.substr(0, pos));
}

}  // namespace defensibility
