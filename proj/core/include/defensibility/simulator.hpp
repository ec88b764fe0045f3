#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "defensibility/stability.hpp"
#include "defensibility/types.hpp"

namespace defensibility {

/// Which mechanism drives replicate variance.
///  kGovernance: each case carries a latent ambiguity a; with probability
///    q(a) a replicate follows an alternate interpretation, and every
///    generative logit gap is scaled by (1 - 0.2a) before tempering by T.
///  kNoise: logit gaps are identical across cases; only a residual fork at
///    a tenth of the governance rate remains, so token sampling noise at
///    temperature T dominates once T is moderate.
enum class Hypothesis { kGovernance, kNoise };
std::string_view to_string(Hypothesis h);  // "H_G" / "H_N"
std::optional<Hypothesis> parse_hypothesis(std::string_view text);

enum class AdversarialTag { kClean, kActionFlip, kHallucinated, kPenumbra };
std::string_view to_string(AdversarialTag tag);  // clean/action_flip/hallucinated/penumbra
std::optional<AdversarialTag> parse_adversarial_tag(std::string_view text);

/// How the emitted defensibility_level token is chosen.
///  kSampled: drawn from the tempered level distribution.
///  kCalibrated: y ~ Bernoulli(S_true) from the record's own PDS with the
///    configured true weights; y = 1 emits the MAP level (L2 if the MAP is
///    L3), y = 0 emits L3.
enum class LabelModel { kSampled, kCalibrated };

inline constexpr std::string_view kFabricatedSource = "FABRICATED";

struct CaseSpec {
  std::string case_id;
  std::string community_id;
  double ambiguity = 0.0;  // a in [0, 1]
  Level true_level = Level::kL1;
  std::string citation_source;  // rule block id or kFabricatedSource
  AdversarialTag tag = AdversarialTag::kClean;
  Action human_action = Action::kRemove;
  Action proposed_action = Action::kRemove;
  std::optional<CaseGroup> group;  // sweep cohorts only
};

struct TrueWeights {
  double alpha = 0.6;
  double beta = 0.1;
  double gamma = 0.3;
};

/// Generative constants; logit gaps are in nats before tempering by T.
struct GenerativeParams {
  double fork_base = 0.02;         // q(a) = fork_base + fork_slope * a
  double fork_slope = 0.45;
  double noise_fork_scale = 0.1;   // kNoise keeps this share of q(a)
  double sharpness_slope = 0.2;    // kGovernance: c = 1 - sharpness_slope * a
  double noise_sharpness = 0.3;    // kNoise: c for every case
  double governance_gain = 3.0;    // kGovernance: extra gain on weight/check/level logits
  double citation_gap_base = 1.5;  // citation gap = base + scale * c
  double citation_gap_scale = 4.0;
  double fabricated_gap = 9.0;
  double level_distance = 2.5;     // level logit penalty per step from the interpretation
  double inverse_push = 2.5;       // level logit bonus per step when the inverse check fired
  double inverse_ambiguity = 1.5;  // kGovernance: added to the inverse-check log-odds times a
  std::array<double, 3> inverse_base{-3.0, 1.0, 2.5};  // log-odds by interpretation level
  std::array<double, 3> inverse_weight_shift{0.0, 1.5, 3.0};  // by sampled High/Medium/Low
};

struct SimConfig {
  double temperature = 0.7;
  std::size_t replicates = 1;  // K
  Hypothesis hypothesis = Hypothesis::kGovernance;
  std::uint64_t seed = 1;
  LabelModel label_model = LabelModel::kSampled;
  TrueWeights true_weights;

  // Governance fleet shape.
  std::size_t cohorts = 20;
  std::size_t min_cohort_size = 15;
  std::size_t max_cohort_size = 80;
  double adversarial_fraction = 0.0;

  std::size_t citation_tokens = 25;
  GenerativeParams params;
};

/// Throws Error(kInvalidConfig) unless 0 < T <= 2, K >= 1 and sizes are
/// consistent.
void validate_sim_config(const SimConfig& config);

struct CaseTruth {
  std::string case_id;
  std::string community_id;
  double ambiguity = 0.0;
  Level true_level = Level::kL1;
  AdversarialTag tag = AdversarialTag::kClean;
  std::string citation_source;
  std::optional<CaseGroup> group;
  double temperature = 0.0;

  bool operator==(const CaseTruth&) const = default;
};

struct SimulatedFleet {
  std::vector<AuditRecord> records;
  std::vector<CaseTruth> truth;
  std::map<std::string, RuleSet> rules;
};

/// Deterministic synthetic rule set for a community: 2 platform rules,
/// 4 community rules and 2 precedents with disjoint vocabularies.
RuleSet synthetic_rule_set(const std::string& community_id);

/// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

/// splitmix64 finalizer; substream i of seed s is splitmix64(s + (i+1) * phi).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// One audit of `spec` as replicate k. The stream seed fixes every draw.
AuditRecord generate_replicate(const CaseSpec& spec, const RuleSet& rules,
                               const SimConfig& config, std::uint64_t stream_seed,
                               std::size_t k);

/// K replicates of every case; case i uses substream i of config.seed.
SimulatedFleet simulate_cases(const std::vector<CaseSpec>& cases, const SimConfig& config);

/// Governance fleet: `cohorts` communities whose ambiguity is bimodal
/// (clear cohorts a in [0, 0.1], contested cohorts a in [0.5, 1]).
SimulatedFleet generate_fleet(const SimConfig& config);

/// Stability sweep cohort: `flippers` cases with a in [0.6, 1] and
/// `stable` cases with a in [0, 0.3]; both groups share the level mix.
std::vector<CaseSpec> sweep_cases(std::uint64_t seed, std::size_t flippers = 50,
                                  std::size_t stable = 50);

/// One fleet per temperature over sweep_cases(base.seed, ...). Temperature
/// i draws from substream i of base.seed.
std::vector<SimulatedFleet> simulate_sweep(const SimConfig& base,
                                           const std::vector<double>& temperatures,
                                           std::size_t flippers = 50, std::size_t stable = 50);

/// Calibration dataset: n single-replicate cases with a ~ U[0, 1], uniform
/// true level and per-case temperature in [0.3, 1.2]; config.label_model
/// applies.
SimulatedFleet generate_calibration_set(const SimConfig& config, std::size_t n);

/// Adversarial batch for the verifier: clean, action_flip, hallucinated
/// (fabricated citation, very low citation entropy) and penumbra (real
/// citation, low ambiguity) cases in equal shares.
SimulatedFleet generate_adversarial_batch(const SimConfig& config, std::size_t per_tag);

std::string truth_to_json_line(const CaseTruth& truth);
CaseTruth truth_from_json_line(std::string_view line);

/// Writes records.jsonl, truth.jsonl and rules.json into `directory`.
void write_fleet(const SimulatedFleet& fleet, const std::string& directory);

/// Case id of a replicate record id (the part before the last '#').
std::string case_id_of(std::string_view record_id);

}  // namespace defensibility
