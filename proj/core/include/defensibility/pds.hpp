#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "defensibility/error.hpp"
#include "defensibility/types.hpp"

namespace defensibility {

/// Raw logprob-derived signals for one audit. Entropies are in bits,
/// lambda_xi in natural log. Orientation (negation) is applied only when
/// collapsing to the scalar.
struct PdsVector {
  std::optional<double> lambda_xi;  // log p(MAP level), <= 0
  std::optional<double> h_kappa;    // mean citation-token entropy
  std::optional<double> h_w;        // precedent-weight entropy, <= log2(3)
  std::optional<double> sigma_rho;  // logistic(log p(Yes) - log p(No))
  std::optional<Level> map_level;

  ErrorCode lambda_status = ErrorCode::kNone;
  ErrorCode h_kappa_status = ErrorCode::kNone;
  ErrorCode h_w_status = ErrorCode::kNone;
  ErrorCode sigma_status = ErrorCode::kNone;

  bool operator==(const PdsVector&) const = default;
};

struct LevelEstimate {
  double lambda_xi = 0.0;
  Level map_level = Level::kL1;
};

// Distribution helpers, exposed for tests and the simulator.

/// Case-insensitive match of a candidate (leading whitespace trimmed) as a
/// prefix of `category`. Empty candidates never match.
bool candidate_matches(std::string_view candidate, std::string_view category);

/// Shannon entropy in bits of the distribution proportional to exp(logits).
double entropy_bits(std::span<const double> logprobs);

double log_sum_exp(std::span<const double> logprobs);

double logistic(double x);

/// MAP defensibility level and its log-probability after renormalizing over
/// the matched {1,2,3} candidates. Exact ties go to the lowest level.
/// Throws Error(kNoLevelCandidate).
LevelEstimate extract_lambda_xi(const TokenEvent& level_token);
LevelEstimate extract_lambda_xi(const AuditRecord& record, const AuditTrace& trace);

/// Mean per-position entropy (bits) of the renormalized top candidates over
/// the citation token range. Throws Error(kEmptySpan | kMissingCandidates).
double compute_h_kappa(const AuditRecord& record, TokenRange citation);

/// Entropy (bits) over the matched {High, Medium, Low} candidates.
/// Throws Error(kNoWeightCandidate).
double compute_h_w(const TokenEvent& weight_token);
double compute_h_w(const AuditRecord& record, std::size_t weight_token);

/// logistic(log p(Yes) - log p(No)) from the stored logprobs; multiple
/// candidates of one polarity are summed in probability space.
/// Throws Error(kMissingPolarity).
double compute_sigma_rho(const TokenEvent& check_token);
double compute_sigma_rho(const AuditRecord& record, std::size_t check_token);

/// Runs every extractor; failures are recorded per component.
PdsVector assemble_pds(const AuditRecord& record, const AuditTrace& trace);

}  // namespace defensibility
