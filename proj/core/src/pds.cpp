#include "defensibility/pds.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <vector>

namespace defensibility {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string_view trim_leading(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

/// Log of summed probability per category; -inf when nothing matched.
template <std::size_t N>
std::array<double, N> match_categories(const TokenEvent& token,
                                       const std::array<std::string_view, N>& categories) {
  std::array<double, N> out;
  out.fill(kNegInf);
  for (const auto& c : token.top_candidates) {
    for (std::size_t k = 0; k < N; ++k) {
      if (!candidate_matches(c.token, categories[k])) continue;
      const double hi = std::max(out[k], c.logprob);
      const double lo = std::min(out[k], c.logprob);
      out[k] = lo == kNegInf ? hi : hi + std::log1p(std::exp(lo - hi));
      break;
    }
  }
  return out;
}

template <std::size_t N>
std::vector<double> matched_only(const std::array<double, N>& logs) {
  std::vector<double> out;
  for (double v : logs) {
    if (v != kNegInf) out.push_back(v);
  }
  return out;
}

constexpr std::array<std::string_view, 3> kLevelTokens = {"1", "2", "3"};
constexpr std::array<std::string_view, 3> kWeightTokens = {"High", "Medium", "Low"};
constexpr std::array<std::string_view, 2> kPolarityTokens = {"Yes", "No"};

}  // namespace

bool candidate_matches(std::string_view candidate, std::string_view category) {
  candidate = trim_leading(candidate);
  if (candidate.empty() || candidate.size() > category.size()) return false;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(candidate[i])) !=
        std::tolower(static_cast<unsigned char>(category[i]))) {
      return false;
    }
  }
  return true;
}

double log_sum_exp(std::span<const double> logprobs) {
  double max = kNegInf;
  for (double v : logprobs) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : logprobs) sum += std::exp(v - max);
  return max + std::log(sum);
}

double entropy_bits(std::span<const double> logprobs) {
  const double lse = log_sum_exp(logprobs);
  double h = 0.0;
  for (double v : logprobs) {
    const double logp = v - lse;
    const double p = std::exp(logp);
    if (p > 0.0) h -= p * logp;
  }
  return std::max(0.0, h / std::log(2.0));
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LevelEstimate extract_lambda_xi(const TokenEvent& level_token) {
  const auto logs = match_categories(level_token, kLevelTokens);
  const auto matched = matched_only(logs);
  if (matched.empty()) {
    throw Error(ErrorCode::kNoLevelCandidate, "no {1,2,3} candidate at the level position");
  }
  // Strict '>' keeps the lowest level on exact ties.
  std::size_t best = 0;
  for (std::size_t k = 1; k < logs.size(); ++k) {
    if (logs[k] > logs[best]) best = k;
  }
  LevelEstimate estimate;
  estimate.map_level = static_cast<Level>(best + 1);
  estimate.lambda_xi = std::min(0.0, logs[best] - log_sum_exp(matched));
  return estimate;
}

LevelEstimate extract_lambda_xi(const AuditRecord& record, const AuditTrace& trace) {
  if (!trace.defensibility_level || !trace.defensibility_level->token) {
    throw Error(ErrorCode::kFieldTokenNotFound, "defensibility_level token not located");
  }
  return extract_lambda_xi(record.tokens.at(*trace.defensibility_level->token));
}

double compute_h_kappa(const AuditRecord& record, TokenRange citation) {
  if (citation.empty()) throw Error(ErrorCode::kEmptySpan, "citation token range is empty");
  if (citation.end > record.tokens.size()) {
    throw Error(ErrorCode::kEmptySpan, "citation token range exceeds token sequence");
  }
  std::vector<double> logs;
  double total = 0.0;
  for (std::size_t i = citation.begin; i < citation.end; ++i) {
    const auto& candidates = record.tokens[i].top_candidates;
    if (candidates.empty()) {
      throw Error(ErrorCode::kMissingCandidates, fmt::format("position {}", i));
    }
    logs.clear();
    for (const auto& c : candidates) logs.push_back(c.logprob);
    total += entropy_bits(logs);
  }
  return total / static_cast<double>(citation.size());
}

double compute_h_w(const TokenEvent& weight_token) {
  const auto matched = matched_only(match_categories(weight_token, kWeightTokens));
  if (matched.empty()) {
    throw Error(ErrorCode::kNoWeightCandidate, "no High/Medium/Low candidate");
  }
  return entropy_bits(matched);
}

double compute_h_w(const AuditRecord& record, std::size_t weight_token) {
  return compute_h_w(record.tokens.at(weight_token));
}

double compute_sigma_rho(const TokenEvent& check_token) {
  const auto logs = match_categories(check_token, kPolarityTokens);
  if (logs[0] == kNegInf) throw Error(ErrorCode::kMissingPolarity, "Yes");
  if (logs[1] == kNegInf) throw Error(ErrorCode::kMissingPolarity, "No");
  return logistic(logs[0] - logs[1]);
}

double compute_sigma_rho(const AuditRecord& record, std::size_t check_token) {
  return compute_sigma_rho(record.tokens.at(check_token));
}

PdsVector assemble_pds(const AuditRecord& record, const AuditTrace& trace) {
  PdsVector v;
  try {
    const auto est = extract_lambda_xi(record, trace);
    v.lambda_xi = est.lambda_xi;
    v.map_level = est.map_level;
  } catch (const Error& e) {
    v.lambda_status = e.code();
  }

  try {
    if (!trace.citation_tokens) {
      throw Error(ErrorCode::kSpanNotFound, "citation span not located");
    }
    v.h_kappa = compute_h_kappa(record, *trace.citation_tokens);
  } catch (const Error& e) {
    v.h_kappa_status = e.code();
  }

  try {
    if (!trace.precedent_weight || !trace.precedent_weight->token) {
      throw Error(ErrorCode::kFieldTokenNotFound, "precedent_weight");
    }
    v.h_w = compute_h_w(record, *trace.precedent_weight->token);
  } catch (const Error& e) {
    v.h_w_status = e.code();
  }

  try {
    if (!trace.inverse_check || !trace.inverse_check->token) {
      throw Error(ErrorCode::kFieldTokenNotFound, "inverse_check");
    }
    v.sigma_rho = compute_sigma_rho(record, *trace.inverse_check->token);
  } catch (const Error& e) {
    v.sigma_status = e.code();
  }
  return v;
}

}  // namespace defensibility
