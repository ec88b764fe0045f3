#include "defensibility/stability.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "defensibility/error.hpp"

namespace defensibility {

std::string_view to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::kRockSolid: return "ROCK_SOLID";
    case StabilityClass::kMostlyStable: return "MOSTLY_STABLE";
    case StabilityClass::kModerate: return "MODERATE";
    case StabilityClass::kHighlyUnstable: return "HIGHLY_UNSTABLE";
  }
  return "UNKNOWN";
}

std::string_view to_string(CaseGroup group) {
  return group == CaseGroup::kFlipper ? "flipper" : "stable";
}

std::string_view to_string(FlatnessClass c) {
  switch (c) {
    case FlatnessClass::kFlat: return "FLAT";
    case FlatnessClass::kConverging: return "CONVERGING";
    case FlatnessClass::kVarying: return "VARYING";
  }
  return "UNKNOWN";
}

double sigma_pds(std::span<const double> scores) {
  if (scores.size() < 2) {
    throw Error(ErrorCode::kTooFewReplicates,
                fmt::format("need K >= 2 replicates, got {}", scores.size()));
  }
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : scores) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  return std::sqrt(std::max(0.0, m2) / static_cast<double>(n - 1));
}

StabilityClass classify_stability(double f) {
  if (f >= 0.95) return StabilityClass::kRockSolid;
  if (f >= 0.80) return StabilityClass::kMostlyStable;
  if (f >= 0.60) return StabilityClass::kModerate;
  return StabilityClass::kHighlyUnstable;
}

bool is_boundary_unstable(double p_l3) { return p_l3 > 0.10 && p_l3 < 0.90; }

StabilityProfile stability_profile(const ReplicateSet& set) {
  const std::size_t k = set.k();
  if (k < 2) {
    throw Error(ErrorCode::kTooFewReplicates,
                fmt::format("case '{}' has {} replicate(s)", set.case_id, k));
  }
  std::vector<double> scores;
  scores.reserve(k);
  std::array<std::size_t, 3> counts{};
  std::size_t yes = 0;
  double h_sum = 0.0;
  std::size_t h_n = 0;
  for (const auto& r : set.replicates) {
    scores.push_back(r.s);
    ++counts[level_index(r.level)];
    yes += r.inverse_check == InverseCheck::kYes;
    if (r.pds.h_kappa) {
      h_sum += *r.pds.h_kappa;
      ++h_n;
    }
  }

  StabilityProfile p;
  p.case_id = set.case_id;
  p.temperature = set.temperature;
  p.k = k;
  p.sigma_pds = sigma_pds(scores);
  p.mean_s = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(k);
  // Strict '>' keeps the lowest level on ties.
  std::size_t dominant = 0;
  for (std::size_t l = 1; l < counts.size(); ++l) {
    if (counts[l] > counts[dominant]) dominant = l;
  }
  p.dominant_level = static_cast<Level>(dominant + 1);
  p.dominant_fraction = static_cast<double>(counts[dominant]) / static_cast<double>(k);
  p.p_l3 = static_cast<double>(counts[2]) / static_cast<double>(k);
  p.boundary_unstable = is_boundary_unstable(p.p_l3);
  p.stability_class = classify_stability(p.dominant_fraction);
  p.inverse_yes_rate = static_cast<double>(yes) / static_cast<double>(k);
  if (h_n > 0) p.mean_h_kappa = h_sum / static_cast<double>(h_n);
  return p;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Ranks i+1 .. j share their mean.
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("lengths differ: {} vs {}", x.size(), y.size()));
  }
  if (x.size() < 3) {
    throw Error(ErrorCode::kLengthMismatch, fmt::format("need >= 3 points, got {}", x.size()));
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kZeroVariance, "constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

double mean_sigma(std::span<const StabilityProfile> profiles) {
  double sum = 0.0;
  for (const auto& p : profiles) sum += p.sigma_pds;
  return sum / static_cast<double>(profiles.size());
}

}  // namespace

double group_ratio(std::span<const StabilityProfile> flippers,
                   std::span<const StabilityProfile> stable) {
  if (flippers.empty() || stable.empty()) {
    throw Error(ErrorCode::kEmptyGroup, flippers.empty() ? "no flippers" : "no stable cases");
  }
  const double denominator = mean_sigma(stable);
  if (denominator == 0.0) {
    throw Error(ErrorCode::kZeroDenominator, "stable group has zero mean sigma_pds");
  }
  return mean_sigma(flippers) / denominator;
}

FlatnessSummary ratio_flatness_test(std::span<const std::pair<double, double>> ratios,
                                    double flat_bound) {
  if (ratios.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "flatness needs at least two temperatures");
  }
  std::vector<std::pair<double, double>> sorted(ratios.begin(), ratios.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  FlatnessSummary out;
  double lo = sorted.front().second, hi = lo;
  double mt = 0.0, mr = 0.0;
  for (const auto& [t, r] : sorted) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    mt += t;
    mr += r;
  }
  const double n = static_cast<double>(sorted.size());
  mt /= n;
  mr /= n;
  double stt = 0.0, str = 0.0;
  for (const auto& [t, r] : sorted) {
    stt += (t - mt) * (t - mt);
    str += (t - mt) * (r - mr);
  }
  out.range = hi - lo;
  out.slope = stt > 0.0 ? str / stt : 0.0;
  out.approaches_one =
      std::abs(sorted.back().second - 1.0) < std::abs(sorted.front().second - 1.0);
  if (out.range <= flat_bound) {
    out.classification = FlatnessClass::kFlat;
  } else if (out.approaches_one) {
    out.classification = FlatnessClass::kConverging;
  } else {
    out.classification = FlatnessClass::kVarying;
  }
  return out;
}

std::vector<SweepColumn> temperature_sweep(std::span<const SweepCase> cases) {
  struct Bucket {
    std::vector<StabilityProfile> flippers;
    std::vector<StabilityProfile> stable;
    std::size_t replicates = 0;
    std::size_t defensible = 0;
  };
  std::map<double, Bucket> by_temperature;
  for (const auto& c : cases) {
    auto& bucket = by_temperature[c.replicates.temperature];
    auto profile = stability_profile(c.replicates);
    (c.group == CaseGroup::kFlipper ? bucket.flippers : bucket.stable).push_back(profile);
    for (const auto& r : c.replicates.replicates) {
      ++bucket.replicates;
      bucket.defensible += is_defensible(r.level);
    }
  }

  std::map<std::string, double> baseline_h;  // case -> mean H[kappa] at lowest T
  std::vector<SweepColumn> columns;
  bool first = true;
  for (auto& [temperature, bucket] : by_temperature) {
    SweepColumn col;
    col.temperature = temperature;
    col.flippers = bucket.flippers.size();
    col.stable = bucket.stable.size();
    col.cases = col.flippers + col.stable;

    std::vector<StabilityProfile> all = bucket.flippers;
    all.insert(all.end(), bucket.stable.begin(), bucket.stable.end());
    col.mean_sigma_all = mean_sigma(all);
    auto boundary_rate = [](const std::vector<StabilityProfile>& g) {
      const auto n = std::count_if(g.begin(), g.end(),
                                   [](const StabilityProfile& p) { return p.boundary_unstable; });
      return static_cast<double>(n) / static_cast<double>(g.size());
    };
    if (!bucket.stable.empty()) {
      col.mean_sigma_stable = mean_sigma(bucket.stable);
      col.boundary_rate_stable = boundary_rate(bucket.stable);
    }
    if (!bucket.flippers.empty()) {
      col.mean_sigma_flippers = mean_sigma(bucket.flippers);
      col.boundary_rate_flippers = boundary_rate(bucket.flippers);
    }
    try {
      col.sigma_ratio = group_ratio(bucket.flippers, bucket.stable);
    } catch (const Error&) {
    }
    col.di_aggregate =
        static_cast<double>(bucket.defensible) / static_cast<double>(bucket.replicates);

    if (first) {
      for (const auto& p : all) {
        if (p.mean_h_kappa) baseline_h[p.case_id] = *p.mean_h_kappa;
      }
    }
    std::vector<double> base, here;
    for (const auto& p : all) {
      auto it = baseline_h.find(p.case_id);
      if (it == baseline_h.end() || !p.mean_h_kappa) continue;
      base.push_back(it->second);
      here.push_back(*p.mean_h_kappa);
    }
    try {
      col.h_kappa_rank_corr = spearman(base, here);
    } catch (const Error&) {
    }
    first = false;
    columns.push_back(std::move(col));
  }
  return columns;
}

}  // namespace defensibility
