#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "defensibility/pds.hpp"

namespace defensibility {

struct Replicate {
  PdsVector pds;
  double s = 0.0;
  Level level = Level::kL1;
  InverseCheck inverse_check = InverseCheck::kNo;
};

/// K audits of one case at one temperature.
struct ReplicateSet {
  std::string case_id;
  double temperature = 0.0;
  std::vector<Replicate> replicates;

  std::size_t k() const { return replicates.size(); }
};

enum class StabilityClass { kRockSolid, kMostlyStable, kModerate, kHighlyUnstable };
std::string_view to_string(StabilityClass c);

struct StabilityProfile {
  std::string case_id;
  double temperature = 0.0;
  std::size_t k = 0;
  double sigma_pds = 0.0;
  double mean_s = 0.0;
  double p_l3 = 0.0;
  Level dominant_level = Level::kL1;
  double dominant_fraction = 0.0;
  bool boundary_unstable = false;
  StabilityClass stability_class = StabilityClass::kHighlyUnstable;
  double inverse_yes_rate = 0.0;
  std::optional<double> mean_h_kappa;  // over replicates with H[kappa]
};

/// Sample standard deviation with K-1 denominator (Welford accumulation).
/// Throws Error(kTooFewReplicates) for fewer than two values.
double sigma_pds(std::span<const double> scores);

/// Closed lower edges: [0.95,1] rock solid, [0.80,0.95) mostly stable,
/// [0.60,0.80) moderate, below 0.60 highly unstable.
StabilityClass classify_stability(double dominant_fraction);

/// True iff 0.10 < p_l3 < 0.90 (the corrected interval definition).
bool is_boundary_unstable(double p_l3);

/// Throws Error(kTooFewReplicates) when K < 2.
StabilityProfile stability_profile(const ReplicateSet& set);

/// Average ranks (1-based); tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws Error(kLengthMismatch)
/// for unequal lengths or fewer than 3 points, Error(kZeroVariance) when
/// either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

enum class CaseGroup { kFlipper, kStable };
std::string_view to_string(CaseGroup group);

/// Mean sigma_pds of flippers over mean sigma_pds of stable cases.
/// Throws Error(kEmptyGroup) / Error(kZeroDenominator).
double group_ratio(std::span<const StabilityProfile> flippers,
                   std::span<const StabilityProfile> stable);

enum class FlatnessClass { kFlat, kConverging, kVarying };
std::string_view to_string(FlatnessClass c);

struct FlatnessSummary {
  double range = 0.0;   // max - min of the ratio
  double slope = 0.0;   // least-squares slope of ratio against temperature
  bool approaches_one = false;  // |last - 1| < |first - 1|
  FlatnessClass classification = FlatnessClass::kFlat;
};

inline constexpr double kDefaultFlatnessBound = 0.25;

/// `ratios` holds (temperature, ratio) pairs; they are ordered by
/// temperature before evaluation. Throws Error(kTooFewSamples) for fewer
/// than two temperatures.
FlatnessSummary ratio_flatness_test(std::span<const std::pair<double, double>> ratios,
                                    double flat_bound = kDefaultFlatnessBound);

struct SweepCase {
  CaseGroup group = CaseGroup::kStable;
  ReplicateSet replicates;
};

/// One column of the temperature-sweep table.
struct SweepColumn {
  double temperature = 0.0;
  std::size_t cases = 0;
  std::size_t flippers = 0;
  std::size_t stable = 0;
  double mean_sigma_all = 0.0;
  std::optional<double> mean_sigma_stable;
  std::optional<double> mean_sigma_flippers;
  std::optional<double> sigma_ratio;
  std::optional<double> boundary_rate_flippers;
  std::optional<double> boundary_rate_stable;
  std::optional<double> h_kappa_rank_corr;  // against the lowest temperature
  double di_aggregate = 0.0;                // over all replicates
};

/// Groups cases by temperature (ascending) and fills one column each.
std::vector<SweepColumn> temperature_sweep(std::span<const SweepCase> cases);

}  // namespace defensibility
