#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "defensibility/pds.hpp"

namespace defensibility {

/// Which entropy component fills the middle slot of the scalar collapse.
enum class EntropyComponent { kHw, kHkappa };

std::string_view to_string(EntropyComponent component);  // "h_w" / "h_kappa"
std::optional<EntropyComponent> parse_component(std::string_view text);

struct CalibrationModel {
  double alpha = 1.0 / 3.0;  // lambda_xi
  double beta = 1.0 / 3.0;   // entropy component
  double gamma = 1.0 / 3.0;  // sigma_rho
  EntropyComponent component = EntropyComponent::kHw;
  double loss = 0.0;  // mean binary cross-entropy at the optimum
  std::size_t n_samples = 0;

  // Not serialized.
  bool is_fallback = false;
  bool converged = true;
  std::size_t iterations = 0;
  std::size_t skipped = 0;  // samples excluded for missing components

  static CalibrationModel equal_weights(EntropyComponent component = EntropyComponent::kHw);
};

/// The three collapse inputs (lambda_xi, H, sigma_rho) for the selected
/// component, or nullopt when any is missing.
struct CollapseFeatures {
  double lambda_xi = 0.0;
  double entropy = 0.0;
  double sigma_rho = 0.0;
};

std::optional<CollapseFeatures> collapse_features(const PdsVector& v, EntropyComponent component);

inline constexpr double kScalarFloor = 1e-12;

/// S = exp(alpha*lambda_xi - beta*H - gamma*sigma_rho), clamped to
/// [1e-12, 1]. Throws Error(kMissingComponent).
double scalar_collapse(const PdsVector& v, const CalibrationModel& model);
double scalar_collapse(const CollapseFeatures& f, double alpha, double beta, double gamma);

/// Softmax of an unconstrained vector; always positive and summing to 1.
std::array<double, 3> softmax3(const std::array<double, 3>& u);

struct LabeledFeatures {
  CollapseFeatures features;
  int y = 0;  // 1 iff the audited level is L1 or L2
};

int calibration_label(Level level);

/// Mean binary cross-entropy of the collapse at weights softmax(u). S is
/// clamped to [1e-12, 1 - 1e-12] inside the loss. When `grad` is non-null
/// it receives the analytic gradient with respect to u.
double calibration_loss(std::span<const LabeledFeatures> samples, const std::array<double, 3>& u,
                        std::array<double, 3>* grad = nullptr);

struct FitOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-10;
};

/// Maximum-likelihood weights by quasi-Newton (BFGS) on u, starting from
/// u = 0. Samples missing the selected components are skipped and counted.
/// Throws Error(kDegenerateLabels) / Error(kTooFewSamples). Hitting the
/// iteration cap returns the best iterate with converged = false.
CalibrationModel fit_weights(std::span<const std::pair<PdsVector, int>> samples,
                             EntropyComponent component, const FitOptions& options = {});
CalibrationModel fit_weights(std::span<const LabeledFeatures> samples, EntropyComponent component,
                             const FitOptions& options = {});

struct ScoredLabel {
  double s = 0.0;
  int y = 0;
};

struct EceBin {
  std::size_t count = 0;
  double mean_s = 0.0;
  double mean_y = 0.0;
};

struct EceResult {
  double ece = 0.0;
  std::vector<EceBin> bins;
};

/// Equal-frequency ECE: sort by (S, y), split into `bins` contiguous groups
/// whose sizes differ by at most one (larger groups first), and sum
/// (n_b / N) |mean S_b - mean y_b|. Throws Error(kTooFewSamples).
EceResult compute_ece(std::span<const ScoredLabel> scores, std::size_t bins = 10);

/// Bin sizes used by compute_ece for n samples.
std::vector<std::size_t> equal_frequency_sizes(std::size_t n, std::size_t bins);

/// Weights file: one JSON object with keys alpha, beta, gamma, component,
/// loss, n_samples.
std::string weights_to_json(const CalibrationModel& model);
CalibrationModel weights_from_json(std::string_view text);

void save_weights(const CalibrationModel& model, const std::string& path);

/// Throws Error(kIoFailure) for a missing file unless `fallback_to_equal`,
/// in which case equal weights flagged is_fallback are returned.
CalibrationModel load_weights(const std::string& path, bool fallback_to_equal = false);

/// Weight sums within this distance of 1 are accepted on load (some
/// weight files are rounded to four decimals).
inline constexpr double kWeightSumLoadTolerance = 1e-3;

}  // namespace defensibility
