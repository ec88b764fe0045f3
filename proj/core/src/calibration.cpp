#include "defensibility/calibration.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <numeric>

#include "defensibility/error.hpp"
#include "defensibility/record_io.hpp"

namespace defensibility {

namespace {

/// Neumaier-compensated running sum; fixed order keeps fits bit-reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double max_abs(const Vec3& a) {
  return std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2])});
}

}  // namespace

std::string_view to_string(EntropyComponent component) {
  return component == EntropyComponent::kHw ? "h_w" : "h_kappa";
}

std::optional<EntropyComponent> parse_component(std::string_view text) {
  if (text == "h_w") return EntropyComponent::kHw;
  if (text == "h_kappa") return EntropyComponent::kHkappa;
  return std::nullopt;
}

CalibrationModel CalibrationModel::equal_weights(EntropyComponent component) {
  CalibrationModel m;
  m.component = component;
  return m;
}

std::optional<CollapseFeatures> collapse_features(const PdsVector& v,
                                                  EntropyComponent component) {
  const auto& entropy = component == EntropyComponent::kHw ? v.h_w : v.h_kappa;
  if (!v.lambda_xi || !entropy || !v.sigma_rho) return std::nullopt;
  return CollapseFeatures{*v.lambda_xi, *entropy, *v.sigma_rho};
}

double scalar_collapse(const CollapseFeatures& f, double alpha, double beta, double gamma) {
  const double z = alpha * f.lambda_xi + beta * (-f.entropy) + gamma * (-f.sigma_rho);
  return std::clamp(std::exp(z), kScalarFloor, 1.0);
}

double scalar_collapse(const PdsVector& v, const CalibrationModel& model) {
  auto f = collapse_features(v, model.component);
  if (!f) {
    throw Error(ErrorCode::kMissingComponent,
                fmt::format("collapse needs lambda_xi, {}, sigma_rho", to_string(model.component)));
  }
  return scalar_collapse(*f, model.alpha, model.beta, model.gamma);
}

std::array<double, 3> softmax3(const std::array<double, 3>& u) {
  const double m = std::max({u[0], u[1], u[2]});
  Vec3 e{std::exp(u[0] - m), std::exp(u[1] - m), std::exp(u[2] - m)};
  const double total = e[0] + e[1] + e[2];
  return {e[0] / total, e[1] / total, e[2] / total};
}

int calibration_label(Level level) { return is_defensible(level) ? 1 : 0; }

double calibration_loss(std::span<const LabeledFeatures> samples, const std::array<double, 3>& u,
                        std::array<double, 3>* grad) {
  constexpr double kEps = 1e-12;
  const Vec3 w = softmax3(u);
  CompensatedSum loss;
  CompensatedSum g[3];
  for (const auto& s : samples) {
    const Vec3 x{s.features.lambda_xi, -s.features.entropy, -s.features.sigma_rho};
    const double z = dot(w, x);
    const double raw = std::exp(z);
    double dz = 0.0;  // d loss_i / dz
    if (raw < kEps) {
      loss.add(-(s.y * std::log(kEps) + (1 - s.y) * std::log1p(-kEps)));
    } else if (raw > 1.0 - kEps) {
      loss.add(-(s.y * std::log1p(-kEps) + (1 - s.y) * std::log(kEps)));
    } else {
      const double log1m = std::log(-std::expm1(z));  // log(1 - S)
      loss.add(-(s.y * z + (1 - s.y) * log1m));
      dz = -s.y + (1 - s.y) * raw / (1.0 - raw);
    }
    if (grad && dz != 0.0) {
      for (int k = 0; k < 3; ++k) g[k].add(dz * x[k]);
    }
  }
  const double n = static_cast<double>(samples.size());
  if (grad) {
    const Vec3 gw{g[0].value() / n, g[1].value() / n, g[2].value() / n};
    const double mean = dot(w, gw);
    for (int k = 0; k < 3; ++k) (*grad)[k] = w[k] * (gw[k] - mean);
  }
  return loss.value() / n;
}

CalibrationModel fit_weights(std::span<const LabeledFeatures> samples, EntropyComponent component,
                             const FitOptions& options) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples,
                fmt::format("need at least 2 usable samples, got {}", samples.size()));
  }
  const auto positives = std::count_if(samples.begin(), samples.end(),
                                       [](const LabeledFeatures& s) { return s.y == 1; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(samples.size())) {
    throw Error(ErrorCode::kDegenerateLabels, "all labels belong to one class");
  }

  Vec3 u{0.0, 0.0, 0.0};
  Vec3 g;
  double f = calibration_loss(samples, u, &g);
  // Inverse-Hessian approximation.
  double H[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  bool converged = max_abs(g) < options.gradient_tolerance;
  std::size_t iter = 0;

  for (; !converged && iter < options.max_iterations; ++iter) {
    Vec3 d{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) d[i] -= H[i][j] * g[j];
    }
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      H[0][0] = H[1][1] = H[2][2] = 1.0;
      H[0][1] = H[0][2] = H[1][0] = H[1][2] = H[2][0] = H[2][1] = 0.0;
      d = {-g[0], -g[1], -g[2]};
      slope = dot(g, d);
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    Vec3 u_next;
    Vec3 g_next;
    double f_next = f;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      for (int i = 0; i < 3; ++i) u_next[i] = u[i] + step * d[i];
      f_next = calibration_loss(samples, u_next, &g_next);
      if (std::isfinite(f_next) && f_next <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = max_abs(g) < 1e-7;
      break;
    }

    const Vec3 s{u_next[0] - u[0], u_next[1] - u[1], u_next[2] - u[2]};
    const Vec3 y{g_next[0] - g[0], g_next[1] - g[1], g_next[2] - g[2]};
    const double sy = dot(s, y);
    const double decrease = f - f_next;
    u = u_next;
    g = g_next;
    f = f_next;

    if (sy > 1e-20) {
      if (iter == 0) {
        const double scale = sy / dot(y, y);
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) H[i][j] = (i == j) ? scale : 0.0;
        }
      }
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      Vec3 Hy{};
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) Hy[i] += H[i][j] * y[j];
      }
      const double yHy = dot(y, Hy);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          H[i][j] += -rho * (Hy[i] * s[j] + s[i] * Hy[j]) + (rho * rho * yHy + rho) * s[i] * s[j];
        }
      }
    }

    if (max_abs(g) < options.gradient_tolerance) {
      converged = true;
    } else if (decrease <= 1e-15 * std::max(1.0, std::abs(f)) && max_abs(g) < 1e-7) {
      converged = true;
    }
  }

  const Vec3 w = softmax3(u);
  CalibrationModel model;
  model.alpha = w[0];
  model.beta = w[1];
  model.gamma = w[2];
  model.component = component;
  model.loss = f;
  model.n_samples = samples.size();
  model.converged = converged;
  model.iterations = iter;
  return model;
}

CalibrationModel fit_weights(std::span<const std::pair<PdsVector, int>> samples,
                             EntropyComponent component, const FitOptions& options) {
  std::vector<LabeledFeatures> usable;
  usable.reserve(samples.size());
  std::size_t skipped = 0;
  for (const auto& [v, y] : samples) {
    if (auto f = collapse_features(v, component)) {
      usable.push_back({*f, y});
    } else {
      ++skipped;
    }
  }
  auto model = fit_weights(std::span<const LabeledFeatures>(usable), component, options);
  model.skipped = skipped;
  return model;
}

std::vector<std::size_t> equal_frequency_sizes(std::size_t n, std::size_t bins) {
  std::vector<std::size_t> sizes(bins, bins == 0 ? 0 : n / bins);
  for (std::size_t b = 0; b < (bins == 0 ? 0 : n % bins); ++b) ++sizes[b];
  return sizes;
}

EceResult compute_ece(std::span<const ScoredLabel> scores, std::size_t bins) {
  if (bins == 0 || scores.size() < bins) {
    throw Error(ErrorCode::kTooFewSamples,
                fmt::format("ECE needs at least {} samples, got {}", bins, scores.size()));
  }
  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
    return a.s < b.s || (a.s == b.s && a.y < b.y);
  });
  EceResult result;
  const double n = static_cast<double>(sorted.size());
  std::size_t offset = 0;
  CompensatedSum ece;
  for (std::size_t size : equal_frequency_sizes(sorted.size(), bins)) {
    CompensatedSum s_sum;
    CompensatedSum y_sum;
    for (std::size_t i = offset; i < offset + size; ++i) {
      s_sum.add(sorted[i].s);
      y_sum.add(sorted[i].y);
    }
    EceBin bin{size, s_sum.value() / static_cast<double>(size),
               y_sum.value() / static_cast<double>(size)};
    ece.add(static_cast<double>(size) / n * std::abs(bin.mean_s - bin.mean_y));
    result.bins.push_back(bin);
    offset += size;
  }
  result.ece = ece.value();
  return result;
}

std::string weights_to_json(const CalibrationModel& model) {
  nlohmann::ordered_json j;
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["gamma"] = model.gamma;
  j["component"] = std::string(to_string(model.component));
  j["loss"] = model.loss;
  j["n_samples"] = model.n_samples;
  return j.dump() + "\n";
}

CalibrationModel weights_from_json(std::string_view text) {
  using nlohmann::json;
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kSchemaMismatch, "weights file must hold one JSON object");
  }
  static constexpr const char* kKeys[] = {"alpha", "beta", "gamma", "component", "loss",
                                          "n_samples"};
  if (j.size() != std::size(kKeys)) {
    throw Error(ErrorCode::kSchemaMismatch,
                fmt::format("expected exactly {} keys, got {}", std::size(kKeys), j.size()));
  }
  for (const char* key : kKeys) {
    if (!j.contains(key)) throw Error(ErrorCode::kSchemaMismatch, fmt::format("missing '{}'", key));
  }
  for (const char* key : {"alpha", "beta", "gamma", "loss"}) {
    if (!j[key].is_number()) {
      throw Error(ErrorCode::kSchemaMismatch, fmt::format("'{}' must be a number", key));
    }
  }
  if (!j["component"].is_string()) throw Error(ErrorCode::kSchemaMismatch, "'component' type");
  if (!j["n_samples"].is_number_integer() || j["n_samples"].get<long long>() < 0) {
    throw Error(ErrorCode::kSchemaMismatch, "'n_samples' must be a non-negative integer");
  }
  auto component = parse_component(j["component"].get<std::string>());
  if (!component) throw Error(ErrorCode::kSchemaMismatch, "'component' must be h_w or h_kappa");

  CalibrationModel m;
  m.alpha = j["alpha"].get<double>();
  m.beta = j["beta"].get<double>();
  m.gamma = j["gamma"].get<double>();
  m.component = *component;
  m.loss = j["loss"].get<double>();
  m.n_samples = j["n_samples"].get<std::size_t>();
  if (!(m.alpha > 0 && m.beta > 0 && m.gamma > 0)) {
    throw Error(ErrorCode::kSchemaMismatch, "weights must be strictly positive");
  }
  const double sum = m.alpha + m.beta + m.gamma;
  if (!(std::abs(sum - 1.0) <= kWeightSumLoadTolerance)) {
    throw Error(ErrorCode::kSchemaMismatch, fmt::format("weights sum to {}, expected 1", sum));
  }
  return m;
}

void save_weights(const CalibrationModel& model, const std::string& path) {
  write_file_atomic(path, weights_to_json(model));
}

CalibrationModel load_weights(const std::string& path, bool fallback_to_equal) {
  if (fallback_to_equal && !std::filesystem::exists(path)) {
    auto m = CalibrationModel::equal_weights();
    m.is_fallback = true;
    return m;
  }
  return weights_from_json(read_file(path));
}

}  // namespace defensibility
