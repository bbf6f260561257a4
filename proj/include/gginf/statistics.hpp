#pragma once

// Centered, normalized busy-server statistics on a u-grid for one
// replication, and the two summands of the random/nonrandom centering
// decomposition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gginf/error.hpp"
#include "gginf/models.hpp"
#include "gginf/pathgen.hpp"

namespace gginf {

enum class StatisticKind {
  RandomCentered,       // (Z(ut) - sum (1-F(ut-S_k))) / norm
  NonrandomCentered,    // (Z(ut) - mu^-1 int_0^ut (1-F)) / norm
  DecompositionFirst,   // random-centered part, normalized; equals RandomCentered
  DecompositionSecond,  // sum (1-F(ut-S_k)) - mu^-1 int_0^ut (1-F), not normalized
};

enum class NormalizerMode { Integral, Sum };

inline std::string to_string(StatisticKind k) {
  switch (k) {
    case StatisticKind::RandomCentered: return "random_centered";
    case StatisticKind::NonrandomCentered: return "nonrandom_centered";
    case StatisticKind::DecompositionFirst: return "decomposition_first";
    case StatisticKind::DecompositionSecond: return "decomposition_second";
  }
  return "?";
}

inline std::string to_string(NormalizerMode m) { return m == NormalizerMode::Integral ? "integral" : "sum"; }

struct ProcessSample {
  std::vector<double> grid;
  std::vector<double> values;
  double t = 0.0;
  StatisticKind kind = StatisticKind::RandomCentered;
  NormalizerMode normalizer_mode = NormalizerMode::Integral;
};

// Everything about the statistic that does not depend on the path:
// evaluation times, normalizer and deterministic centering. Build once per
// experiment; the LogTail tail integral is a quadrature.
class StatisticPlan {
 public:
  StatisticPlan(const ModelConfig& model, double t, std::vector<double> grid,
                NormalizerMode mode = NormalizerMode::Integral)
      : model_(model), t_(t), grid_(std::move(grid)), mode_(mode) {
    if (!(t_ > 0.0) || !std::isfinite(t_)) throw ConfigError("statistic scale t must be positive");
    if (grid_.empty()) throw ConfigError("u-grid must not be empty");
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!(grid_[i] >= 0.0) || !std::isfinite(grid_[i])) throw ConfigError("u-grid values must be nonnegative");
      if (i > 0 && !(grid_[i] > grid_[i - 1])) throw ConfigError("u-grid must be strictly increasing");
    }
    const double scale = mode_ == NormalizerMode::Integral ? tail_integral(model_, t_) : normalizer_sum(model_, t_);
    normalizer_ = std::sqrt(scale / model_.mu());
    if (!(normalizer_ > 0.0) || !std::isfinite(normalizer_)) throw RuntimeError("nonpositive normalizer");
    times_.reserve(grid_.size());
    centering_.reserve(grid_.size());
    for (double u : grid_) {
      times_.push_back(u * t_);
      centering_.push_back(tail_integral(model_, u * t_) / model_.mu());
    }
  }

  const ModelConfig& model() const noexcept { return model_; }
  double t() const noexcept { return t_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& times() const noexcept { return times_; }
  NormalizerMode mode() const noexcept { return mode_; }
  double normalizer() const noexcept { return normalizer_; }
  // mu^-1 * int_0^{u t} (1 - F)
  const std::vector<double>& centering() const noexcept { return centering_; }
  double required_horizon() const noexcept { return times_.back(); }

 private:
  ModelConfig model_;
  double t_;
  std::vector<double> grid_;
  NormalizerMode mode_;
  double normalizer_ = 0.0;
  std::vector<double> times_;
  std::vector<double> centering_;
};

// All four statistic kinds for one path.
struct StatisticValues {
  std::vector<double> random_centered;
  std::vector<double> nonrandom_centered;
  std::vector<double> decomposition_first;
  std::vector<double> decomposition_second;

  const std::vector<double>& of(StatisticKind k) const {
    switch (k) {
      case StatisticKind::RandomCentered: return random_centered;
      case StatisticKind::NonrandomCentered: return nonrandom_centered;
      case StatisticKind::DecompositionFirst: return decomposition_first;
      case StatisticKind::DecompositionSecond: return decomposition_second;
    }
    return random_centered;
  }
};

inline StatisticValues evaluate_statistics(const QueuePath& path, const StatisticPlan& plan) {
  if (path.horizon() < plan.required_horizon())
    throw RuntimeError("path horizon " + std::to_string(path.horizon()) + " shorter than t * max(u) = " +
                       std::to_string(plan.required_horizon()));
  const auto counts = evaluate_counts(path, plan.model(), plan.times());
  const double norm = plan.normalizer();
  StatisticValues v;
  const std::size_t n = counts.size();
  v.random_centered.resize(n);
  v.nonrandom_centered.resize(n);
  v.decomposition_second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = static_cast<double>(counts[i].busy);
    const double cm = counts[i].conditional_mean;
    const double c = plan.centering()[i];
    v.random_centered[i] = (z - cm) / norm;
    v.nonrandom_centered[i] = (z - c) / norm;
    v.decomposition_second[i] = cm - c;
  }
  v.decomposition_first = v.random_centered;
  return v;
}

inline ProcessSample compute_statistic(const QueuePath& path, const StatisticPlan& plan, StatisticKind kind) {
  ProcessSample s;
  s.grid = plan.grid();
  s.values = evaluate_statistics(path, plan).of(kind);
  s.t = plan.t();
  s.kind = kind;
  s.normalizer_mode = plan.mode();
  return s;
}

inline ProcessSample compute_statistic(const QueuePath& path, const ModelConfig& model, double t,
                                       std::vector<double> grid, StatisticKind kind,
                                       NormalizerMode mode = NormalizerMode::Integral) {
  return compute_statistic(path, StatisticPlan(model, t, std::move(grid), mode), kind);
}

struct MomentEstimate {
  double value;
  double standard_error;  // jackknife
};

// Monte Carlo estimate of E|X(u) - X(v)|^order over replications.
inline MomentEstimate increment_moment(std::span<const ProcessSample> samples, double u, double v, int order) {
  constexpr std::size_t kMinSamples = 1000;
  if (samples.size() < kMinSamples)
    throw ConfigError("increment_moment needs at least " + std::to_string(kMinSamples) + " samples, got " +
                      std::to_string(samples.size()));
  if (order <= 0 || order % 2 != 0) throw ConfigError("increment_moment order must be a positive even integer");

  auto index_of = [](const ProcessSample& s, double x) {
    const auto it = std::find(s.grid.begin(), s.grid.end(), x);
    if (it == s.grid.end()) throw ConfigError("grid point " + std::to_string(x) + " missing from sample");
    return static_cast<std::size_t>(it - s.grid.begin());
  };

  const std::size_t n = samples.size();
  std::vector<double> terms(n);
  KahanSum total;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& s = samples[r];
    terms[r] = std::pow(std::abs(s.values[index_of(s, u)] - s.values[index_of(s, v)]), order);
    total += terms[r];
  }
  const double mean = total.value() / static_cast<double>(n);

  // Leave-one-out means; for a plain mean this reproduces s / sqrt(n).
  double ss = 0.0;
  for (double x : terms) {
    const double loo = (total.value() - x) / static_cast<double>(n - 1);
    ss += (loo - mean) * (loo - mean);
  }
  const double se = std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
  return {mean, se};
}

}  // namespace gginf
