#pragma once

// Replication engine: runs independent replications of a statistic, folds
// them in replication order and scores the result against the limit kernel.

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gginf/error.hpp"
#include "gginf/estimators.hpp"
#include "gginf/limitproc.hpp"
#include "gginf/models.hpp"
#include "gginf/pathgen.hpp"
#include "gginf/rng.hpp"
#include "gginf/statistics.hpp"

namespace gginf {

struct ExperimentConfig {
  ModelConfig model;
  double t = 1e4;
  std::vector<double> grid;
  StatisticKind kind = StatisticKind::RandomCentered;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  NormalizerMode normalizer_mode = NormalizerMode::Integral;

  void validate() const {
    if (replications < 2) throw ConfigError("experiment needs at least 2 replications");
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("experiment t must be positive");
    detail::check_grid(grid);
  }
};

struct CovarianceReport {
  std::vector<double> grid;
  Eigen::VectorXd empirical_mean;
  Eigen::MatrixXd empirical_cov;
  Eigen::MatrixXd theoretical_cov;
  Eigen::MatrixXd standard_errors;
  // Over entries with both grid points positive.
  double max_abs_error = 0.0;
  double max_error_in_se_units = 0.0;
};

// Per-entry acceptance: |empirical - theoretical| <= max(se_units * se, abs_floor).
struct ScoringRule {
  double se_units = 4.0;
  double abs_floor = 0.02;
};

inline bool passes(const CovarianceReport& r, ScoringRule rule = {}) {
  const auto n = static_cast<Eigen::Index>(r.grid.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (r.grid[i] == 0.0 || r.grid[j] == 0.0) continue;
      const double err = std::abs(r.empirical_cov(i, j) - r.theoretical_cov(i, j));
      if (err > std::max(rule.se_units * r.standard_errors(i, j), rule.abs_floor)) return false;
    }
  return true;
}

struct MarginalReport {
  double u;
  double ks_statistic;
  double ks_p_value;
  double target_variance;  // u^{1-beta}
};

struct ExperimentResult {
  CovarianceReport covariance;
  std::vector<MarginalReport> marginals;
  SampleMatrix samples;  // replication x grid
  std::vector<std::string> warnings;
};

// Score a replication matrix against the kernel of index beta.
template <class Derived>
CovarianceReport covariance_report(const Eigen::MatrixBase<Derived>& samples, std::span<const double> grid, double beta) {
  const auto est = estimate_covariance(samples);
  CovarianceReport r;
  r.grid.assign(grid.begin(), grid.end());
  r.empirical_mean = est.mean;
  r.empirical_cov = est.cov;
  r.standard_errors = est.se;
  r.theoretical_cov = CovKernel(beta).matrix(grid);
  const auto n = static_cast<Eigen::Index>(grid.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (grid[i] == 0.0 || grid[j] == 0.0) continue;
      const double err = std::abs(r.empirical_cov(i, j) - r.theoretical_cov(i, j));
      r.max_abs_error = std::max(r.max_abs_error, err);
      const double se = r.standard_errors(i, j);
      if (std::isnan(se)) {
        r.max_error_in_se_units = std::numeric_limits<double>::quiet_NaN();
      } else if (!std::isnan(r.max_error_in_se_units)) {
        const double units = se > 0.0 ? err / se : (err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        r.max_error_in_se_units = std::max(r.max_error_in_se_units, units);
      }
    }
  return r;
}

inline constexpr std::size_t kMinKsSamples = 1000;

// KS of the replication values at u against N(0, u^{1-beta}). Nothing for
// u = 0, where the target is a point mass.
inline std::optional<MarginalReport> ks_marginal(std::span<const double> values, double u, double beta) {
  if (u == 0.0) return std::nullopt;
  if (values.size() < kMinKsSamples)
    throw ConfigError("ks_marginal needs at least " + std::to_string(kMinKsSamples) + " samples");
  const double var = std::pow(u, 1.0 - beta);
  const auto ks = ks_test_gaussian(values, var);
  return MarginalReport{u, ks.statistic, ks.p_value, var};
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace detail {

// Calls fn(i) for every i in [0, n) on `threads` workers. Rethrows the error
// of the lowest failing index, prefixed with that index.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, const Fn& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      {
        std::lock_guard lock(err_mutex);
        if (err_index < i) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!err) return;
  const std::string where = "replication " + std::to_string(err_index) + ": ";
  try {
    std::rethrow_exception(err);
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const std::exception& e) {
    throw RuntimeError(where + e.what());
  }
}

inline std::string format_order(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace detail

// Warnings about configurations that run but sit outside the regime where
// the limit theorem is known to hold.
inline std::vector<std::string> experiment_warnings(const ExperimentConfig& cfg) {
  std::vector<std::string> w;
  if (cfg.kind == StatisticKind::NonrandomCentered && !cfg.model.nonrandom_centering_valid())
    w.push_back("Theorem 2 hypothesis unmet: need r > " + detail::format_order(cfg.model.required_moment_order()) +
                " (interarrival moment order is " + detail::format_order(cfg.model.interarrival().moment_order()) +
                ")");
  return w;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = default_threads()) {
  cfg.validate();
  const StatisticPlan plan(cfg.model, cfg.t, cfg.grid, cfg.normalizer_mode);
  const double horizon = std::max(plan.required_horizon(), 1e-9 * cfg.t);

  ExperimentResult res;
  res.warnings = experiment_warnings(cfg);
  res.samples.resize(static_cast<Eigen::Index>(cfg.replications), static_cast<Eigen::Index>(cfg.grid.size()));
  detail::parallel_for(cfg.replications, threads, [&](std::size_t r) {
    Engine eng = child_engine(cfg.seed, r);
    const QueuePath path = generate_path(cfg.model, horizon, eng);
    const auto values = evaluate_statistics(path, plan).of(cfg.kind);
    for (std::size_t i = 0; i < values.size(); ++i)
      res.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = values[i];
  });

  const double beta = cfg.model.beta();
  res.covariance = covariance_report(res.samples, cfg.grid, beta);
  if (cfg.replications >= kMinKsSamples) {
    std::vector<double> col(cfg.replications);
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      for (std::size_t r = 0; r < cfg.replications; ++r)
        col[r] = res.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
      if (auto m = ks_marginal(col, cfg.grid[i], beta)) res.marginals.push_back(*m);
    }
  }
  return res;
}

struct DependenceRun {
  Dependence dependence;
  ExperimentResult result;
};

// One experiment per coupling, all on the base seed so they share streams.
inline std::vector<DependenceRun> compare_dependence(const ExperimentConfig& base, std::span<const Dependence> couplings,
                                                     unsigned threads = default_threads()) {
  if (couplings.empty()) throw ConfigError("compare_dependence needs at least one coupling");
  std::vector<DependenceRun> out;
  for (const auto& d : couplings) {
    ExperimentConfig cfg = base;
    cfg.model = base.model.with_dependence(d);
    out.push_back({d, run_experiment(cfg, threads)});
  }
  return out;
}

struct RenewalReport {
  double t;
  std::size_t replications;
  double mean_count;
  double var_count;
  double ratio;   // Var nu(t) / t
  double target;  // sigma^2 / mu^3
  double relative_error;
};

// Variance of nu(t) against the renewal CLT constant sigma^2 / mu^3.
inline RenewalReport renewal_clt_diagnostic(const ModelConfig& model, double t, std::size_t replications,
                                            std::uint64_t seed, unsigned threads = default_threads()) {
  if (!std::isfinite(model.sigma2())) throw ConfigError("renewal diagnostic needs a finite interarrival variance");
  if (!(t > 0.0)) throw ConfigError("renewal diagnostic needs t > 0");
  if (replications < 2) throw ConfigError("renewal diagnostic needs at least 2 replications");
  const std::size_t cap = path_length_cap(model, t);
  std::vector<double> counts(replications);
  detail::parallel_for(replications, threads, [&](std::size_t r) {
    Engine eng = child_engine(seed, r);
    std::size_t nu = 0;
    double s = 0.0;
    while (s <= t) {
      if (++nu > cap) throw RuntimeError("path length cap exceeded");
      s += sample_pair(model, eng).xi;
    }
    counts[r] = static_cast<double>(nu);
  });
  KahanSum sum;
  for (double c : counts) sum += c;
  const double n = static_cast<double>(replications);
  const double mean = sum.value() / n;
  KahanSum ss;
  for (double c : counts) ss += (c - mean) * (c - mean);
  const double var = ss.value() / (n - 1.0);
  const double mu = model.mu();
  const double target = model.sigma2() / (mu * mu * mu);
  const double ratio = var / t;
  return {t, replications, mean, var, ratio, target, target > 0.0 ? (ratio - target) / target : ratio};
}

}  // namespace gginf
