#pragma once

// Empirical covariance with leave-one-out jackknife standard errors, and the
// one-sample Kolmogorov-Smirnov test against a centered Gaussian.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gginf/error.hpp"
#include "gginf/numeric.hpp"

namespace gginf {

struct CovarianceEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased (divisor M - 1)
  Eigen::MatrixXd se;   // jackknife standard errors of cov entries
};

// `samples` holds one replication per row. Standard errors are NaN below
// three replications.
template <class Derived>
CovarianceEstimate estimate_covariance(const Eigen::MatrixBase<Derived>& samples) {
  const Eigen::Index m = samples.rows(), p = samples.cols();
  if (m < 2) throw ConfigError("covariance estimation needs at least 2 replications");
  const double md = static_cast<double>(m);

  CovarianceEstimate est;
  est.mean.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    KahanSum s;
    for (Eigen::Index r = 0; r < m; ++r) s += samples(r, j);
    est.mean(j) = s.value() / md;
  }
  const Eigen::MatrixXd centered = samples.template cast<double>().rowwise() - est.mean.transpose();

  est.cov.resize(p, p);
  est.se.resize(p, p);
  std::vector<double> loo(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      KahanSum sx, sy, sxy;
      for (Eigen::Index r = 0; r < m; ++r) {
        sx += centered(r, i);
        sy += centered(r, j);
        sxy += centered(r, i) * centered(r, j);
      }
      const double full = (sxy.value() - sx.value() * sy.value() / md) / (md - 1.0);
      est.cov(i, j) = est.cov(j, i) = full;
      if (m < 3) {
        est.se(i, j) = est.se(j, i) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      // Leave replication r out: sums lose its terms, divisor drops to M - 2.
      double loo_mean = 0.0;
      for (Eigen::Index r = 0; r < m; ++r) {
        const double x = centered(r, i), y = centered(r, j);
        const double n1 = md - 1.0;
        const double v = ((sxy.value() - x * y) - (sx.value() - x) * (sy.value() - y) / n1) / (n1 - 1.0);
        loo[static_cast<std::size_t>(r)] = v;
        loo_mean += v;
      }
      loo_mean /= md;
      double ss = 0.0;
      for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
      const double se = std::sqrt((md - 1.0) / md * ss);
      est.se(i, j) = est.se(j, i) = se;
    }
  }
  return est;
}

// Asymptotic Kolmogorov distribution: P{sup|B| > lambda}.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic;
  double p_value;
};

// Two-sided one-sample KS test against a continuous cdf. p-value from the
// asymptotic law with Stephens' small-sample correction.
template <class Cdf>
KsResult ks_test(std::span<const double> sample, const Cdf& cdf) {
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  if (x.empty() || x.front() == x.back()) throw RuntimeError("degenerate sample (zero variance) in KS test");
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

// KS test against N(0, variance).
inline KsResult ks_test_gaussian(std::span<const double> sample, double variance) {
  if (!(variance > 0.0)) throw ConfigError("KS target variance must be positive");
  const double scale = std::sqrt(2.0 * variance);
  return ks_test(sample, [scale](double x) { return 0.5 * std::erfc(-x / scale); });
}

}  // namespace gginf
