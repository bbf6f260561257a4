#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "gginf/statistics.hpp"

using namespace gginf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const ModelConfig kPoisson(Exponential{1.0}, ParetoShifted{0.5});

struct Moments {
  double mean, var;
};

Moments moments(const std::vector<double>& x) {
  double s = 0, s2 = 0;
  for (double v : x) s += v;
  const double m = s / x.size();
  for (double v : x) s2 += (v - m) * (v - m);
  return {m, s2 / (x.size() - 1)};
}

ProcessSample synthetic(double a, double b) {
  ProcessSample s;
  s.grid = {0.5, 1.0};
  s.values = {a, b};
  return s;
}

}  // namespace

TEST_CASE("hand-computed statistics") {
  const QueuePath p({0.0, 1.0, 2.5}, {3.0, 0.4, 1.0}, 2.0);
  const StatisticPlan plan(kPoisson, 2.0, {0.0, 1.0});
  CHECK_THAT(plan.normalizer(), WithinAbs(std::sqrt(1.4641016151377544), 1e-14));
  const auto v = evaluate_statistics(p, plan);
  CHECK_THAT(v.random_centered[1], WithinAbs(-0.23508834171517914, 1e-12));
  CHECK_THAT(v.nonrandom_centered[1], WithinAbs(-0.3835548422715763, 1e-12));
  // at u = 0 the only customer is the one at 0, busy with certainty
  CHECK(v.random_centered[0] == 0.0);
  CHECK_THAT(v.nonrandom_centered[0], WithinAbs(1.0 / plan.normalizer(), 1e-15));

  const auto s = compute_statistic(p, kPoisson, 2.0, {1.0}, StatisticKind::NonrandomCentered);
  CHECK(s.values == std::vector<double>{v.nonrandom_centered[1]});
  CHECK(s.kind == StatisticKind::NonrandomCentered);
  CHECK(s.t == 2.0);
}

TEST_CASE("decomposition identity holds pathwise") {
  const std::vector<double> grid{0.0, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0};
  for (const ModelConfig& m : {kPoisson, ModelConfig(LogNormal{0.0, 0.5}, LogTail{}, Dependence::comonotone()),
                               ModelConfig(Pareto{3.0, 1.0}, ParetoShifted{0.3}, Dependence::antimonotone())}) {
    for (NormalizerMode mode : {NormalizerMode::Integral, NormalizerMode::Sum}) {
      const StatisticPlan plan(m, 500.0, grid, mode);
      for (std::uint64_t r = 0; r < 50; ++r) {
        Engine eng = child_engine(3, r);
        const auto v = evaluate_statistics(generate_path(m, plan.required_horizon(), eng), plan);
        for (std::size_t i = 0; i < grid.size(); ++i) {
          REQUIRE_THAT(v.nonrandom_centered[i],
                       WithinAbs(v.decomposition_first[i] + v.decomposition_second[i] / plan.normalizer(), 1e-10));
          REQUIRE(v.decomposition_first[i] == v.random_centered[i]);
        }
        REQUIRE(v.random_centered[0] == 0.0);
      }
    }
  }
}

TEST_CASE("plan validation") {
  CHECK_THROWS_AS(StatisticPlan(kPoisson, 0.0, {1.0}), ConfigError);
  CHECK_THROWS_AS(StatisticPlan(kPoisson, 10.0, {}), ConfigError);
  CHECK_THROWS_AS(StatisticPlan(kPoisson, 10.0, {-0.5, 1.0}), ConfigError);
  CHECK_THROWS_AS(StatisticPlan(kPoisson, 10.0, {1.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(StatisticPlan(kPoisson, 10.0, {1.0, 1.0}), ConfigError);

  const StatisticPlan plan(kPoisson, 10.0, {0.5, 2.0});
  CHECK(plan.required_horizon() == 20.0);
  Engine eng(1);
  const auto short_path = generate_path(kPoisson, 15.0, eng);
  CHECK_THROWS_AS(evaluate_statistics(short_path, plan), RuntimeError);
}

TEST_CASE("sum and integral normalizers agree asymptotically") {
  for (const ModelConfig& m : {kPoisson, ModelConfig(Exponential{1.0}, ParetoShifted{0.8}),
                               ModelConfig(Exponential{1.0}, LogTail{})}) {
    const StatisticPlan a(m, 1e5, {1.0}, NormalizerMode::Integral);
    const StatisticPlan b(m, 1e5, {1.0}, NormalizerMode::Sum);
    CHECK_THAT(b.normalizer() / a.normalizer(), WithinAbs(1.0, 0.01));
  }
}

TEST_CASE("moments against the Poisson closed forms") {
  // Poisson(1) arrivals after the point at 0: Z(t) is 1{eta > t} plus a
  // Poisson variable of mean I(t), and the conditional mean has expectation
  // tail(t) + I(t). For beta = 1/2, int_0^t (1-F)^2 = log(1 + t).
  const double t = 100.0;
  const std::vector<double> grid{0.5, 1.0};
  const StatisticPlan plan(kPoisson, t, grid);
  const int reps = 20000;
  std::vector<std::vector<double>> rc(grid.size()), nc(grid.size()), ds(grid.size());
  for (int r = 0; r < reps; ++r) {
    Engine eng = child_engine(77, r);
    const auto v = evaluate_statistics(generate_path(kPoisson, plan.required_horizon(), eng), plan);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      rc[i].push_back(v.random_centered[i]);
      nc[i].push_back(v.nonrandom_centered[i]);
      ds[i].push_back(v.decomposition_second[i]);
    }
  }
  const double norm2 = plan.normalizer() * plan.normalizer();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = grid[i] * t;
    const double p = kPoisson.service().tail(s);
    const double integral = tail_integral(kPoisson, s);
    const double var_rc = (p * (1 - p) + integral - std::log1p(s)) / norm2;
    const double var_nc = (p * (1 - p) + integral) / norm2;
    INFO("u = " << grid[i]);

    const auto mrc = moments(rc[i]);
    CHECK(std::abs(mrc.mean) < 4.0 * std::sqrt(var_rc / reps));
    CHECK_THAT(mrc.var, WithinRel(var_rc, 0.05));

    const auto mnc = moments(nc[i]);
    CHECK(std::abs(mnc.mean - p / plan.normalizer()) < 4.0 * std::sqrt(var_nc / reps));
    CHECK_THAT(mnc.var, WithinRel(var_nc, 0.05));

    const auto mds = moments(ds[i]);
    CHECK(std::abs(mds.mean - p) < 4.0 * std::sqrt(mds.var / reps));
  }
}

TEST_CASE("increment moments") {
  SECTION("known Gaussian increments") {
    std::vector<ProcessSample> samples;
    Engine eng(5);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 20000; ++i) samples.push_back(synthetic(0.0, n01(eng)));
    const auto m2 = increment_moment(samples, 0.5, 1.0, 2);
    const auto m4 = increment_moment(samples, 1.0, 0.5, 4);
    CHECK(std::abs(m2.value - 1.0) < 4.0 * m2.standard_error);
    CHECK(std::abs(m4.value - 3.0) < 4.0 * m4.standard_error);
    // se of a mean of chi-square(1) terms: sqrt(2 / n)
    CHECK_THAT(m2.standard_error, WithinRel(std::sqrt(2.0 / 20000), 0.05));
  }
  SECTION("exact values") {
    std::vector<ProcessSample> samples(1000, synthetic(1.0, 3.0));
    const auto m = increment_moment(samples, 0.5, 1.0, 2);
    CHECK(m.value == 4.0);
    CHECK(m.standard_error == 0.0);
  }
  SECTION("invalid requests") {
    std::vector<ProcessSample> few(999, synthetic(0.0, 1.0));
    CHECK_THROWS_AS(increment_moment(few, 0.5, 1.0, 2), ConfigError);
    std::vector<ProcessSample> samples(1000, synthetic(0.0, 1.0));
    CHECK_THROWS_AS(increment_moment(samples, 0.5, 1.0, 3), ConfigError);
    CHECK_THROWS_AS(increment_moment(samples, 0.5, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(increment_moment(samples, 0.5, 0.75, 2), ConfigError);
  }
}
