#pragma once

// Joint law of (interarrival time, service time): marginal families, the
// dependence coupling between them, and exact tail/quantile/tail-integral
// evaluation for the service law.

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include "gginf/error.hpp"
#include "gginf/numeric.hpp"
#include "gginf/rng.hpp"

namespace gginf {

// ---------------------------------------------------------------------------
// Interarrival law
// ---------------------------------------------------------------------------

struct Exponential {
  double rate;
};
// P{xi > x} = (scale / x)^shape for x >= scale.
struct Pareto {
  double shape;
  double scale;
};
struct LogNormal {
  double meanlog;
  double sdlog;
};
struct Deterministic {
  double value;
};

class InterarrivalLaw {
 public:
  using Family = std::variant<Exponential, Pareto, LogNormal, Deterministic>;

  InterarrivalLaw(Family family) : family_(family) { validate(); }  // NOLINT(google-explicit-constructor)
  template <class T>
    requires std::is_constructible_v<Family, T>
  InterarrivalLaw(T f) : InterarrivalLaw(Family(f)) {}  // NOLINT(google-explicit-constructor)

  const Family& family() const noexcept { return family_; }

  std::string name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Exponential>) return "exponential";
          else if constexpr (std::is_same_v<T, Pareto>) return "pareto";
          else if constexpr (std::is_same_v<T, LogNormal>) return "lognormal";
          else return "deterministic";
        },
        family_);
  }

  double mean() const {
    return std::visit(
        [](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Exponential>) return 1.0 / f.rate;
          else if constexpr (std::is_same_v<T, Pareto>) return f.shape * f.scale / (f.shape - 1.0);
          else if constexpr (std::is_same_v<T, LogNormal>)
            return std::exp(f.meanlog + 0.5 * f.sdlog * f.sdlog);
          else return f.value;
        },
        family_);
  }

  // Infinite when the second moment is.
  double variance() const {
    return std::visit(
        [](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            return 1.0 / (f.rate * f.rate);
          } else if constexpr (std::is_same_v<T, Pareto>) {
            if (f.shape <= 2.0) return std::numeric_limits<double>::infinity();
            const double a = f.shape;
            return f.scale * f.scale * a / ((a - 1.0) * (a - 1.0) * (a - 2.0));
          } else if constexpr (std::is_same_v<T, LogNormal>) {
            const double s2 = f.sdlog * f.sdlog;
            return std::expm1(s2) * std::exp(2.0 * f.meanlog + s2);
          } else {
            return 0.0;
          }
        },
        family_);
  }

  // sup{r : E xi^r < infinity}.
  double moment_order() const {
    if (const auto* p = std::get_if<Pareto>(&family_)) return p->shape;
    return std::numeric_limits<double>::infinity();
  }

  double cdf(double x) const {
    return std::visit(
        [x](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            return x <= 0.0 ? 0.0 : -std::expm1(-f.rate * x);
          } else if constexpr (std::is_same_v<T, Pareto>) {
            return x <= f.scale ? 0.0 : -std::expm1(f.shape * std::log(f.scale / x));
          } else if constexpr (std::is_same_v<T, LogNormal>) {
            if (x <= 0.0) return 0.0;
            return 0.5 * std::erfc(-(std::log(x) - f.meanlog) / (f.sdlog * std::numbers::sqrt2));
          } else {
            return x < f.value ? 0.0 : 1.0;
          }
        },
        family_);
  }

  // Inverse cdf for u in (0, 1).
  double quantile(double u) const {
    return std::visit(
        [u](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            return -std::log1p(-u) / f.rate;
          } else if constexpr (std::is_same_v<T, Pareto>) {
            return f.scale * std::exp(-std::log1p(-u) / f.shape);
          } else if constexpr (std::is_same_v<T, LogNormal>) {
            const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
            return std::exp(f.meanlog + f.sdlog * z);
          } else {
            return f.value;
          }
        },
        family_);
  }

 private:
  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            if (!positive(f.rate)) throw ConfigError("exponential rate must be positive");
          } else if constexpr (std::is_same_v<T, Pareto>) {
            if (!(std::isfinite(f.shape) && f.shape > 1.0))
              throw ConfigError("pareto shape must exceed 1 (finite mean)");
            if (!positive(f.scale)) throw ConfigError("pareto scale must be positive");
          } else if constexpr (std::is_same_v<T, LogNormal>) {
            if (!std::isfinite(f.meanlog)) throw ConfigError("lognormal meanlog must be finite");
            if (!positive(f.sdlog)) throw ConfigError("lognormal sdlog must be positive");
          } else {
            if (!positive(f.value)) throw ConfigError("deterministic value must be positive");
          }
        },
        family_);
  }

  Family family_;
};

// ---------------------------------------------------------------------------
// Service law
// ---------------------------------------------------------------------------

// 1 - F(t) = (1 + t)^-beta, beta in (0, 1).
struct ParetoShifted {
  double beta;
};
// 1 - F(t) = 1 / log(e + t). Slowly varying tail, index 0.
struct LogTail {};

class ServiceLaw {
 public:
  using Family = std::variant<ParetoShifted, LogTail>;

  ServiceLaw(Family family)  // NOLINT(google-explicit-constructor)
      : family_(family), cache_(std::make_shared<IntegralCache>()) {
    if (const auto* p = std::get_if<ParetoShifted>(&family_)) {
      if (!(p->beta > 0.0 && p->beta < 1.0))
        throw ConfigError("pareto_shifted beta must lie in (0, 1); use log_tail for beta = 0");
    }
  }
  template <class T>
    requires std::is_constructible_v<Family, T>
  ServiceLaw(T f) : ServiceLaw(Family(f)) {}  // NOLINT(google-explicit-constructor)

  const Family& family() const noexcept { return family_; }
  bool is_log_tail() const noexcept { return std::holds_alternative<LogTail>(family_); }
  std::string name() const { return is_log_tail() ? "log_tail" : "pareto_shifted"; }

  double beta() const noexcept {
    if (const auto* p = std::get_if<ParetoShifted>(&family_)) return p->beta;
    return 0.0;
  }

  // P{eta > t}; 1 for t <= 0.
  double tail(double t) const noexcept {
    if (t <= 0.0) return 1.0;
    if (const auto* p = std::get_if<ParetoShifted>(&family_))
      return std::exp(-p->beta * std::log1p(t));
    return 1.0 / (1.0 + std::log1p(t / std::numbers::e));
  }

  double cdf(double t) const noexcept { return 1.0 - tail(t); }

  // Inverse cdf for u in (0, 1). LogTail quantiles beyond the double range
  // are clamped to the largest finite double.
  double quantile(double u) const noexcept {
    if (const auto* p = std::get_if<ParetoShifted>(&family_))
      return std::expm1(-std::log1p(-u) / p->beta);
    // 1 / log(e + q) = 1 - u  <=>  q = e * (exp(u / (1 - u)) - 1)
    const double q = std::numbers::e * std::expm1(u / (1.0 - u));
    return std::isfinite(q) ? q : std::numeric_limits<double>::max();
  }

  // Integral of the tail over [0, t]. Closed form for ParetoShifted; adaptive
  // Simpson (absolute tolerance 1e-10, memoized per t) for LogTail.
  double tail_integral(double t) const {
    if (t <= 0.0) return 0.0;
    if (const auto* p = std::get_if<ParetoShifted>(&family_)) {
      const double a = 1.0 - p->beta;
      return std::expm1(a * std::log1p(t)) / a;
    }
    return cache_->get(t, [this](double x) { return log_tail_integral(x); });
  }

  static constexpr double kQuadratureTolerance = 1e-10;

 private:
  class IntegralCache {
   public:
    template <class F>
    double get(double t, const F& compute) {
      {
        std::lock_guard lock(mutex_);
        if (auto it = values_.find(t); it != values_.end()) return it->second;
      }
      const double v = compute(t);
      std::lock_guard lock(mutex_);
      values_.emplace(t, v);
      return v;
    }

   private:
    std::mutex mutex_;
    std::map<double, double> values_;
  };

  double log_tail_integral(double t) const {
    // Dyadic pieces keep each Simpson panel on a range where the integrand is
    // close to polynomial; the tolerance is shared out by piece length.
    auto f = [this](double y) { return tail(y); };
    KahanSum total;
    double lo = 0.0, hi = std::min(1.0, t);
    while (lo < t) {
      total += adaptive_simpson(f, lo, hi, kQuadratureTolerance * (hi - lo) / t);
      lo = hi;
      hi = std::min(2.0 * hi, t);
    }
    return total.value();
  }

  Family family_;
  std::shared_ptr<IntegralCache> cache_;
};

// ---------------------------------------------------------------------------
// Dependence coupling
// ---------------------------------------------------------------------------

enum class Coupling { Independent, Comonotone, Antimonotone, CommonShock };

struct Dependence {
  Coupling coupling = Coupling::Independent;
  double theta = 0.0;  // CommonShock only

  static Dependence independent() { return {Coupling::Independent, 0.0}; }
  static Dependence comonotone() { return {Coupling::Comonotone, 0.0}; }
  static Dependence antimonotone() { return {Coupling::Antimonotone, 0.0}; }
  static Dependence common_shock(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("common_shock theta must lie in [0, 1]");
    return {Coupling::CommonShock, theta};
  }
};

inline std::string to_string(Coupling c) {
  switch (c) {
    case Coupling::Independent: return "independent";
    case Coupling::Comonotone: return "comonotone";
    case Coupling::Antimonotone: return "antimonotone";
    case Coupling::CommonShock: return "common_shock";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

class ModelConfig {
 public:
  ModelConfig(InterarrivalLaw interarrival, ServiceLaw service,
              Dependence dependence = Dependence::independent())
      : interarrival_(interarrival), service_(std::move(service)), dependence_(dependence) {
    if (dependence_.coupling == Coupling::CommonShock)
      dependence_ = Dependence::common_shock(dependence_.theta);  // validates theta
  }

  const InterarrivalLaw& interarrival() const noexcept { return interarrival_; }
  const ServiceLaw& service() const noexcept { return service_; }
  const Dependence& dependence() const noexcept { return dependence_; }

  double mu() const { return interarrival_.mean(); }
  double sigma2() const { return interarrival_.variance(); }
  double beta() const noexcept { return service_.beta(); }

  // Moment order that the nonrandom-centering limit theorem requires the
  // interarrival law to exceed: 2 / (1 - beta).
  double required_moment_order() const noexcept { return 2.0 / (1.0 - beta()); }
  bool nonrandom_centering_valid() const { return interarrival_.moment_order() > required_moment_order(); }

  ModelConfig with_dependence(Dependence d) const { return ModelConfig(interarrival_, service_, d); }

 private:
  InterarrivalLaw interarrival_;
  ServiceLaw service_;
  Dependence dependence_;
};

struct ArrivalPair {
  double xi;   // interarrival time
  double eta;  // service time
};

// One draw of (xi, eta). Every coupling consumes exactly three uniforms, so
// runs that differ only in coupling share their random streams.
inline ArrivalPair sample_pair(const ModelConfig& model, Engine& eng) {
  const double u1 = open_uniform(eng);
  const double u2 = open_uniform(eng);
  const double u3 = open_uniform(eng);
  const auto& ia = model.interarrival();
  const auto& sv = model.service();
  switch (model.dependence().coupling) {
    case Coupling::Independent:
      return {ia.quantile(u1), sv.quantile(u2)};
    case Coupling::Comonotone:
      return {ia.quantile(u1), sv.quantile(u1)};
    case Coupling::Antimonotone:
      return {ia.quantile(1.0 - u1), sv.quantile(u1)};
    case Coupling::CommonShock:
      return {ia.quantile(u1), sv.quantile(u3 < model.dependence().theta ? u1 : u2)};
  }
  return {};
}

inline double tail(const ModelConfig& model, double t) { return model.service().tail(t); }

inline double tail_integral(const ModelConfig& model, double t) {
  if (t < 0.0) throw ConfigError("tail_integral: t must be nonnegative");
  return model.service().tail_integral(t);
}

// a(t) = sum_{k=0}^{floor(t)+1} (1 - F(k)).
inline double normalizer_sum(const ModelConfig& model, double t) {
  if (t < 0.0) throw ConfigError("normalizer_sum: t must be nonnegative");
  const auto last = static_cast<long long>(std::floor(t)) + 1;
  KahanSum s;
  for (long long k = 0; k <= last; ++k) s += model.service().tail(static_cast<double>(k));
  return s.value();
}

}  // namespace gginf
