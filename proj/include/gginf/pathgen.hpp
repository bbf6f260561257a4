#pragma once

// Queue trajectories: arrival epochs of the zero-delayed random walk paired
// with the service times of the customers arriving there, plus exact
// evaluation of the busy-server count Z, the departure count K and the
// renewal count nu at arbitrary times.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gginf/error.hpp"
#include "gginf/models.hpp"
#include "gginf/numeric.hpp"
#include "gginf/rng.hpp"

namespace gginf {

class QueuePath {
 public:
  // Validates the path invariants: arrivals start at 0 and strictly
  // increase, services are positive, every arrival up to the horizon is
  // present and the last one lies beyond it.
  QueuePath(std::vector<double> arrivals, std::vector<double> services, double horizon)
      : arrivals_(std::move(arrivals)), services_(std::move(services)), horizon_(horizon) {
    if (!(horizon_ > 0.0)) throw ConfigError("path horizon must be positive");
    if (arrivals_.empty() || arrivals_.size() != services_.size())
      throw ConfigError("path needs equally many arrivals and services");
    if (arrivals_.front() != 0.0) throw ConfigError("first arrival must be exactly 0");
    for (std::size_t k = 1; k < arrivals_.size(); ++k)
      if (!(arrivals_[k] > arrivals_[k - 1])) throw ConfigError("arrivals must strictly increase");
    for (double s : services_)
      if (!(s > 0.0)) throw ConfigError("service times must be positive");
    if (!(arrivals_.back() > horizon_)) throw ConfigError("last arrival must exceed the horizon");
    if (arrivals_.size() > 1 && arrivals_[arrivals_.size() - 2] > horizon_)
      throw ConfigError("path holds more than one arrival beyond the horizon");

    departures_.resize(arrivals_.size());
    for (std::size_t k = 0; k < arrivals_.size(); ++k) departures_[k] = arrivals_[k] + services_[k];
    std::sort(departures_.begin(), departures_.end());
  }

  std::span<const double> arrivals() const noexcept { return arrivals_; }
  std::span<const double> services() const noexcept { return services_; }
  // Departure epochs S_k + eta_{k+1}, ascending.
  std::span<const double> sorted_departures() const noexcept { return departures_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return arrivals_.size(); }

 private:
  std::vector<double> arrivals_;
  std::vector<double> services_;
  std::vector<double> departures_;
  double horizon_;
};

inline std::size_t path_length_cap(const ModelConfig& model, double horizon) {
  return static_cast<std::size_t>(10.0 * horizon / model.mu()) + 1'000'000;
}

inline QueuePath generate_path(const ModelConfig& model, double horizon, Engine& eng) {
  if (!(horizon > 0.0)) throw ConfigError("generate_path: horizon must be positive");
  const std::size_t cap = path_length_cap(model, horizon);
  std::vector<double> arrivals, services;
  arrivals.reserve(static_cast<std::size_t>(horizon / model.mu() * 1.1) + 16);
  services.reserve(arrivals.capacity());
  double s = 0.0;
  for (;;) {
    if (arrivals.size() >= cap)
      throw RuntimeError("path length cap of " + std::to_string(cap) +
                         " arrivals exceeded; check the interarrival mean");
    const ArrivalPair p = sample_pair(model, eng);
    arrivals.push_back(s);
    services.push_back(p.eta);
    if (s > horizon) break;
    s += p.xi;
  }
  return QueuePath(std::move(arrivals), std::move(services), horizon);
}

struct CountSnapshot {
  double t;
  std::int64_t busy;        // Z(t): customers in service
  std::int64_t departed;    // K(t): customers whose service has ended
  std::int64_t arrived;     // nu(t): first index with S_k > t
  double conditional_mean;  // sum over S_k <= t of 1 - F(t - S_k)
};

namespace detail {

inline void check_times(const QueuePath& path, std::span<const double> times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw ConfigError("evaluation times must be nonnegative");
    if (i > 0 && times[i] < times[i - 1]) throw ConfigError("evaluation times must be sorted");
  }
  if (!times.empty() && times.back() > path.horizon())
    throw RuntimeError("evaluation time " + std::to_string(times.back()) + " beyond path horizon " +
                       std::to_string(path.horizon()));
}

}  // namespace detail

// Counts at each of the sorted `times`, by merged sweeps over arrivals and
// sorted departures. The conditional mean costs one tail evaluation per
// arrival at or before each time.
inline std::vector<CountSnapshot> evaluate_counts(const QueuePath& path, const ModelConfig& model,
                                                  std::span<const double> times) {
  detail::check_times(path, times);
  const auto arrivals = path.arrivals();
  const auto departures = path.sorted_departures();
  const auto& service = model.service();

  std::vector<CountSnapshot> out;
  out.reserve(times.size());
  std::size_t na = 0, nd = 0;
  for (double t : times) {
    while (na < arrivals.size() && arrivals[na] <= t) ++na;
    while (nd < departures.size() && departures[nd] <= t) ++nd;
    KahanSum cm;
    for (std::size_t k = 0; k < na; ++k) cm += service.tail(t - arrivals[k]);
    const auto nu = static_cast<std::int64_t>(na);
    const auto kk = static_cast<std::int64_t>(nd);
    out.push_back({t, nu - kk, kk, nu, cm.value()});
  }
  return out;
}

inline std::int64_t renewal_count(const QueuePath& path, double t) {
  if (t > path.horizon())
    throw RuntimeError("renewal_count: t = " + std::to_string(t) + " beyond path horizon");
  const auto a = path.arrivals();
  return std::upper_bound(a.begin(), a.end(), t) - a.begin();
}

// Debug dump: one row per arrival, columns k, S_k, eta_k1.
inline void write_path_csv(const QueuePath& path, std::ostream& os) {
  os << "k,S_k,eta_k1\n";
  os.precision(17);
  for (std::size_t k = 0; k < path.size(); ++k)
    os << k << ',' << path.arrivals()[k] << ',' << path.services()[k] << '\n';
}

}  // namespace gginf
