#pragma once

// TOML configuration parsing, JSON reports and CSV writers.

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gginf/error.hpp"
#include "gginf/limitproc.hpp"
#include "gginf/mc.hpp"
#include "gginf/models.hpp"
#include "gginf/statistics.hpp"

namespace gginf::io {

using json = nlohmann::ordered_json;

namespace detail {

inline const toml::table& require_table(const toml::table& root, std::string_view key) {
  const auto* t = root[key].as_table();
  if (!t) throw ConfigError("missing table [" + std::string(key) + "]");
  return *t;
}

inline double get_number(const toml::table& t, std::string_view key, std::string_view where) {
  const auto node = t[key];
  if (auto v = node.value<double>()) return *v;
  throw ConfigError(std::string(where) + "." + std::string(key) + " must be a number");
}

inline double get_number_or(const toml::table& t, std::string_view key, double fallback, std::string_view where) {
  if (!t.contains(key)) return fallback;
  return get_number(t, key, where);
}

inline std::string get_string(const toml::table& t, std::string_view key, std::string_view where) {
  if (auto v = t[key].value<std::string>()) return *v;
  throw ConfigError(std::string(where) + "." + std::string(key) + " must be a string");
}

inline std::int64_t get_integer(const toml::table& t, std::string_view key, std::string_view where) {
  if (const auto* n = t[key].as_integer()) return n->get();
  if (const auto* f = t[key].as_floating_point()) {
    const double d = f->get();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(std::string(where) + "." + std::string(key) + " must be an integer");
}

inline std::vector<double> get_grid(const toml::table& t, std::string_view key, std::string_view where) {
  const auto* arr = t[key].as_array();
  if (!arr || arr->empty()) throw ConfigError(std::string(where) + "." + std::string(key) + " must be a nonempty array");
  std::vector<double> out;
  for (const auto& el : *arr) {
    auto v = el.value<double>();
    if (!v) throw ConfigError(std::string(where) + "." + std::string(key) + " must hold numbers");
    out.push_back(*v);
  }
  return out;
}

inline std::size_t get_count(const toml::table& t, std::string_view key, std::string_view where) {
  const auto v = get_integer(t, key, where);
  if (v <= 0) throw ConfigError(std::string(where) + "." + std::string(key) + " must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

inline InterarrivalLaw parse_interarrival(const toml::table& t) {
  using detail::get_number;
  const std::string family = detail::get_string(t, "family", "interarrival");
  const auto* params = t["params"].as_table();
  if (!params) throw ConfigError("interarrival.params must be a table");
  const auto& p = *params;
  if (family == "exponential") return Exponential{get_number(p, "rate", "interarrival.params")};
  if (family == "pareto")
    return Pareto{get_number(p, "shape", "interarrival.params"), get_number(p, "scale", "interarrival.params")};
  if (family == "lognormal")
    return LogNormal{get_number(p, "meanlog", "interarrival.params"), get_number(p, "sdlog", "interarrival.params")};
  if (family == "deterministic") return Deterministic{get_number(p, "value", "interarrival.params")};
  throw ConfigError("unknown interarrival.family '" + family + "'");
}

inline ServiceLaw parse_service(const toml::table& t) {
  const std::string family = detail::get_string(t, "family", "service");
  if (family == "pareto_shifted") return ParetoShifted{detail::get_number(t, "beta", "service")};
  if (family == "log_tail") {
    if (t.contains("beta") && detail::get_number(t, "beta", "service") != 0.0)
      throw ConfigError("service.beta must be 0 (or absent) for log_tail");
    return LogTail{};
  }
  throw ConfigError("unknown service.family '" + family + "'");
}

inline Dependence parse_dependence(const toml::table& t) {
  const std::string c = detail::get_string(t, "coupling", "dependence");
  if (c == "independent") return Dependence::independent();
  if (c == "comonotone") return Dependence::comonotone();
  if (c == "antimonotone") return Dependence::antimonotone();
  if (c == "common_shock") return Dependence::common_shock(detail::get_number(t, "theta", "dependence"));
  throw ConfigError("unknown dependence.coupling '" + c + "'");
}

inline ModelConfig parse_model(const toml::table& root) {
  const auto interarrival = parse_interarrival(detail::require_table(root, "interarrival"));
  const auto service = parse_service(detail::require_table(root, "service"));
  Dependence dep = Dependence::independent();
  if (const auto* d = root["dependence"].as_table()) dep = parse_dependence(*d);
  return ModelConfig(interarrival, service, dep);
}

inline toml::table parse_toml(const std::string& text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string("TOML parse error: ") + std::string(e.description()));
  }
}

inline toml::table parse_toml_file(const std::string& path) {
  try {
    return toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw ConfigError("TOML parse error in " + path + ": " + std::string(e.description()));
  }
}

// ---------------------------------------------------------------------------
// Experiment, limit sampling, comparison, renewal
// ---------------------------------------------------------------------------

inline StatisticKind parse_kind(const std::string& s) {
  if (s == "random_centered") return StatisticKind::RandomCentered;
  if (s == "nonrandom_centered") return StatisticKind::NonrandomCentered;
  if (s == "decomposition_first") return StatisticKind::DecompositionFirst;
  if (s == "decomposition_second") return StatisticKind::DecompositionSecond;
  throw ConfigError("unknown experiment.kind '" + s + "'");
}

inline NormalizerMode parse_normalizer(const std::string& s) {
  if (s == "integral") return NormalizerMode::Integral;
  if (s == "sum") return NormalizerMode::Sum;
  throw ConfigError("unknown experiment.normalizer '" + s + "'");
}

inline std::uint64_t parse_seed(const toml::table& t, std::string_view where, std::uint64_t fallback) {
  if (!t.contains("seed")) return fallback;
  const auto v = detail::get_integer(t, "seed", where);
  if (v < 0) throw ConfigError(std::string(where) + ".seed must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

inline ExperimentConfig parse_experiment(const toml::table& root, std::optional<std::uint64_t> seed_override = {}) {
  const auto& e = detail::require_table(root, "experiment");
  ExperimentConfig cfg{parse_model(root)};
  cfg.t = detail::get_number(e, "t", "experiment");
  cfg.grid = detail::get_grid(e, "grid", "experiment");
  cfg.kind = e.contains("kind") ? parse_kind(detail::get_string(e, "kind", "experiment")) : StatisticKind::RandomCentered;
  cfg.replications = detail::get_count(e, "replications", "experiment");
  cfg.seed = seed_override ? *seed_override : parse_seed(e, "experiment", 1);
  cfg.normalizer_mode =
      e.contains("normalizer") ? parse_normalizer(detail::get_string(e, "normalizer", "experiment")) : NormalizerMode::Integral;
  cfg.validate();
  return cfg;
}

enum class LimitMethod { Cholesky, Sheet, Both };

struct LimitSampleConfig {
  double beta = 0.5;
  std::vector<double> grid;
  LimitMethod method = LimitMethod::Both;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  SheetDiscretization sheet;
};

inline std::string to_string(LimitMethod m) {
  switch (m) {
    case LimitMethod::Cholesky: return "cholesky";
    case LimitMethod::Sheet: return "sheet";
    case LimitMethod::Both: return "both";
  }
  return "?";
}

inline LimitSampleConfig parse_limit(const toml::table& root, std::optional<std::uint64_t> seed_override = {}) {
  const auto& l = detail::require_table(root, "limit");
  LimitSampleConfig cfg;
  if (l.contains("beta")) {
    cfg.beta = detail::get_number(l, "beta", "limit");
  } else if (const auto* s = root["service"].as_table()) {
    cfg.beta = parse_service(*s).beta();
  } else {
    throw ConfigError("limit.beta missing and no [service] table to take it from");
  }
  if (!(cfg.beta >= 0.0 && cfg.beta < 1.0)) throw ConfigError("limit.beta must lie in [0, 1)");
  cfg.grid = detail::get_grid(l, "grid", "limit");
  const std::string m = l.contains("method") ? detail::get_string(l, "method", "limit") : "both";
  if (m == "cholesky") cfg.method = LimitMethod::Cholesky;
  else if (m == "sheet") cfg.method = LimitMethod::Sheet;
  else if (m == "both") cfg.method = LimitMethod::Both;
  else throw ConfigError("unknown limit.method '" + m + "'");
  if (l.contains("samples")) cfg.samples = detail::get_count(l, "samples", "limit");
  if (cfg.samples < 2) throw ConfigError("limit.samples must be at least 2");
  cfg.seed = seed_override ? *seed_override : parse_seed(l, "limit", 1);
  auto cells = [&](std::string_view key, int fallback) {
    return l.contains(key) ? static_cast<int>(detail::get_count(l, key, "limit")) : fallback;
  };
  cfg.sheet.x_cells = cells("x_cells", cfg.sheet.x_cells);
  cfg.sheet.z_cells = cells("z_cells", cfg.sheet.z_cells);
  cfg.sheet.z_tail_cells = cells("z_tail_cells", cfg.sheet.z_tail_cells);
  cfg.sheet.z_split = detail::get_number_or(l, "z_split", 0.0, "limit");
  cfg.sheet.z_max = detail::get_number_or(l, "z_max", 0.0, "limit");
  gginf::detail::check_grid(cfg.grid);
  if (cfg.beta == 0.0 && cfg.method != LimitMethod::Cholesky)
    throw ConfigError("method '" + m + "' uses the Brownian sheet, which needs beta > 0; at beta = 0 use method = \"cholesky\"");
  return cfg;
}

inline std::vector<Dependence> parse_couplings(const toml::table& root) {
  const auto& c = detail::require_table(root, "compare");
  const auto* arr = c["couplings"].as_array();
  if (!arr) throw ConfigError("compare.couplings must be an array");
  std::vector<Dependence> out;
  for (const auto& el : *arr) {
    if (auto s = el.value<std::string>()) {
      toml::table t;
      t.insert("coupling", *s);
      out.push_back(parse_dependence(t));
    } else if (const auto* t = el.as_table()) {
      out.push_back(parse_dependence(*t));
    } else {
      throw ConfigError("compare.couplings entries must be strings or inline tables");
    }
  }
  if (out.empty()) throw ConfigError("compare.couplings must not be empty");
  return out;
}

struct RenewalConfig {
  ModelConfig model;
  double t = 1e4;
  std::size_t replications = 10000;
  std::uint64_t seed = 1;
};

inline RenewalConfig parse_renewal(const toml::table& root, std::optional<std::uint64_t> seed_override = {}) {
  const auto& r = detail::require_table(root, "renewal");
  RenewalConfig cfg{parse_model(root)};
  cfg.t = detail::get_number(r, "t", "renewal");
  if (!(cfg.t > 0.0)) throw ConfigError("renewal.t must be positive");
  cfg.replications = detail::get_count(r, "replications", "renewal");
  if (cfg.replications < 2) throw ConfigError("renewal.replications must be at least 2");
  cfg.seed = seed_override ? *seed_override : parse_seed(r, "renewal", 1);
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

inline json to_json(const Dependence& d) {
  json j{{"coupling", to_string(d.coupling)}};
  if (d.coupling == Coupling::CommonShock) j["theta"] = d.theta;
  return j;
}

inline json to_json(const ModelConfig& m) {
  json params;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Exponential>) params = {{"rate", f.rate}};
        else if constexpr (std::is_same_v<T, Pareto>) params = {{"shape", f.shape}, {"scale", f.scale}};
        else if constexpr (std::is_same_v<T, LogNormal>) params = {{"meanlog", f.meanlog}, {"sdlog", f.sdlog}};
        else params = {{"value", f.value}};
      },
      m.interarrival().family());
  return json{
      {"interarrival", {{"family", m.interarrival().name()}, {"params", params}}},
      {"service", {{"family", m.service().name()}, {"beta", m.beta()}}},
      {"dependence", to_json(m.dependence())},
      {"derived",
       {{"mu", number(m.mu())},
        {"sigma2", number(m.sigma2())},
        {"beta", m.beta()},
        {"moment_order", number(m.interarrival().moment_order())},
        {"nonrandom_centering_valid", m.nonrandom_centering_valid()}}},
  };
}

inline json to_json(const ExperimentConfig& c) {
  json j = to_json(c.model);
  j["experiment"] = {{"t", c.t},
                     {"grid", c.grid},
                     {"kind", to_string(c.kind)},
                     {"replications", c.replications},
                     {"seed", c.seed},
                     {"normalizer", to_string(c.normalizer_mode)}};
  return j;
}

inline json to_json(const SheetDiscretization& d) {
  return {{"x_cells", d.x_cells},
          {"z_cells", d.z_cells},
          {"z_tail_cells", d.z_tail_cells},
          {"z_split", d.z_split},
          {"z_max", d.z_max}};
}

inline json to_json(const LimitSampleConfig& c) {
  return {{"limit",
           {{"beta", c.beta},
            {"grid", c.grid},
            {"method", to_string(c.method)},
            {"samples", c.samples},
            {"seed", c.seed},
            {"sheet", to_json(c.sheet)}}}};
}

inline json to_json(const RenewalConfig& c) {
  json j = to_json(c.model);
  j["renewal"] = {{"t", c.t}, {"replications", c.replications}, {"seed", c.seed}};
  return j;
}

inline json to_json(const CovarianceReport& r) {
  return {{"grid", r.grid},
          {"empirical_mean", to_json(r.empirical_mean)},
          {"empirical_cov", to_json(r.empirical_cov)},
          {"theoretical_cov", to_json(r.theoretical_cov)},
          {"se", to_json(r.standard_errors)},
          {"max_abs_error", number(r.max_abs_error)},
          {"max_error_in_se_units", number(r.max_error_in_se_units)}};
}

inline json to_json(const std::vector<MarginalReport>& ms) {
  json out = json::array();
  for (const auto& m : ms) out.push_back({{"u", m.u}, {"ks", number(m.ks_statistic)}, {"p", number(m.ks_p_value)}});
  return out;
}

// Summary of one experiment: config echo, covariance report, marginals.
inline json experiment_report(const json& config_echo, const ExperimentResult& res, ScoringRule rule = {}) {
  json j{{"config_echo", config_echo}};
  const json cov = to_json(res.covariance);
  for (auto it = cov.begin(); it != cov.end(); ++it) j[it.key()] = it.value();
  j["marginals"] = to_json(res.marginals);
  j["scoring"] = {{"se_units", rule.se_units}, {"abs_floor", rule.abs_floor}, {"passes", passes(res.covariance, rule)}};
  j["warnings"] = res.warnings;
  return j;
}

inline json to_json(const RenewalReport& r) {
  return {{"t", r.t},
          {"replications", r.replications},
          {"mean_count", number(r.mean_count)},
          {"var_count", number(r.var_count)},
          {"ratio", number(r.ratio)},
          {"target", number(r.target)},
          {"relative_error", number(r.relative_error)}};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

// Rows (replication_id, kind, u, value).
inline void write_replications_csv(std::ostream& os, const SampleMatrix& samples, std::span<const double> grid,
                                   StatisticKind kind, bool header = true) {
  if (header) os << "replication_id,kind,u,value\n";
  os.precision(17);
  const std::string k = to_string(kind);
  for (Eigen::Index r = 0; r < samples.rows(); ++r)
    for (Eigen::Index i = 0; i < samples.cols(); ++i)
      os << r << ',' << k << ',' << grid[static_cast<std::size_t>(i)] << ',' << samples(r, i) << '\n';
}

// Rows (sample_id, u, value).
inline void write_samples_csv(std::ostream& os, const SampleMatrix& samples, std::span<const double> grid) {
  os << "sample_id,u,value\n";
  os.precision(17);
  for (Eigen::Index r = 0; r < samples.rows(); ++r)
    for (Eigen::Index i = 0; i < samples.cols(); ++i)
      os << r << ',' << grid[static_cast<std::size_t>(i)] << ',' << samples(r, i) << '\n';
}

}  // namespace gginf::io
