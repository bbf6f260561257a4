// gginf: command-line front end for the infinite-server queue laboratory.
//
//   gginf simulate      --config exp.toml --out DIR
//   gginf limit-sample  --config limit.toml --out DIR
//   gginf compare       --config compare.toml --out DIR
//   gginf renewal-check --config renewal.toml --out DIR
//
// Exit codes: 0 ok, 1 runtime failure, 2 configuration or usage error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unistd.h>

#include "gginf/gginf.hpp"
#include "gginf/io.hpp"

namespace fs = std::filesystem;
using gginf::io::json;

namespace {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("GGINF_LOG");
  if (!env) return LogLevel::Info;
  const std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "warn" || v == "1") return LogLevel::Warn;
  if (v == "debug" || v == "3") return LogLevel::Debug;
  return LogLevel::Info;
}

void log(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  static constexpr const char* kTags[] = {"", "warning: ", "", "debug: "};
  std::cerr << kTags[static_cast<int>(level)] << msg << '\n';
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Outputs go to a sibling staging directory that is renamed into place once
// every file is written.
class OutputDir {
 public:
  OutputDir(fs::path target, bool force) : target_(std::move(target)), force_(force) {
    if (target_.empty()) throw gginf::ConfigError("--out is required");
    if (fs::exists(target_) && !force_)
      throw gginf::ConfigError("output directory " + target_.string() + " exists; pass --force to overwrite");
    staging_ = target_;
    staging_ += ".tmp-" + std::to_string(::getpid());
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;
  ~OutputDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }

  fs::path file(const std::string& name) const { return staging_ / name; }

  void commit() {
    if (fs::exists(target_)) fs::remove_all(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool force_;
  bool committed_ = false;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw gginf::RuntimeError("cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = gginf::default_threads();
  bool force = false;
  bool dump_path = false;
};

struct Manifest {
  std::string subcommand;
  std::string started = timestamp();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  json finish(const Options& o, std::uint64_t seed, const json& resolved) const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {{"subcommand", subcommand},
            {"config_path", o.config},
            {"output_dir", o.out},
            {"seed", seed},
            {"threads", o.threads},
            {"started_at", started},
            {"finished_at", timestamp()},
            {"wall_seconds", wall},
            {"resolved_config", resolved}};
  }
};

void print_report_line(const std::string& label, const gginf::CovarianceReport& r) {
  log(LogLevel::Info, label + ": max_abs_error = " + std::to_string(r.max_abs_error) +
                          ", max_error_in_se_units = " + std::to_string(r.max_error_in_se_units));
}

int cmd_simulate(const Options& o) {
  Manifest man{"simulate"};
  const auto root = gginf::io::parse_toml_file(o.config);
  const auto cfg = gginf::io::parse_experiment(root, o.seed);
  OutputDir out(o.out, o.force);
  const json echo = gginf::io::to_json(cfg);
  for (const auto& w : gginf::experiment_warnings(cfg)) log(LogLevel::Warn, w);
  log(LogLevel::Info, "simulate: " + std::to_string(cfg.replications) + " replications at t = " +
                          std::to_string(cfg.t) + " on " + std::to_string(o.threads) + " threads");

  const auto res = gginf::run_experiment(cfg, o.threads);
  {
    auto os = open_out(out.file("replications.csv"));
    gginf::io::write_replications_csv(os, res.samples, cfg.grid, cfg.kind);
  }
  write_json(out.file("summary.json"), gginf::io::experiment_report(echo, res));
  if (o.dump_path) {
    gginf::Engine eng = gginf::child_engine(cfg.seed, 0);
    const gginf::StatisticPlan plan(cfg.model, cfg.t, cfg.grid, cfg.normalizer_mode);
    const auto path = gginf::generate_path(cfg.model, std::max(plan.required_horizon(), 1e-9 * cfg.t), eng);
    auto os = open_out(out.file("path_0.csv"));
    gginf::write_path_csv(path, os);
  }
  write_json(out.file("manifest.json"), man.finish(o, cfg.seed, echo));
  out.commit();
  print_report_line("simulate", res.covariance);
  return 0;
}

int cmd_limit_sample(const Options& o) {
  Manifest man{"limit-sample"};
  const auto root = gginf::io::parse_toml_file(o.config);
  auto cfg = gginf::io::parse_limit(root, o.seed);
  OutputDir out(o.out, o.force);
  const gginf::CovKernel kernel(cfg.beta);

  json report{{"config_echo", nullptr}, {"methods", json::object()}};
  std::optional<gginf::CovarianceReport> chol, sheet;
  if (cfg.method != gginf::io::LimitMethod::Sheet) {
    const auto s = gginf::sample_cholesky(kernel, cfg.grid, cfg.samples, cfg.seed);
    auto os = open_out(out.file("samples_cholesky.csv"));
    gginf::io::write_samples_csv(os, s, cfg.grid);
    chol = gginf::covariance_report(s, cfg.grid, cfg.beta);
    report["methods"]["cholesky"] = gginf::io::to_json(*chol);
    print_report_line("cholesky", *chol);
  }
  if (cfg.method != gginf::io::LimitMethod::Cholesky) {
    const gginf::SheetSampler sampler(kernel, cfg.grid, cfg.sheet);
    cfg.sheet = sampler.discretization();  // defaults materialized
    // Distinct stream from the Cholesky draws.
    const auto s = sampler.sample(cfg.samples, gginf::splitmix64(cfg.seed));
    auto os = open_out(out.file("samples_sheet.csv"));
    gginf::io::write_samples_csv(os, s, cfg.grid);
    sheet = gginf::covariance_report(s, cfg.grid, cfg.beta);
    json j = gginf::io::to_json(*sheet);
    j["atoms"] = sampler.atoms().size();
    j["shared_variance"] = sampler.shared_variance();
    j["remainder_variance"] = sampler.remainder_variance();
    report["methods"]["sheet"] = j;
    print_report_line("sheet", *sheet);
  }
  if (chol && sheet) {
    const Eigen::MatrixXd delta = chol->empirical_cov - sheet->empirical_cov;
    const Eigen::MatrixXd se =
        (chol->standard_errors.array().square() + sheet->standard_errors.array().square()).sqrt().matrix();
    double max_abs = 0.0, max_units = 0.0;
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
      for (Eigen::Index j = 0; j < delta.cols(); ++j) {
        if (cfg.grid[i] == 0.0 || cfg.grid[j] == 0.0) continue;
        max_abs = std::max(max_abs, std::abs(delta(i, j)));
        if (se(i, j) > 0.0) max_units = std::max(max_units, std::abs(delta(i, j)) / se(i, j));
      }
    report["cross_method"] = {{"delta", gginf::io::to_json(delta)},
                              {"combined_se", gginf::io::to_json(se)},
                              {"max_abs_delta", max_abs},
                              {"max_delta_in_se_units", max_units}};
  }
  const json echo = gginf::io::to_json(cfg);
  report["config_echo"] = echo;
  write_json(out.file("limit_report.json"), report);
  write_json(out.file("manifest.json"), man.finish(o, cfg.seed, echo));
  out.commit();
  return 0;
}

int cmd_compare(const Options& o) {
  Manifest man{"compare"};
  const auto root = gginf::io::parse_toml_file(o.config);
  const auto base = gginf::io::parse_experiment(root, o.seed);
  const auto couplings = gginf::io::parse_couplings(root);
  OutputDir out(o.out, o.force);
  for (const auto& w : gginf::experiment_warnings(base)) log(LogLevel::Warn, w);

  const auto runs = gginf::compare_dependence(base, couplings, o.threads);
  json echo = gginf::io::to_json(base);
  json list = json::array();
  for (const auto& d : couplings) list.push_back(gginf::io::to_json(d));
  echo["compare"] = {{"couplings", list}};

  json reports = json::array();
  auto csv = open_out(out.file("compare.csv"));
  csv << "coupling,theta,max_abs_error,max_error_in_se_units,passes\n";
  csv.precision(17);
  for (const auto& run : runs) {
    const auto& r = run.result.covariance;
    csv << gginf::to_string(run.dependence.coupling) << ',' << run.dependence.theta << ',' << r.max_abs_error << ','
        << r.max_error_in_se_units << ',' << (gginf::passes(r) ? "true" : "false") << '\n';
    json j = gginf::io::experiment_report(gginf::io::to_json(base.model.with_dependence(run.dependence)), run.result);
    j["dependence"] = gginf::io::to_json(run.dependence);
    reports.push_back(std::move(j));
    print_report_line(gginf::to_string(run.dependence.coupling), r);
  }
  csv.close();
  write_json(out.file("compare.json"), {{"config_echo", echo}, {"reports", reports}});
  write_json(out.file("manifest.json"), man.finish(o, base.seed, echo));
  out.commit();
  return 0;
}

int cmd_renewal(const Options& o) {
  Manifest man{"renewal-check"};
  const auto root = gginf::io::parse_toml_file(o.config);
  const auto cfg = gginf::io::parse_renewal(root, o.seed);
  OutputDir out(o.out, o.force);
  const auto rep = gginf::renewal_clt_diagnostic(cfg.model, cfg.t, cfg.replications, cfg.seed, o.threads);
  const json echo = gginf::io::to_json(cfg);
  write_json(out.file("renewal.json"), {{"config_echo", echo}, {"report", gginf::io::to_json(rep)}});
  write_json(out.file("manifest.json"), man.finish(o, cfg.seed, echo));
  out.commit();
  log(LogLevel::Info, "renewal-check: Var nu(t)/t = " + std::to_string(rep.ratio) + ", target " +
                          std::to_string(rep.target));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for the busy-server process of an infinite-server queue"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "TOML configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "override the configured seed");
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--force", o.force, "overwrite an existing output directory");

  auto* sim = app.add_subcommand("simulate", "replicate a centered busy-server statistic");
  sim->add_flag("--dump-path", o.dump_path, "also write the replication-0 path as path_0.csv");
  auto* lim = app.add_subcommand("limit-sample", "sample the limit Gaussian process");
  auto* cmp = app.add_subcommand("compare", "sweep dependence couplings");
  auto* ren = app.add_subcommand("renewal-check", "renewal CLT variance diagnostic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (o.config.empty()) {
    std::cerr << "error: --config is required\n";
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (lim->parsed()) return cmd_limit_sample(o);
    if (cmp->parsed()) return cmd_compare(o);
    if (ren->parsed()) return cmd_renewal(o);
  } catch (const gginf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
