#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "gginf/io.hpp"

using namespace gginf;
using namespace gginf::io;

namespace {

const char* kModel = R"(
[interarrival]
family = "lognormal"
params = { meanlog = 0.0, sdlog = 0.5 }

[service]
family = "pareto_shifted"
beta = 0.5

[dependence]
coupling = "common_shock"
theta = 0.25
)";

toml::table with_model(const std::string& extra) { return parse_toml(std::string(kModel) + extra); }

}  // namespace

TEST_CASE("model tables") {
  const auto m = parse_model(parse_toml(kModel));
  CHECK(m.beta() == 0.5);
  CHECK(m.dependence().coupling == Coupling::CommonShock);
  CHECK(m.dependence().theta == 0.25);
  CHECK(m.interarrival().name() == "lognormal");

  const auto lt = parse_model(parse_toml(R"(
interarrival = { family = "pareto", params = { shape = 3.0, scale = 1 } }
service = { family = "log_tail" }
)"));
  CHECK(lt.service().is_log_tail());
  CHECK(lt.dependence().coupling == Coupling::Independent);
  CHECK(lt.interarrival().moment_order() == 3.0);

  SECTION("errors") {
    CHECK_THROWS_AS(parse_toml("interarrival = ["), ConfigError);
    CHECK_THROWS_AS(parse_model(parse_toml("[service]\nfamily = \"log_tail\"\n")), ConfigError);
    CHECK_THROWS_AS(parse_model(parse_toml(R"(
interarrival = { family = "gamma", params = { k = 1.0 } }
service = { family = "log_tail" }
)")),
                    ConfigError);
    CHECK_THROWS_AS(parse_model(parse_toml(R"(
interarrival = { family = "exponential", params = { rate = "fast" } }
service = { family = "log_tail" }
)")),
                    ConfigError);
    CHECK_THROWS_AS(parse_model(parse_toml(R"(
interarrival = { family = "exponential", params = { rate = 1.0 } }
service = { family = "pareto_shifted", beta = 1.5 }
)")),
                    ConfigError);
    CHECK_THROWS_AS(parse_model(parse_toml(R"(
interarrival = { family = "exponential", params = { rate = 1.0 } }
service = { family = "log_tail", beta = 0.5 }
)")),
                    ConfigError);
    CHECK_THROWS_AS(parse_model(parse_toml(R"(
interarrival = { family = "exponential", params = { rate = 1.0 } }
service = { family = "log_tail" }
dependence = { coupling = "sideways" }
)")),
                    ConfigError);
    CHECK_THROWS_AS(parse_toml_file("/nonexistent/config.toml"), std::exception);
  }
}

TEST_CASE("experiment table") {
  const auto cfg = parse_experiment(with_model(R"(
[experiment]
t = 1e4
grid = [0, 0.5, 1]
kind = "nonrandom_centered"
replications = 500
seed = 42
normalizer = "sum"
)"));
  CHECK(cfg.t == 1e4);
  CHECK(cfg.grid == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(cfg.kind == StatisticKind::NonrandomCentered);
  CHECK(cfg.replications == 500);
  CHECK(cfg.seed == 42);
  CHECK(cfg.normalizer_mode == NormalizerMode::Sum);

  const auto minimal = parse_experiment(with_model("[experiment]\nt = 10\ngrid = [1]\nreplications = 5\n"), 7);
  CHECK(minimal.kind == StatisticKind::RandomCentered);
  CHECK(minimal.normalizer_mode == NormalizerMode::Integral);
  CHECK(minimal.seed == 7);

  CHECK_THROWS_AS(parse_experiment(with_model("[experiment]\nt = 10\ngrid = [1, 0.5]\nreplications = 5\n")), ConfigError);
  CHECK_THROWS_AS(parse_experiment(with_model("[experiment]\nt = 10\ngrid = []\nreplications = 5\n")), ConfigError);
  CHECK_THROWS_AS(parse_experiment(with_model("[experiment]\nt = 10\ngrid = [1]\nreplications = 0\n")), ConfigError);
  CHECK_THROWS_AS(parse_experiment(with_model("[experiment]\nt = 10\ngrid = [1]\nreplications = 1.5\n")), ConfigError);
  CHECK_THROWS_AS(parse_experiment(with_model("[experiment]\nt = 10\ngrid = [1]\nreplications = 5\nkind = \"x\"\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment(with_model("[experiment]\nt = 10\ngrid = [1]\nreplications = 5\nseed = -1\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment(with_model("")), ConfigError);
}

TEST_CASE("limit table") {
  const auto cfg = parse_limit(with_model("[limit]\ngrid = [0, 0.5, 1]\nsamples = 100\nz_tail_cells = 64\n"));
  CHECK(cfg.beta == 0.5);
  CHECK(cfg.method == LimitMethod::Both);
  CHECK(cfg.samples == 100);
  CHECK(cfg.sheet.z_tail_cells == 64);
  CHECK(cfg.sheet.x_cells == SheetDiscretization{}.x_cells);

  const auto chol = parse_limit(parse_toml("[limit]\nbeta = 0\ngrid = [1]\nmethod = \"cholesky\"\n"));
  CHECK(chol.beta == 0.0);
  CHECK(chol.method == LimitMethod::Cholesky);

  CHECK_THROWS_AS(parse_limit(parse_toml("[limit]\nbeta = 0\ngrid = [1]\nmethod = \"sheet\"\n")), ConfigError);
  CHECK_THROWS_AS(parse_limit(parse_toml("[limit]\nbeta = 0\ngrid = [1]\n")), ConfigError);
  CHECK_THROWS_AS(parse_limit(parse_toml("[limit]\ngrid = [1]\n")), ConfigError);
  CHECK_THROWS_AS(parse_limit(parse_toml("[limit]\nbeta = 1\ngrid = [1]\n")), ConfigError);
  CHECK_THROWS_AS(parse_limit(parse_toml("[limit]\nbeta = 0.5\ngrid = [1]\nmethod = \"fft\"\n")), ConfigError);
  CHECK_THROWS_AS(parse_limit(parse_toml("[limit]\nbeta = 0.5\ngrid = [1]\nsamples = 1\n")), ConfigError);
}

TEST_CASE("compare and renewal tables") {
  const auto deps = parse_couplings(parse_toml(R"(
[compare]
couplings = ["independent", "antimonotone", { coupling = "common_shock", theta = 0.5 }]
)"));
  REQUIRE(deps.size() == 3);
  CHECK(deps[1].coupling == Coupling::Antimonotone);
  CHECK(deps[2].theta == 0.5);
  CHECK_THROWS_AS(parse_couplings(parse_toml("[compare]\ncouplings = []\n")), ConfigError);
  CHECK_THROWS_AS(parse_couplings(parse_toml("[compare]\ncouplings = [1]\n")), ConfigError);
  CHECK_THROWS_AS(parse_couplings(parse_toml("[compare]\ncouplings = [\"common_shock\"]\n")), ConfigError);

  const auto r = parse_renewal(with_model("[renewal]\nt = 100\nreplications = 10\n"));
  CHECK(r.t == 100.0);
  CHECK(r.seed == 1);
  CHECK_THROWS_AS(parse_renewal(with_model("[renewal]\nt = 0\nreplications = 10\n")), ConfigError);
}

TEST_CASE("experiment report schema") {
  ExperimentConfig cfg{ModelConfig(Exponential{1.0}, ParetoShifted{0.5})};
  cfg.t = 50.0;
  cfg.grid = {0.0, 1.0};
  cfg.replications = 1000;
  const auto res = run_experiment(cfg, 2);
  const json j = experiment_report(to_json(cfg), res);
  for (const char* key : {"config_echo", "grid", "empirical_mean", "empirical_cov", "theoretical_cov", "se",
                          "max_abs_error", "max_error_in_se_units", "marginals", "scoring", "warnings"})
    CHECK(j.contains(key));
  CHECK(j["config_echo"]["experiment"]["kind"] == "random_centered");
  CHECK(j["config_echo"]["derived"]["mu"] == 1.0);
  CHECK(j["empirical_cov"].size() == 2);
  CHECK(j["empirical_cov"][0].size() == 2);
  REQUIRE(j["marginals"].size() == 1);
  CHECK(j["marginals"][0]["u"] == 1.0);
  CHECK(j["marginals"][0].contains("p"));
  CHECK(j["scoring"]["se_units"] == 4.0);

  // NaN becomes null
  auto tiny = cfg;
  tiny.replications = 2;
  const json t = experiment_report(to_json(tiny), run_experiment(tiny, 1));
  CHECK(t["max_error_in_se_units"].is_null());
  CHECK(t["se"][1][1].is_null());
  CHECK(t["marginals"].empty());

  // round trip through text is stable
  CHECK(json::parse(j.dump()).dump() == j.dump());
}

TEST_CASE("CSV writers") {
  SampleMatrix x(2, 2);
  x << 0.0, 1.5, 0.0, -0.25;
  const std::vector<double> grid{0.0, 1.0};
  std::ostringstream a, b;
  write_replications_csv(a, x, grid, StatisticKind::RandomCentered);
  CHECK(a.str() ==
        "replication_id,kind,u,value\n0,random_centered,0,0\n0,random_centered,1,1.5\n"
        "1,random_centered,0,0\n1,random_centered,1,-0.25\n");
  write_samples_csv(b, x, grid);
  CHECK(b.str() == "sample_id,u,value\n0,0,0\n0,1,1.5\n1,0,0\n1,1,-0.25\n");
}
