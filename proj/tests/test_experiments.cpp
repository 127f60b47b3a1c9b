#include "spde/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace spde;
using experiments::ConfigError;
using experiments::ExperimentConfig;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("spde-test-" + tag);
  fs::remove_all(dir);
  return dir;
}

// small enough to run in seconds, still above the regression floor
ExperimentConfig tiny_sandwich(const std::string& out_dir, int jobs) {
  auto cfg = experiments::default_config("sandwich-heat1d");
  cfg.n_trajectories = 1000;
  cfg.spec.n_x = 16;
  cfg.spec.t_eval = 0.0625;
  cfg.spec.x_eval[0] = 0.5;
  cfg.spec.dt_target = 1.0 / 256;
  cfg.out_dir = out_dir;
  cfg.jobs = jobs;
  return cfg;
}

}  // namespace

TEST_CASE("the catalog lists every experiment in canonical order") {
  const std::vector<std::string> expected = {
      "gaussian-oracle-heat1d", "sandwich-heat1d", "sandwich-heat-rd", "sandwich-wave",
      "scaling-heat1d",         "scaling-heat-rd", "scaling-wave",     "lemma-checks"};
  CHECK(experiments::experiment_names() == expected);
  for (const auto& name : expected) CHECK(experiments::is_experiment_name(name));
  CHECK(!experiments::is_experiment_name("sandwich"));
  CHECK(!experiments::is_experiment_name(""));
}

TEST_CASE("every catalog default passes validation") {
  for (const auto& name : experiments::experiment_names()) {
    CAPTURE(name);
    const auto cfg = experiments::default_config(name);
    CHECK(cfg.experiment == name);
    const auto rep = experiments::validate(cfg);
    for (const auto& e : rep.errors) { CAPTURE(e); CHECK(false); }
    CHECK(rep.ok);
    CHECK(rep.warnings.empty());
  }
  CHECK_THROWS_AS(experiments::default_config("no-such-experiment"), ConfigError);
}

TEST_CASE("json overrides land on top of the defaults") {
  const auto cfg = experiments::parse_config_text(R"({
    "experiment": "sandwich-heat1d",
    "n_trajectories": 5000,
    "model": {"n_x": 32, "t_eval": 0.125, "drift": {"kind": "tanh", "param": 2.0},
              "u0": {"kind": "sine", "amplitude": 0.3, "param": 2}},
    "regressor": {"kind": "binned", "min_per_bin": 80},
    "jobs": 3,
    "dump_trajectories": true
  })");
  CHECK(cfg.n_trajectories == 5000);
  CHECK(cfg.spec.n_x == 32);
  CHECK(cfg.spec.t_eval == 0.125);
  CHECK(cfg.spec.drift.kind == solvers::DriftKind::kTanh);
  CHECK(cfg.spec.drift.param == 2.0);
  CHECK(cfg.spec.u0.kind == solvers::InitialKind::kSineMode);
  CHECK(cfg.spec.u0.amplitude == 0.3);
  CHECK(cfg.regressor.regressor == malliavin::Regressor::kBinned);
  CHECK(cfg.regressor.min_per_bin == 80);
  CHECK(cfg.jobs == 3);
  CHECK(cfg.dump_trajectories);
  // untouched fields keep their defaults
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.eta == 0.4);
  CHECK(cfg.spec.sigma == experiments::default_config("sandwich-heat1d").spec.sigma);
}

TEST_CASE("dimension override keeps the measure family") {
  const auto cfg = experiments::parse_config_text(
      R"({"experiment": "sandwich-heat-rd", "model": {"d": 2, "grid": {"n": 32}}})");
  CHECK(cfg.spec.d == 2);
  CHECK(cfg.spec.grid.d == 2);
  CHECK(cfg.spec.mu.kind() == noise::MeasureKind::kRiesz);
  CHECK(cfg.spec.mu.dimension() == 2);
  const auto base = experiments::default_config("sandwich-heat-rd");
  CHECK(cfg.spec.mu.riesz_epsilon() == base.spec.mu.riesz_epsilon());
}

TEST_CASE("unknown keys are rejected with a precise field path") {
  auto field_of = [](const std::string& text) {
    try {
      experiments::parse_config_text(text);
    } catch (const ConfigError& e) {
      return e.field;
    }
    return std::string("(no throw)");
  };
  CHECK(field_of(R"({"experiment": "lemma-checks", "bogus": 1})") == "bogus");
  CHECK(field_of(R"({"experiment": "lemma-checks", "model": {"bogus": 1}})") == "model.bogus");
  CHECK(field_of(R"({"experiment": "lemma-checks", "model": {"grid": {"q": 1}}})") ==
        "model.grid.q");
  CHECK(field_of(R"({"experiment": "lemma-checks", "regressor": {"spam": 1}})") ==
        "regressor.spam");
  CHECK(field_of(R"({"experiment": "lemma-checks", "measure": {"spam": 1}})") == "measure.spam");
  CHECK(field_of(R"({"experiment": "lemma-checks", "model": {"drift": {"x": 1}}})") ==
        "model.drift.x");
}

TEST_CASE("bad enum values and malformed fields throw") {
  auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(experiments::parse_config_text(text), ConfigError);
  };
  bad(R"({"experiment": "sandwich-heat1d", "model": {"kind": "advection"}})");
  bad(R"({"experiment": "sandwich-heat1d", "model": {"drift": {"kind": "cubic"}}})");
  bad(R"({"experiment": "sandwich-heat1d", "model": {"u0": {"kind": "spike"}}})");
  bad(R"({"experiment": "sandwich-heat-rd", "measure": {"kind": "powerlaw"}})");
  bad(R"({"experiment": "sandwich-heat-rd", "measure": {"kind": "riesz"}})");  // epsilon missing
  bad(R"({"experiment": "sandwich-heat1d", "regressor": {"kind": "spline"}})");
  bad(R"({"experiment": "sandwich-heat-rd", "model": {"x_eval": [1, 2, 3, 4]}})");
  bad(R"({"experiment": "sandwich-heat1d")");  // truncated json
  bad(R"({"model": {}})");                     // experiment missing
  CHECK_THROWS_AS(experiments::load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config hash is stable, sensitive and round trips") {
  const auto a = experiments::default_config("sandwich-heat-rd");
  const auto b = experiments::default_config("sandwich-heat-rd");
  CHECK(experiments::config_hash(a) == experiments::config_hash(b));
  CHECK(experiments::config_hash(a).size() == 16);

  auto c = experiments::default_config("sandwich-heat-rd");
  c.master_seed = 43;
  CHECK(experiments::config_hash(c) != experiments::config_hash(a));

  // emitting the resolved config and parsing it back is the identity
  const auto round = experiments::parse_config_text(experiments::config_json(a));
  CHECK(experiments::config_hash(round) == experiments::config_hash(a));
  const auto round2 = experiments::parse_config_text(
      experiments::config_json(experiments::default_config("scaling-wave")));
  CHECK(experiments::config_hash(round2) ==
        experiments::config_hash(experiments::default_config("scaling-wave")));
}

TEST_CASE("validation flags hypothesis violations and structural errors") {
  // planar white noise makes the heat spectral integral diverge
  auto cfg = experiments::parse_config_text(
      R"({"experiment": "sandwich-heat-rd",
          "model": {"d": 2, "grid": {"n": 16}},
          "measure": {"kind": "white"}})");
  auto rep = experiments::validate(cfg);
  CHECK(!rep.ok);
  REQUIRE(!rep.errors.empty());

  auto small = experiments::default_config("sandwich-heat1d");
  small.n_trajectories = 500;
  CHECK(!experiments::validate(small).ok);

  auto sched = experiments::default_config("scaling-heat1d");
  sched.t_schedule = {0.1, 0.2, 0.15, 0.3, 0.4};
  CHECK(!experiments::validate(sched).ok);
  sched.t_schedule = {0.1, 0.2, 0.3};
  CHECK(!experiments::validate(sched).ok);

  auto neg = experiments::default_config("sandwich-heat1d");
  neg.spec.t_eval = -1.0;
  CHECK(!experiments::validate(neg).ok);
}

TEST_CASE("out-of-hypothesis settings warn without failing") {
  auto cfg = experiments::default_config("sandwich-heat-rd");
  cfg.eta = 0.8;
  auto rep = experiments::validate(cfg);
  CHECK(rep.ok);
  CHECK(!rep.warnings.empty());

  auto wave = experiments::default_config("sandwich-wave");
  wave.spec.t_eval = 0.6;
  rep = experiments::validate(wave);
  CHECK(rep.ok);
  CHECK(!rep.warnings.empty());
}

TEST_CASE("runs are reproducible and independent of the job count") {
  const auto d1 = fresh_dir("run-a");
  const auto d2 = fresh_dir("run-b");
  const auto d3 = fresh_dir("run-c");
  const auto r1 = experiments::run(tiny_sandwich(d1.string(), 1));
  const auto r2 = experiments::run(tiny_sandwich(d2.string(), 1));
  const auto r3 = experiments::run(tiny_sandwich(d3.string(), 2));
  for (const auto& r : {r1, r2, r3}) {
    CAPTURE(r.message);
    CHECK((r.exit_code == 0 || r.exit_code == 2));
  }
  CHECK(r1.exit_code == r2.exit_code);
  CHECK(r1.exit_code == r3.exit_code);
  for (const char* name : {"samples.jsonl", "g_estimate.csv", "density.csv", "report.json"}) {
    CAPTURE(name);
    const std::string base = slurp(d1 / name);
    CHECK(base == slurp(d2 / name));
    CHECK(base == slurp(d3 / name));
  }
  // the manifest exists and echoes the config hash
  const std::string manifest = slurp(d1 / "manifest.json");
  CHECK(manifest.find(experiments::config_hash(tiny_sandwich(d1.string(), 1))) !=
        std::string::npos);
  for (const auto& d : {d1, d2, d3}) fs::remove_all(d);
}

TEST_CASE("parallel sample collection matches the serial order") {
  auto spec = tiny_sandwich("unused", 1).spec;
  const auto serial = experiments::collect_parallel(spec, 24, 777, 1);
  const auto parallel = experiments::collect_parallel(spec, 24, 777, 3);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].f == parallel[i].f);
    CHECK(serial[i].c == parallel[i].c);
    CHECK(serial[i].theta == parallel[i].theta);
    CHECK(serial[i].seed == parallel[i].seed);
  }
}

TEST_CASE("lemma checks write the bounds table and pass") {
  const auto dir = fresh_dir("lemma");
  auto cfg = experiments::default_config("lemma-checks");
  cfg.out_dir = dir.string();
  const auto res = experiments::run(cfg);
  CHECK(res.exit_code == 0);
  const std::string csv = slurp(dir / "bounds.csv");
  CHECK(csv.rfind("lemma,", 0) == 0);
  const std::string js = slurp(dir / "bounds.json");
  CHECK(js.find("\"pass\":true") != std::string::npos);
  CHECK(js.find("\"pass\":false") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("dump flag adds the trajectory artifacts") {
  const auto dir = fresh_dir("dump");
  auto cfg = tiny_sandwich(dir.string(), 1);
  cfg.dump_trajectories = true;
  const auto res = experiments::run(cfg);
  CHECK((res.exit_code == 0 || res.exit_code == 2));
  CHECK(fs::exists(dir / "trajectories.jsonl"));
  const std::string fields = slurp(dir / "fields.csv");
  CHECK(fields.rfind("trajectory,", 0) == 0);
  // one header plus eight dumped trajectories
  CHECK(std::count(fields.begin(), fields.end(), '\n') == 9);
  fs::remove_all(dir);
}
