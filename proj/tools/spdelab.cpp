// Command line driver: run or validate an experiment from the catalog or a
// JSON config file.  Exit codes: 0 ok, 1 config error, 2 acceptance check
// failed, 3 numerical failure.
#include "spde/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

namespace {

spde::experiments::ExperimentConfig resolve_config(const std::string& config) {
  if (spde::experiments::is_experiment_name(config))
    return spde::experiments::default_config(config);
  if (std::filesystem::exists(config)) return spde::experiments::load_config(config);
  throw spde::experiments::ConfigError(
      "config", "'" + config + "' is neither a catalog experiment nor a readable file");
}

void apply_overrides(spde::experiments::ExperimentConfig& cfg, const CLI::App& cmd,
                     std::uint64_t seed, int jobs, const std::string& out, bool dump) {
  if (cmd.count("--seed")) cfg.master_seed = seed;
  if (cmd.count("--jobs")) cfg.jobs = jobs;
  if (cmd.count("--out")) cfg.out_dir = out;
  if (cmd.count("--dump-trajectories")) cfg.dump_trajectories = dump;
}

int print_validation(const spde::experiments::ValidationReport& rep) {
  for (const auto& e : rep.errors) std::printf("error: %s\n", e.c_str());
  for (const auto& w : rep.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("%s\n", rep.ok ? "valid" : "invalid");
  return rep.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic PDE density laboratory"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
  bool dump = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "catalog experiment name or JSON config path")->required();
    cmd->add_option("--seed", seed, "override master seed");
    cmd->add_option("--jobs", jobs, "worker threads for trajectory sampling");
    cmd->add_option("--out", out, "output directory");
    cmd->add_flag("--dump-trajectories", dump, "write per-trajectory values and sample fields");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_common(run_cmd);
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check a config without running anything");
  add_common(validate_cmd);
  CLI::App* list_cmd = app.add_subcommand("list-experiments", "print the experiment catalog");

  CLI11_PARSE(app, argc, argv);

  if (list_cmd->parsed()) {
    for (const auto& name : spde::experiments::experiment_names())
      std::printf("%s\n", name.c_str());
    return 0;
  }

  try {
    CLI::App* cmd = run_cmd->parsed() ? run_cmd : validate_cmd;
    auto cfg = resolve_config(config);
    apply_overrides(cfg, *cmd, seed, jobs, out, dump);

    const auto report = spde::experiments::validate(cfg);
    if (validate_cmd->parsed() || !report.ok) return print_validation(report);
    for (const auto& w : report.warnings) std::printf("warning: %s\n", w.c_str());

    const auto result = spde::experiments::run(cfg);
    for (const auto& a : result.artifacts)
      std::printf("wrote %s/%s\n", cfg.out_dir.c_str(), a.c_str());
    if (!result.message.empty()) std::printf("%s\n", result.message.c_str());
    std::printf("%s\n", result.exit_code == 0 ? "ok" : "failed");
    return result.exit_code;
  } catch (const spde::experiments::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
