#include <array>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rawb/experiment.hpp"

namespace {

struct Overrides {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  std::optional<std::string> policy;
  std::optional<double> eps;
  std::optional<int> paths;
  std::optional<int> episodes;
};

void add_common_options(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("-c,--config", ov.config_file, "JSON config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", ov.seed, "master RNG seed");
  cmd->add_option("--jobs", ov.jobs, "worker threads");
  cmd->add_option("-o,--out", ov.out_dir, "output directory");
  cmd->add_option("--policy", ov.policy, "restrict to one policy");
  cmd->add_option("--eps", ov.eps, "index bisection tolerance");
  cmd->add_option("--paths", ov.paths, "Monte Carlo paths per evaluation");
  cmd->add_option("--episodes", ov.episodes, "learning episodes");
}

rawb::ExperimentConfig resolve(const std::string& mode, const Overrides& ov) {
  rawb::ExperimentConfig config;
  if (!ov.config_file.empty()) config = rawb::load_config(ov.config_file);
  config.mode = mode;
  if (ov.seed) config.algo.seed = *ov.seed;
  if (ov.jobs) config.algo.jobs = *ov.jobs;
  if (ov.out_dir) config.out_dir = *ov.out_dir;
  if (ov.policy) config.algo.policies = {*ov.policy};
  if (ov.eps) config.algo.eps = *ov.eps;
  if (ov.paths) config.algo.n_paths = *ov.paths;
  if (ov.episodes) config.algo.episodes = *ov.episodes;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-aware restless-bandit planner, baselines, and learner"};
  app.require_subcommand(1);

  const struct {
    const char* name;
    const char* help;
  } modes[] = {
      {"plan", "evaluate index policies and baselines on one instance"},
      {"sweep", "grid of machine instances; improvement aggregates"},
      {"learn", "posterior-sampling learner with regret tracking"},
      {"whittle", "dump index tables for one instance"},
      {"check", "structural assumptions and indexability diagnostics"},
  };

  std::array<Overrides, std::size(modes)> overrides;
  for (std::size_t i = 0; i < std::size(modes); ++i) {
    add_common_options(app.add_subcommand(modes[i].name, modes[i].help), overrides[i]);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < std::size(modes); ++i) {
      if (app.get_subcommand(modes[i].name)->parsed()) {
        const rawb::ExperimentConfig config = resolve(modes[i].name, overrides[i]);
        rawb::run_experiment(config);
        std::cout << "wrote " << config.out_dir << "\n";
        return 0;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
