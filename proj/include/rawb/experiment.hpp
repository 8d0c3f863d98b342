#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rawb/learn.hpp"
#include "rawb/models.hpp"
#include "rawb/serialize.hpp"
#include "rawb/sim.hpp"

namespace rawb {

// Instance description as it appears in config files.  Machine instances
// space the rate parameter linearly across arms within p_range (defaulting
// to [0.1/n_states, 1/n_states]); patient instances draw each arm from the
// interval file.
struct InstanceConfig {
  std::string kind = "machine";  // machine | patient
  int family = 4;
  int n_states = 3;
  int n_arms = 6;
  int budget = 2;
  int horizon = 5;
  std::optional<std::array<double, 2>> p_range;
  std::optional<std::array<double, 2>> p2_range;  // family 2 only; default p/2
  std::string ranges_file;                        // patient only
  UtilitySpec utility;
  std::optional<int> initial_state;
};

struct AlgoConfig {
  double eps = 1e-4;
  int n_paths = 100;
  int episodes = 200;
  int batches = 10;
  int eval_paths = 100;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool allow_idle = false;
  std::string prior = "dirichlet";  // dirichlet | machine_rate
  int rate_grid_points = 41;        // machine_rate prior resolution
  std::vector<std::string> policies = {"rawip", "neutral", "ssup"};
  std::optional<double> dump_lambda;  // whittle mode: also dump one solution
};

// Sweep axes; every factor combination becomes one cell.  Utilities are
// (alpha, order) pairs crossed with the tau axis; family-4 machine arms with
// n_arms = multiplier * n_states and budget = floor(fraction * n_arms).
struct SweepGrid {
  std::vector<int> horizons = {3, 5};
  std::vector<int> state_sizes = {2, 3};
  std::vector<int> arm_multipliers = {3};
  std::vector<double> budget_fractions = {0.4};
  std::vector<std::pair<int, double>> utility_families = {
      {1, 0.0}, {2, 4.0}, {2, 8.0}, {2, 16.0}, {3, 4.0}, {3, 8.0}, {3, 16.0}};
  std::vector<double> taus = {0.3, 0.5, 0.7};
};

struct ExperimentConfig {
  std::string mode = "plan";  // plan | sweep | learn | whittle | check
  InstanceConfig instance;
  AlgoConfig algo;
  SweepGrid sweep;
  std::string out_dir = "out";
};

ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& config);
// Parse a config file; a relative ranges_file resolves against the config
// file's directory, so configs work from any working directory.
ExperimentConfig load_config(const std::filesystem::path& file);

// Deterministic instance construction; the seed only matters for patient
// draws (stream (seed, kInstance, arm)).
BanditInstance build_instance(const InstanceConfig& config, std::uint64_t seed);

// Each run mode writes its outputs under config.out_dir, always including
// config.json and seed.txt; reruns with equal config produce byte-identical
// files.
void run_plan(const ExperimentConfig& config);
void run_sweep(const ExperimentConfig& config);
void run_learn(const ExperimentConfig& config);
void run_whittle(const ExperimentConfig& config);
void run_check(const ExperimentConfig& config);

// Dispatch on config.mode.
void run_experiment(const ExperimentConfig& config);

}  // namespace rawb
