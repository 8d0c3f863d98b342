#pragma once

#include <cstdint>
#include <vector>

#include "rawb/policy.hpp"

namespace rawb {

// One realized run of the system under a policy.  states[t] is the joint
// state at decision epoch t (plus the terminal state at the end, so states
// has horizon + 1 entries); decisions[t] the activation taken at t.
struct Trajectory {
  std::vector<SystemState> states;
  std::vector<ActivationDecision> decisions;
  Matrix step_rewards;  // (t, arm) realized reward
  Vector totals;        // per-arm cumulative reward J
  Vector utilities;     // per-arm U(J)
  double objective = 0.0;
  double total_reward = 0.0;
};

std::vector<RewardLattice> build_lattices(const BanditInstance& instance);

// Rolls one path.  Draw order is fixed — policy draws first, then one
// transition uniform per arm in id order — so a path is a pure function of
// the rng stream.
Trajectory rollout(const BanditInstance& instance, const std::vector<RewardLattice>& lattices,
                   const SystemPolicy& policy, Rng& rng);

struct EvalSummary {
  int n_paths = 0;
  double objective_mean = 0.0;
  double objective_se = 0.0;
  double total_mean = 0.0;   // mean over paths of the summed raw rewards
  Vector positive_mass;      // per arm: fraction of paths with J >= tau
  std::uint64_t seed = 0;
};

struct EvalResult {
  EvalSummary summary;
  Matrix arm_totals;  // (path, arm) cumulative rewards
};

// Monte Carlo evaluation over n_paths independent streams derived from
// (seed, path index).  Results are identical for any jobs value: each path
// writes its own slot and the reduction is a fixed-order compensated sum.
EvalResult evaluate_paths(const BanditInstance& instance, const SystemPolicy& policy,
                          int n_paths, std::uint64_t seed, int jobs = 1);

EvalSummary evaluate(const BanditInstance& instance, const SystemPolicy& policy, int n_paths,
                     std::uint64_t seed, int jobs = 1);

// 100 * (test - base) / |base|; throws when the baseline objective is zero.
double relative_improvement(const EvalSummary& base, const EvalSummary& test);

struct HistogramRow {
  double left = 0.0;
  double right = 0.0;
  long count = 0;
};

// Fixed-width bins spanning [min(0, data), max(1, data)] so histograms of
// runs with rewards in [0, 1] share a common axis.
std::vector<HistogramRow> histogram(const Vector& values, int bins = 20);

}  // namespace rawb
