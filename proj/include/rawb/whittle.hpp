#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rawb/augment.hpp"
#include "rawb/models.hpp"
#include "rawb/types.hpp"

namespace rawb {

// Solves the penalized arm at a given penalty and returns the flat optimal
// policy (1 = activate).  The flat layout is owned by whichever solver
// produced the callable; the sweep below only needs policy equality and
// per-entry activity.
using PolicySolver = std::function<std::vector<std::uint8_t>(double)>;

// Smallest penalty in (lambda_l, ub] at which the optimal policy changes,
// located by bisection to within eps (loop runs while the bracket exceeds
// eps).  Requires the policy at lambda_l; the policy at ub may be passed to
// save one solve.  When the policies at both ends already agree the upper
// bound itself is returned.  Returns the penalty together with the policy
// just above the change point.
std::pair<double, std::vector<std::uint8_t>> critical_penalty(
    const PolicySolver& solve, const std::vector<std::uint8_t>& policy_at_lower,
    double lambda_l, double ub, double eps,
    const std::vector<std::uint8_t>* policy_at_ub = nullptr);

// Index computation over a flat table: walk the penalty upward, recording for
// each entry the first penalty at which it turns passive.  Entries already
// passive at lb are assigned lb.  A missing upper bound is found by doubling
// from 1 + eps until the policy is fully passive.  Throws when an entry flips
// back from passive to active (no index exists there) or when ub is reached
// with active entries remaining.
struct WhittleSweep {
  std::vector<double> index;
  double lb = 0.0;
  double ub = 0.0;
  double eps = 0.0;
  std::vector<int> passive_counts;  // passive-set size after each accepted step
};

WhittleSweep whittle_sweep(const PolicySolver& solve, std::size_t table_size, double lb,
                           std::optional<double> ub, double eps);

// Risk-aware index table over (t, x, s-level) for one arm.
struct WhittleTable {
  int arm_id = 0;
  int horizon = 0;
  int n_states = 0;
  RewardLattice lattice;
  std::vector<Matrix> index;  // index[t](x, s_idx)
  double eps = 0.0;
  double lb = 0.0;
  double ub = 0.0;
  std::vector<int> passive_counts;

  // Index at the (t, x, cumulative-code) triple; throws when the level is
  // not part of the lattice at t.
  double at(int t, int x, std::int64_t code) const;
};

WhittleTable compute_whittle(const ArmModel& arm, const UtilitySpec& utility, int horizon,
                             double lb = 0.0, std::optional<double> ub = std::nullopt,
                             double eps = 1e-4);

// Same machinery with the terminal utility replaced by the identity, i.e. a
// risk-neutral index.  For action-free rewards the result is constant across
// cumulative levels.
WhittleTable compute_neutral_whittle(const ArmModel& arm, int horizon, double lb = 0.0,
                                     std::optional<double> ub = std::nullopt,
                                     double eps = 1e-4);

// Stage-wise-utility baseline: indices for the plain arm whose per-step
// reward is U(horizon * r(x)) / horizon.
struct StageIndexTable {
  int arm_id = 0;
  int horizon = 0;
  int n_states = 0;
  Matrix index;  // index(x, t)
  double eps = 0.0;
  double lb = 0.0;
  double ub = 0.0;
};

StageIndexTable compute_ssup_index(const ArmModel& arm, const UtilitySpec& utility,
                                   int horizon, double lb = 0.0,
                                   std::optional<double> ub = std::nullopt,
                                   double eps = 1e-4);

// Checks that passive sets only grow along an increasing penalty grid.
struct IndexabilityReport {
  int arm_id = 0;
  std::vector<double> lambda_grid;
  bool monotone = true;
  struct Violation {
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    int t = -1;
    int x = -1;
    double s_value = 0.0;
  };
  std::optional<Violation> first_violation;
};

IndexabilityReport verify_indexability(const ArmModel& arm, const UtilitySpec& utility,
                                       int horizon, std::vector<double> lambda_grid);

// Doubles from 1 + eps until the optimal policy is all-passive; used when no
// explicit upper bound is supplied.
double find_passive_bound(const PolicySolver& solve, double eps);

}  // namespace rawb
