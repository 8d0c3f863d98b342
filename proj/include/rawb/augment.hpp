#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "rawb/models.hpp"
#include "rawb/types.hpp"

namespace rawb {

// Reachable cumulative-reward levels per step.  Levels are stored as integer
// codes with value = origin + code * quantum; when every reward is an exact
// multiple of a common quantum, stepping is pure integer addition, so lattice
// membership and hashing are exact.  When no quantum down to 1e-9 exists the
// lattice falls back to a uniform grid (approximate = true) and each step
// snaps to the nearest grid point.
struct RewardLattice {
  double quantum = 1.0;
  double origin = 0.0;
  bool approximate = false;
  int grid_size = 0;                         // only meaningful when approximate
  Vector state_rewards;                      // copy of r(x)
  std::vector<std::int64_t> reward_codes;    // exact mode: r(x) = reward_codes[x] * quantum
  std::vector<std::vector<std::int64_t>> levels;  // levels[t], sorted, t = 0..horizon

  double value_of(std::int64_t code) const { return origin + code * quantum; }
  std::int64_t zero_code() const;
  std::int64_t step(std::int64_t code, int x) const;
  // Position of code within levels[t]; -1 when absent.
  int index_of(int t, std::int64_t code) const;
  int level_count(int t) const { return static_cast<int>(levels[t].size()); }
};

// Builds the lattice for one arm over `horizon` steps (horizon >= 1).
// grid_levels controls the fallback resolution.
RewardLattice build_lattice(const ArmModel& arm, int horizon, int grid_levels = 200);

using UtilityFn = std::function<double(double)>;

UtilityFn utility_function(const UtilitySpec& u);
UtilityFn identity_utility();

// Optimal solution of one penalty-relaxed arm: tables over (t, x, s-level).
struct ArmSolution {
  int horizon = 0;
  double lambda = 0.0;
  RewardLattice lattice;
  std::vector<Matrix> values;      // values[t](x, s_idx), t = 0..horizon-1
  std::vector<PolicyGrid> policy;  // 1 = activate
  int initial_state = 0;
  double initial_value = 0.0;      // V_0(x0, s = 0)
};

// Finite-horizon solver for the cumulative-reward-augmented arm under an
// activation penalty lambda / horizon per active step.  The terminal utility
// U(s + r(x)) is folded into the last decision stage, so V_horizon is never
// materialized.  Construction precomputes the lattice, successor table and
// terminal utilities; solve() is then cheap enough to sit inside a bisection
// loop.  Ties within kTieTol break toward activating.
class PenalizedArmSolver {
 public:
  PenalizedArmSolver(ArmModel arm, UtilityFn terminal_utility, int horizon,
                     int grid_levels = 200);

  ArmSolution solve(double lambda) const;
  // Policy-only fast path used by index computation; flat layout below.
  std::vector<std::uint8_t> solve_policy(double lambda) const;

  // Flat layout: offset(t) + x * level_count(t) + s_idx.
  int table_size() const { return table_size_; }
  int flat_index(int t, int x, int s_idx) const {
    return offsets_[t] + x * lattice_.level_count(t) + s_idx;
  }
  struct Coord {
    int t, x, s_idx;
  };
  Coord decode(int flat) const;

  const RewardLattice& lattice() const { return lattice_; }
  const ArmModel& arm() const { return arm_; }
  int horizon() const { return horizon_; }

 private:
  template <bool kKeepTables>
  void run(double lambda, ArmSolution* out, std::vector<std::uint8_t>* policy) const;

  ArmModel arm_;
  int horizon_;
  RewardLattice lattice_;
  std::vector<std::vector<int>> succ_;  // succ_[t][s_idx * n + x] -> s index at t+1
  Matrix terminal_utility_;             // U(s + r(x)) over levels[horizon-1]
  std::vector<int> offsets_;
  int table_size_ = 0;
};

ArmSolution solve_penalized(const ArmModel& arm, const UtilitySpec& utility, int horizon,
                            double lambda);

// Plain additive finite-horizon arm: stage reward rho(x) every step, same
// activation penalty, no reward augmentation.  This is the machinery behind
// the stage-wise-utility baseline index.
struct StageSolution {
  int horizon = 0;
  double lambda = 0.0;
  Matrix values;      // values(x, t)
  PolicyGrid policy;  // policy(x, t)
  double initial_value = 0.0;
};

class StageArmSolver {
 public:
  StageArmSolver(ArmModel arm, Vector stage_rewards, int horizon);

  StageSolution solve(double lambda) const;
  std::vector<std::uint8_t> solve_policy(double lambda) const;  // t * n + x layout

  int table_size() const { return horizon_ * arm_.n_states; }
  const ArmModel& arm() const { return arm_; }
  int horizon() const { return horizon_; }

 private:
  ArmModel arm_;
  Vector stage_rewards_;
  int horizon_;
};

}  // namespace rawb
