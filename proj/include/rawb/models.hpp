#pragma once

#include <array>
#include <optional>
#include <string>

#include "rawb/rng.hpp"
#include "rawb/types.hpp"

namespace rawb {

// One restless arm: controlled Markov chain with a passive (0) and an active
// (1) transition kernel plus a per-state reward.  Rewards are earned every
// step regardless of the action taken; active_rewards exists only so the
// structural checker can flag action-dependent rewards — the solvers refuse
// such arms.
struct ArmModel {
  int n_states = 0;
  std::array<Matrix, 2> transitions;  // transitions[a](x, x')
  Vector rewards;                     // r(x)
  std::optional<Vector> active_rewards;
  int initial_state = 0;

  const Matrix& P(int a) const { return transitions[a]; }
  double reward(int x, int a) const {
    return (a == 1 && active_rewards) ? (*active_rewards)(x) : rewards(x);
  }
};

// Throws std::invalid_argument on malformed arms: negative entries, rows not
// summing to 1 within kProbTol, non-finite rewards, bad initial state.
void validate(const ArmModel& arm);

enum class UtilityFamily : int {
  kIndicator = 1,       // 1[J >= tau]
  kPowerShortfall = 2,  // 1 - tau^(-1/o) * max(0, tau - J)^(1/o)
  kSigmoid = 3,         // (1 + e^(-o(1-tau))) / (1 + e^(-o(J-tau)))
};

struct UtilitySpec {
  UtilityFamily family = UtilityFamily::kIndicator;
  double tau = 0.5;
  double order = 1.0;  // ignored by kIndicator
};

void validate(const UtilitySpec& u);

// U(J): nondecreasing in J with range within [0, 1] for all three families.
double eval_utility(const UtilitySpec& u, double total_reward);

struct BanditInstance {
  std::vector<ArmModel> arms;
  std::vector<UtilitySpec> utilities;  // one per arm
  int horizon = 1;
  int budget = 1;

  int n_arms() const { return static_cast<int>(arms.size()); }
};

void validate(const BanditInstance& instance);

// Machine-maintenance arm templates, families 1-4.  States order themselves
// worst (0) to best (n-1); rewards are x / ((n-1) * horizon) so a full
// horizon spent in the best state accumulates exactly 1.  Family parameter
// ranges are enforced: 1 needs p in [0,1]; 2 needs p,p2 in [0,1] with
// p > p2; 3 needs p in [0,0.5]; 4 needs p in [0, 1/(n-1)].
ArmModel make_machine_arm(int n_states, double p, int family, int horizon,
                          std::optional<double> p2 = std::nullopt);

// Interval bounds per transition entry for the three-state patient arm
// (states DEAD=0, PROGRESSING=1, STABLE=2).
struct PatientRanges {
  // lo[a](x, j) / hi[a](x, j) bound the probability of the (x -> j)
  // transition under action a.
  std::array<Matrix, 2> lo;
  std::array<Matrix, 2> hi;
};

// Draws each row uniformly within its bounds, forces DEAD absorbing under
// both actions, renormalizes rows by their sum.  Throws when a row's upper
// bounds cannot reach total mass 1.  Rewards are [0, 1/(2*horizon),
// 1/horizon]; initial state defaults to STABLE.
ArmModel make_patient_arm(int horizon, Rng& rng, const PatientRanges& ranges);

// Tail mass q(k | x, a) = sum_{z >= k} P(z | x, a); q(0|x,a) == 1.
double tail_mass(const Matrix& P, int x, int k);

// Structural conditions under which the index policy is known to behave:
// each flag carries the first counterexample found when it fails.
struct Assumption1Report {
  struct Witness {
    int x1 = -1, x2 = -1, a1 = -1, a2 = -1, k = -1;
  };
  struct Flag {
    bool ok = true;
    Witness witness;  // meaningful only when !ok
  };

  Flag reward_monotone;       // r(x, a) nondecreasing in x
  Flag q_monotone_in_x;       // q(k|x,a) nondecreasing in x
  Flag reward_superadditive;  // r(x1,a1)+r(x2,a2) >= r(x1,a2)+r(x2,a1), x1>=x2, a1>=a2
  Flag q_superadditive;       // same form for q(k|.,.) at every k
  Flag q_monotone_in_a;       // q(k|x,1) >= q(k|x,0)
  Flag reward_action_free;    // r(x,1) == r(x,0)

  bool all_hold() const {
    return reward_monotone.ok && q_monotone_in_x.ok && reward_superadditive.ok &&
           q_superadditive.ok && q_monotone_in_a.ok && reward_action_free.ok;
  }
};

Assumption1Report check_assumption1(const ArmModel& arm);

}  // namespace rawb
