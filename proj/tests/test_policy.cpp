#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "helpers.hpp"
#include "rawb/policy.hpp"
#include "rawb/sim.hpp"

using namespace rawb;

namespace {

const UtilitySpec kIndicatorHalf{UtilityFamily::kIndicator, 0.5, 1.0};

// Two-state arm: passive decays to the absorbing zero-reward state, active
// holds the rewarding state.  The index at the rewarding state is horizon *
// r(1), so arms are ranked purely by their reward.
ArmModel hold_or_decay_arm(double reward) {
  ArmModel arm;
  arm.n_states = 2;
  arm.rewards = Vector(2);
  arm.rewards << 0.0, reward;
  Matrix P0(2, 2), P1(2, 2);
  P0 << 1, 0, 1, 0;
  P1 << 1, 0, 0, 1;
  arm.transitions[0] = P0;
  arm.transitions[1] = P1;
  arm.initial_state = 1;
  validate(arm);
  return arm;
}

SystemState initial_state(const BanditInstance& instance) {
  SystemState s;
  s.t = 0;
  s.states.resize(instance.arms.size());
  s.cum_codes.assign(instance.arms.size(), 0);
  for (std::size_t i = 0; i < instance.arms.size(); ++i) {
    s.states[i] = instance.arms[i].initial_state;
    s.cum_codes[i] = build_lattice(instance.arms[i], instance.horizon).zero_code();
  }
  return s;
}

}  // namespace

TEST_CASE("top-score selection breaks ties toward the lower arm id") {
  Vector scores(3);
  scores << 0.2, 0.7, 0.7;
  const ActivationDecision one = pick_top(scores, 1, false);
  CHECK(one.active == std::vector<int>{1});
  const ActivationDecision two = pick_top(scores, 2, false);
  CHECK(two.active == std::vector<int>{1, 2});
  const ActivationDecision all = pick_top(scores, 3, false);
  CHECK(all.active == std::vector<int>{0, 1, 2});
  CHECK(pick_top(scores, 0, false).active.empty());
  CHECK(pick_top(scores, 5, false).active.size() == 3);  // budget beyond n saturates
}

TEST_CASE("top-score selection rejects NaN and honors idling") {
  Vector bad(2);
  bad << 0.5, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pick_top(bad, 1, false), std::invalid_argument);
  CHECK_THROWS_AS(pick_top(bad, -1, false), std::invalid_argument);

  Vector mixed(3);
  mixed << 0.5, -0.1, -0.3;
  CHECK(pick_top(mixed, 2, false).active == std::vector<int>{0, 1});
  CHECK(pick_top(mixed, 2, true).active == std::vector<int>{0});
  CHECK(pick_top(mixed, 3, true).active == std::vector<int>{0});
}

TEST_CASE("index rule reads scores straight from the tables") {
  BanditInstance instance;
  instance.arms = {hold_or_decay_arm(0.25), hold_or_decay_arm(0.3)};
  instance.utilities = {kIndicatorHalf, kIndicatorHalf};
  instance.horizon = 2;
  instance.budget = 1;

  std::vector<WhittleTable> tables;
  for (int i = 0; i < 2; ++i) {
    tables.push_back(compute_neutral_whittle(instance.arms[i], 2));
    tables.back().arm_id = i;
  }
  const SystemState s0 = initial_state(instance);
  const ActivationDecision d = rawip_decide(tables, s0, 1);
  CHECK(d.scores(0) == tables[0].at(0, 1, 0));
  CHECK(d.scores(1) == tables[1].at(0, 1, 0));
  // Holding the rewarding state is worth horizon * r(1) = 0.5 vs 0.6.
  CHECK(d.scores(0) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(d.scores(1) == doctest::Approx(0.6).epsilon(1e-3));
  CHECK(d.active == std::vector<int>{1});

  SystemState bad = s0;
  bad.states.pop_back();
  CHECK_THROWS_AS(rawip_decide(tables, bad, 1), std::invalid_argument);
  SystemState late = s0;
  late.t = 2;
  CHECK_THROWS_AS(rawip_decide(tables, late, 1), std::invalid_argument);
}

TEST_CASE("stage-utility rule can rank differently from the risk-neutral rule") {
  // Indicator tau=0.5, T=2: both rewards saturate the stage utility
  // (U(2*0.25) = U(2*0.3) = 1), so the stage-utility arms become identical
  // and the tie goes to arm 0; the risk-neutral rule still sees 0.6 > 0.5.
  BanditInstance instance;
  instance.arms = {hold_or_decay_arm(0.25), hold_or_decay_arm(0.3)};
  instance.utilities = {kIndicatorHalf, kIndicatorHalf};
  instance.horizon = 2;
  instance.budget = 1;

  std::vector<WhittleTable> neutral;
  std::vector<StageIndexTable> stage;
  for (int i = 0; i < 2; ++i) {
    neutral.push_back(compute_neutral_whittle(instance.arms[i], 2));
    neutral.back().arm_id = i;
    stage.push_back(compute_ssup_index(instance.arms[i], kIndicatorHalf, 2));
    stage.back().arm_id = i;
  }
  REQUIRE(stage[0].index(1, 0) == stage[1].index(1, 0));  // saturation erases the gap

  const SystemState s0 = initial_state(instance);
  const ActivationDecision d_neutral = rawip_decide(neutral, s0, 1);
  const ActivationDecision d_stage = ssup_decide(stage, s0, 1);
  CHECK(d_neutral.active == std::vector<int>{1});
  CHECK(d_stage.active == std::vector<int>{0});
}

TEST_CASE("random policy uses exactly the budget and touches every arm") {
  const RandomPolicy policy(5, 2);
  SystemState s;
  s.t = 0;
  s.states.assign(5, 0);
  s.cum_codes.assign(5, 0);
  Rng rng(7);
  std::set<int> seen;
  for (int k = 0; k < 200; ++k) {
    const ActivationDecision d = policy.decide(s, rng);
    REQUIRE(d.active.size() == 2);
    REQUIRE(std::is_sorted(d.active.begin(), d.active.end()));
    REQUIRE(d.active[0] != d.active[1]);
    for (const int a : d.active) {
      REQUIRE(a >= 0);
      REQUIRE(a < 5);
      seen.insert(a);
    }
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("joint oracle on one arm equals the unpenalized single-arm value") {
  BanditInstance instance;
  instance.arms = {make_machine_arm(3, 0.2, 4, 3)};
  instance.utilities = {kIndicatorHalf};
  instance.horizon = 3;
  instance.budget = 1;
  const OracleSolution oracle = exact_oracle(instance);
  const PenalizedArmSolver solver(instance.arms[0], utility_function(kIndicatorHalf), 3);
  CHECK(oracle.value == doctest::Approx(solver.solve(0.0).initial_value).epsilon(1e-10));
}

TEST_CASE("joint oracle decouples when the budget covers every arm") {
  BanditInstance instance;
  instance.arms = {make_machine_arm(3, 0.15, 4, 3), make_machine_arm(3, 0.3, 4, 3)};
  instance.utilities = {kIndicatorHalf, kIndicatorHalf};
  instance.horizon = 3;
  instance.budget = 2;
  const OracleSolution oracle = exact_oracle(instance);
  double decoupled = 0.0;
  for (const auto& arm : instance.arms) {
    decoupled += PenalizedArmSolver(arm, utility_function(kIndicatorHalf), 3)
                     .solve(0.0)
                     .initial_value;
  }
  CHECK(oracle.value == doctest::Approx(decoupled).epsilon(1e-10));
}

TEST_CASE("joint oracle refuses tables beyond its entry budget") {
  BanditInstance instance;
  instance.arms = {make_machine_arm(3, 0.15, 4, 3), make_machine_arm(3, 0.3, 4, 3)};
  instance.utilities = {kIndicatorHalf, kIndicatorHalf};
  instance.horizon = 3;
  instance.budget = 1;
  CHECK_THROWS_AS(exact_oracle(instance, 10), std::invalid_argument);
}

TEST_CASE("oracle rollouts reproduce the oracle value and dominate the index rule") {
  BanditInstance instance;
  instance.arms = {make_machine_arm(3, 0.15, 4, 3), make_machine_arm(3, 0.3, 4, 3)};
  instance.utilities = {kIndicatorHalf, kIndicatorHalf};
  instance.horizon = 3;
  instance.budget = 1;
  const OracleSolution oracle = exact_oracle(instance);

  const OraclePolicy oracle_policy(std::make_shared<OracleSolution>(oracle));
  const EvalSummary oracle_eval = evaluate(instance, oracle_policy, 4000, 17);
  CHECK(std::abs(oracle_eval.objective_mean - oracle.value) <=
        4.0 * oracle_eval.objective_se + 1e-9);

  std::vector<WhittleTable> tables;
  for (int i = 0; i < 2; ++i) {
    tables.push_back(compute_whittle(instance.arms[i], kIndicatorHalf, 3));
    tables.back().arm_id = i;
  }
  const IndexPolicy index_policy(tables, 1);
  const EvalSummary index_eval = evaluate(instance, index_policy, 4000, 17);
  CHECK(oracle.value >= index_eval.objective_mean - 4.0 * index_eval.objective_se);
}

TEST_CASE("oracle decisions agree with the stored action masks") {
  BanditInstance instance;
  instance.arms = {hold_or_decay_arm(0.25), hold_or_decay_arm(0.3)};
  instance.utilities = {kIndicatorHalf, kIndicatorHalf};
  instance.horizon = 2;
  instance.budget = 1;
  const auto solution = std::make_shared<OracleSolution>(exact_oracle(instance));
  const OraclePolicy policy(solution);
  const SystemState s0 = initial_state(instance);
  Rng rng(1);
  const ActivationDecision d = policy.decide(s0, rng);
  const std::uint32_t mask = solution->mask_at(s0);
  for (int i = 0; i < 2; ++i) {
    CHECK(((mask >> i) & 1u) == static_cast<std::uint32_t>(d.is_active(i)));
  }
  REQUIRE(d.active.size() <= 1);
}

TEST_CASE("oracle refuses arms with action-dependent rewards") {
  BanditInstance instance;
  instance.arms = {hold_or_decay_arm(0.25)};
  instance.arms[0].active_rewards = instance.arms[0].rewards;
  instance.utilities = {kIndicatorHalf};
  instance.horizon = 2;
  instance.budget = 1;
  CHECK_THROWS_AS(exact_oracle(instance), std::invalid_argument);
}
