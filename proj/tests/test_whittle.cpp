#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "helpers.hpp"
#include "rawb/augment.hpp"
#include "rawb/whittle.hpp"

using namespace rawb;

namespace {

const UtilitySpec kIndicatorHalf{UtilityFamily::kIndicator, 0.5, 1.0};

PolicySolver counting_solver(const PenalizedArmSolver& solver, int& calls) {
  return [&solver, &calls](double lambda) {
    ++calls;
    return solver.solve_policy(lambda);
  };
}

}  // namespace

TEST_CASE("critical penalty returns the upper bound when the anchors agree") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 4);
  const PenalizedArmSolver solver(arm, utility_function(kIndicatorHalf), 4);
  const PolicySolver solve = [&solver](double l) { return solver.solve_policy(l); };
  const double ub = find_passive_bound(solve, 1e-4);
  const auto pol_hi = solve(ub);
  const auto pol_higher = solve(ub + 1.0);
  REQUIRE(pol_hi == pol_higher);  // fully passive at both
  const auto [lam, pol] = critical_penalty(solve, pol_hi, ub, ub + 1.0, 1e-4, &pol_higher);
  CHECK(lam == ub + 1.0);
  CHECK(pol == pol_hi);
}

TEST_CASE("bisection runs exactly once when eps is half the bracket") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 4);
  const PenalizedArmSolver solver(arm, utility_function(kIndicatorHalf), 4);
  int calls = 0;
  const PolicySolver solve = counting_solver(solver, calls);
  const auto pol_l = solve(0.0);
  const double ub = find_passive_bound(solve, 1e-4);
  const auto pol_u = solve(ub);
  REQUIRE(pol_l != pol_u);
  calls = 0;
  critical_penalty(solve, pol_l, 0.0, ub, 0.5 * ub, &pol_u);
  CHECK(calls == 1);  // one midpoint solve closes the bracket to eps
}

TEST_CASE("critical penalty validates its arguments") {
  const PolicySolver solve = [](double) { return std::vector<std::uint8_t>{1}; };
  CHECK_THROWS_AS(critical_penalty(solve, {1}, 0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(critical_penalty(solve, {1}, 1.0, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("index table matches a dense penalty scan on small arms") {
  Rng rng(2024);
  const double eps = 1e-4, step = 1e-3;
  for (int trial = 0; trial < 3; ++trial) {
    const ArmModel arm = testutil::random_arm(rng, 3);
    const UtilitySpec u = testutil::random_utility(rng);
    const PenalizedArmSolver solver(arm, utility_function(u), 3);
    const PolicySolver solve = [&solver](double l) { return solver.solve_policy(l); };
    const WhittleSweep sweep = whittle_sweep(solve, solver.table_size(), 0.0, std::nullopt, eps);
    const std::vector<double> scanned =
        testutil::grid_scan_index(solve, solver.table_size(), 0.0, sweep.ub, step);
    for (std::size_t e = 0; e < sweep.index.size(); ++e) {
      CAPTURE(trial);
      CAPTURE(e);
      REQUIRE(std::isfinite(sweep.index[e]));
      if (std::isnan(scanned[e])) continue;  // passive only beyond the scan end
      REQUIRE(std::abs(sweep.index[e] - scanned[e]) <= eps + step);
    }
  }
}

TEST_CASE("one-step horizon indices collapse to the lower bound") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 1);
  const WhittleTable table = compute_whittle(arm, kIndicatorHalf, 1);
  for (int x = 0; x < 3; ++x) {
    CHECK(table.index[0](x, 0) >= 0.0);
    CHECK(table.index[0](x, 0) <= 2e-4);
  }
}

TEST_CASE("index computation is deterministic") {
  const ArmModel arm = make_machine_arm(4, 0.15, 4, 5);
  const WhittleTable a = compute_whittle(arm, kIndicatorHalf, 5);
  const WhittleTable b = compute_whittle(arm, kIndicatorHalf, 5);
  REQUIRE(a.index.size() == b.index.size());
  for (std::size_t t = 0; t < a.index.size(); ++t) {
    CHECK((a.index[t] - b.index[t]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("passive set only grows along the sweep") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 4);
  const PenalizedArmSolver solver(arm, utility_function(kIndicatorHalf), 4);
  const PolicySolver solve = [&solver](double l) { return solver.solve_policy(l); };
  const WhittleSweep sweep = whittle_sweep(solve, solver.table_size(), 0.0, std::nullopt, 1e-4);
  REQUIRE(!sweep.passive_counts.empty());
  for (std::size_t i = 1; i < sweep.passive_counts.size(); ++i) {
    CHECK(sweep.passive_counts[i] > sweep.passive_counts[i - 1]);
  }
  CHECK(sweep.passive_counts.back() == static_cast<int>(solver.table_size()));
}

TEST_CASE("sweep reports when the bound is too small") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 4);
  const PenalizedArmSolver solver(arm, utility_function(kIndicatorHalf), 4);
  const PolicySolver solve = [&solver](double l) { return solver.solve_policy(l); };
  CHECK_THROWS_WITH_AS(whittle_sweep(solve, solver.table_size(), 0.0, 0.01, 1e-4),
                       doctest::Contains("active at the upper bound"), std::runtime_error);
}

TEST_CASE("risk-neutral indices do not depend on the accumulated reward") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 5);
  const WhittleTable table = compute_neutral_whittle(arm, 5);
  for (int t = 0; t < 5; ++t) {
    for (int x = 0; x < 3; ++x) {
      for (int s = 1; s < table.index[t].cols(); ++s) {
        CAPTURE(t);
        CAPTURE(x);
        CAPTURE(s);
        REQUIRE(table.index[t](x, s) == table.index[t](x, 0));
      }
    }
  }
}

TEST_CASE("table lookup rejects levels outside the lattice") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 3);
  const WhittleTable table = compute_whittle(arm, kIndicatorHalf, 3);
  CHECK_NOTHROW(table.at(1, 0, 1));
  CHECK_THROWS_AS(table.at(0, 0, 5), std::runtime_error);
}

TEST_CASE("stage-utility index derives from the saturated stage rewards") {
  // alpha=1, tau=0.5, T=5, |X|=3: U(T r(x)) / T = [0, 0.2, 0.2].
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 5);
  const StageIndexTable table = compute_ssup_index(arm, kIndicatorHalf, 5);
  Vector stage(3);
  stage << 0.0, 0.2, 0.2;
  const StageArmSolver ref(arm, stage, 5);
  const PolicySolver solve = [&ref](double l) { return ref.solve_policy(l); };
  const WhittleSweep sweep = whittle_sweep(solve, 15, 0.0, std::nullopt, 1e-4);
  for (int t = 0; t < 5; ++t) {
    for (int x = 0; x < 3; ++x) {
      CHECK(table.index(x, t) == sweep.index[static_cast<std::size_t>(t) * 3 + x]);
    }
  }
}

TEST_CASE("structured arms verify as indexable on a dense grid") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 4);
  std::vector<double> grid;
  for (int i = 0; i < 50; ++i) grid.push_back(i * 0.1);
  const IndexabilityReport report = verify_indexability(arm, kIndicatorHalf, 4, grid);
  CHECK(report.monotone);
  CHECK(!report.first_violation.has_value());

  const IndexabilityReport single = verify_indexability(arm, kIndicatorHalf, 4, {0.3});
  CHECK(single.monotone);
}

TEST_CASE("indexability grid must increase strictly") {
  const ArmModel arm = make_machine_arm(3, 0.2, 4, 4);
  CHECK_THROWS_AS(verify_indexability(arm, kIndicatorHalf, 4, {0.2, 0.2}),
                  std::invalid_argument);
}
