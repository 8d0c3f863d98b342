#pragma once

// Independent reference implementations used to cross-check the library.
// They deliberately share no code with the solvers under test: the single-arm
// value is a plain recursion over state paths with the running reward kept as
// an exact double, and indices are located by scanning a dense penalty grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "rawb/augment.hpp"
#include "rawb/models.hpp"
#include "rawb/rng.hpp"
#include "rawb/whittle.hpp"

namespace rawb::testutil {

// Optimal penalized value of one arm by explicit recursion over the state
// tree, carrying the running reward as a plain double.  Exponential in the
// horizon; only for small arms.
inline double brute_arm_value(const ArmModel& arm, const std::function<double(double)>& utility,
                              int horizon, double lambda, int t, int x, double cum) {
  const double cum_next = cum + arm.rewards(x);
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    double expect;
    if (t + 1 == horizon) {
      expect = utility(cum_next);
    } else {
      expect = 0.0;
      for (int y = 0; y < arm.n_states; ++y) {
        const double p = arm.P(a)(x, y);
        if (p > 0.0)
          expect += p * brute_arm_value(arm, utility, horizon, lambda, t + 1, y, cum_next);
      }
    }
    best = std::max(best, expect - lambda / horizon * a);
  }
  return best;
}

inline double brute_arm_value(const ArmModel& arm, const std::function<double(double)>& utility,
                              int horizon, double lambda) {
  return brute_arm_value(arm, utility, horizon, lambda, 0, arm.initial_state, 0.0);
}

// First grid penalty at which each flat entry goes passive.  Entries active
// through the whole grid stay NaN.
inline std::vector<double> grid_scan_index(
    const std::function<std::vector<std::uint8_t>(double)>& solve, std::size_t table_size,
    double lb, double ub, double step) {
  std::vector<double> index(table_size, std::numeric_limits<double>::quiet_NaN());
  for (double lam = lb; lam <= ub + step * 0.5; lam += step) {
    const std::vector<std::uint8_t> policy = solve(lam);
    for (std::size_t e = 0; e < table_size; ++e) {
      if (std::isnan(index[e]) && policy[e] == 0) index[e] = lam;
    }
  }
  return index;
}

// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// Critical distance at significance 0.01.
inline double ks_critical(std::size_t n, std::size_t m) {
  return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

// Random arm with rewards on the dyadic lattice k/32 (k in [-2, 8]), so every
// cumulative sum is exact in binary floating point and the reference recursion
// and the lattice solver see bit-identical running rewards.
inline ArmModel random_arm(Rng& rng, int n_states) {
  ArmModel arm;
  arm.n_states = n_states;
  arm.rewards = Vector(n_states);
  for (int x = 0; x < n_states; ++x) {
    arm.rewards(x) = (rng.next_int(11) - 2) / 32.0;  // k/32, k in [-2, 8]
  }
  for (int a = 0; a < 2; ++a) {
    Matrix P(n_states, n_states);
    for (int x = 0; x < n_states; ++x) {
      double row_sum = 0.0;
      for (int y = 0; y < n_states; ++y) {
        P(x, y) = rng.next_uniform(0.05, 1.0);
        row_sum += P(x, y);
      }
      P.row(x) /= row_sum;
    }
    arm.transitions[a] = std::move(P);
  }
  arm.initial_state = rng.next_int(n_states);
  validate(arm);
  return arm;
}

// Random continuous utility; tau avoids the reward lattice so indicator
// utilities never sit on a knife edge.
inline UtilitySpec random_utility(Rng& rng) {
  UtilitySpec u;
  const int family = 1 + rng.next_int(3);
  u.family = static_cast<UtilityFamily>(family);
  u.tau = rng.next_uniform(0.15, 0.85);
  u.order = family == 1 ? 1.0 : rng.next_uniform(2.0, 16.0);
  return u;
}

}  // namespace rawb::testutil
