#include "rawb/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rawb {

namespace {

bool all_passive(const std::vector<std::uint8_t>& pol) {
  return std::all_of(pol.begin(), pol.end(), [](std::uint8_t a) { return a == 0; });
}

}  // namespace

double find_passive_bound(const PolicySolver& solve, double eps) {
  double lambda = 1.0 + eps;
  for (int i = 0; i < 64; ++i) {
    if (all_passive(solve(lambda))) return lambda;
    lambda *= 2.0;
  }
  throw std::runtime_error(
      "find_passive_bound: no fully passive policy found while doubling the penalty");
}

std::pair<double, std::vector<std::uint8_t>> critical_penalty(
    const PolicySolver& solve, const std::vector<std::uint8_t>& policy_at_lower,
    double lambda_l, double ub, double eps, const std::vector<std::uint8_t>* policy_at_ub) {
  if (!(eps > 0.0)) throw std::invalid_argument("critical_penalty: eps must be positive");
  if (!(ub > lambda_l))
    throw std::invalid_argument("critical_penalty: ub must exceed lambda_l");

  std::vector<std::uint8_t> pol_u = policy_at_ub ? *policy_at_ub : solve(ub);
  if (pol_u == policy_at_lower) return {ub, std::move(pol_u)};

  double lo = lambda_l;
  double hi = ub;
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    std::vector<std::uint8_t> pol_m = solve(mid);
    if (pol_m == policy_at_lower) {
      lo = mid;
    } else {
      hi = mid;
      pol_u = std::move(pol_m);
    }
  }
  return {hi, std::move(pol_u)};
}

WhittleSweep whittle_sweep(const PolicySolver& solve, std::size_t table_size, double lb,
                           std::optional<double> ub, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("whittle_sweep: eps must be positive");
  if (!std::isfinite(lb)) throw std::invalid_argument("whittle_sweep: lb must be finite");

  WhittleSweep sweep;
  sweep.lb = lb;
  sweep.eps = eps;
  sweep.ub = ub ? *ub : find_passive_bound(solve, eps);
  if (!(sweep.ub > lb)) throw std::invalid_argument("whittle_sweep: ub must exceed lb");

  std::vector<std::uint8_t> cur = solve(lb);
  if (cur.size() != table_size)
    throw std::invalid_argument("whittle_sweep: solver table size mismatch");
  const std::vector<std::uint8_t> pol_ub = solve(sweep.ub);

  sweep.index.assign(table_size, std::numeric_limits<double>::quiet_NaN());
  // Entries the penalty never has to push out of the passive set sit at the
  // lower bound by convention.
  std::size_t passive = 0;
  for (std::size_t i = 0; i < table_size; ++i) {
    if (cur[i] == 0) {
      sweep.index[i] = lb;
      ++passive;
    }
  }
  sweep.passive_counts.push_back(static_cast<int>(passive));

  double lambda_l = lb;
  std::size_t guard = 0;
  while (passive < table_size) {
    if (++guard > table_size + 1)
      throw std::runtime_error("whittle_sweep: did not converge (non-monotone policy?)");
    auto [lambda_c, pol_c] = critical_penalty(solve, cur, lambda_l, sweep.ub, eps, &pol_ub);
    if (pol_c == cur) {
      std::ostringstream msg;
      msg << "whittle_sweep: " << table_size - passive
          << " entries still active at the upper bound " << sweep.ub
          << "; no index exists under this bound";
      throw std::runtime_error(msg.str());
    }
    for (std::size_t i = 0; i < table_size; ++i) {
      if (cur[i] == 0 && pol_c[i] == 1) {
        std::ostringstream msg;
        msg << "whittle_sweep: entry " << i << " re-entered the active set near penalty "
            << lambda_c << "; arm is not indexable there";
        throw std::runtime_error(msg.str());
      }
      if (cur[i] == 1 && pol_c[i] == 0) {
        sweep.index[i] = lambda_c;
        ++passive;
      }
    }
    cur = std::move(pol_c);
    lambda_l = lambda_c;
    sweep.passive_counts.push_back(static_cast<int>(passive));
  }
  return sweep;
}

double WhittleTable::at(int t, int x, std::int64_t code) const {
  const int s_idx = lattice.index_of(t, code);
  if (s_idx < 0) {
    std::ostringstream msg;
    msg << "WhittleTable: cumulative level code " << code << " absent at t=" << t;
    throw std::runtime_error(msg.str());
  }
  return index[t](x, s_idx);
}

namespace {

WhittleTable table_from_sweep(const PenalizedArmSolver& solver, const WhittleSweep& sweep) {
  WhittleTable table;
  table.horizon = solver.horizon();
  table.n_states = solver.arm().n_states;
  table.lattice = solver.lattice();
  table.eps = sweep.eps;
  table.lb = sweep.lb;
  table.ub = sweep.ub;
  table.passive_counts = sweep.passive_counts;
  table.index.resize(table.horizon);
  for (int t = 0; t < table.horizon; ++t) {
    const int L = table.lattice.level_count(t);
    table.index[t].resize(table.n_states, L);
    for (int x = 0; x < table.n_states; ++x) {
      for (int s = 0; s < L; ++s) {
        table.index[t](x, s) = sweep.index[solver.flat_index(t, x, s)];
      }
    }
  }
  return table;
}

}  // namespace

WhittleTable compute_whittle(const ArmModel& arm, const UtilitySpec& utility, int horizon,
                             double lb, std::optional<double> ub, double eps) {
  PenalizedArmSolver solver(arm, utility_function(utility), horizon);
  const PolicySolver fn = [&solver](double lambda) { return solver.solve_policy(lambda); };
  return table_from_sweep(solver, whittle_sweep(fn, solver.table_size(), lb, ub, eps));
}

WhittleTable compute_neutral_whittle(const ArmModel& arm, int horizon, double lb,
                                     std::optional<double> ub, double eps) {
  PenalizedArmSolver solver(arm, identity_utility(), horizon);
  const PolicySolver fn = [&solver](double lambda) { return solver.solve_policy(lambda); };
  return table_from_sweep(solver, whittle_sweep(fn, solver.table_size(), lb, ub, eps));
}

StageIndexTable compute_ssup_index(const ArmModel& arm, const UtilitySpec& utility,
                                   int horizon, double lb, std::optional<double> ub,
                                   double eps) {
  validate(arm);
  if (horizon < 1) throw std::invalid_argument("compute_ssup_index: horizon must be >= 1");
  Vector stage(arm.n_states);
  for (int x = 0; x < arm.n_states; ++x) {
    stage(x) = eval_utility(utility, horizon * arm.rewards(x)) / horizon;
  }
  StageArmSolver solver(arm, stage, horizon);
  const PolicySolver fn = [&solver](double lambda) { return solver.solve_policy(lambda); };
  const WhittleSweep sweep = whittle_sweep(fn, solver.table_size(), lb, ub, eps);

  StageIndexTable table;
  table.horizon = horizon;
  table.n_states = arm.n_states;
  table.eps = sweep.eps;
  table.lb = sweep.lb;
  table.ub = sweep.ub;
  table.index.resize(arm.n_states, horizon);
  for (int t = 0; t < horizon; ++t) {
    for (int x = 0; x < arm.n_states; ++x) {
      table.index(x, t) = sweep.index[static_cast<std::size_t>(t) * arm.n_states + x];
    }
  }
  return table;
}

IndexabilityReport verify_indexability(const ArmModel& arm, const UtilitySpec& utility,
                                       int horizon, std::vector<double> lambda_grid) {
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > lambda_grid[i - 1]))
      throw std::invalid_argument("verify_indexability: grid must increase strictly");
  }

  IndexabilityReport report;
  report.lambda_grid = std::move(lambda_grid);

  PenalizedArmSolver solver(arm, utility_function(utility), horizon);
  std::vector<std::uint8_t> prev;
  double prev_lambda = 0.0;
  for (const double lambda : report.lambda_grid) {
    std::vector<std::uint8_t> cur = solver.solve_policy(lambda);
    if (!prev.empty()) {
      for (std::size_t i = 0; i < cur.size(); ++i) {
        if (prev[i] == 0 && cur[i] == 1) {
          const auto c = solver.decode(static_cast<int>(i));
          report.monotone = false;
          report.first_violation = {prev_lambda, lambda, c.t, c.x,
                                    solver.lattice().value_of(
                                        solver.lattice().levels[c.t][c.s_idx])};
          return report;
        }
      }
    }
    prev = std::move(cur);
    prev_lambda = lambda;
  }
  return report;
}

}  // namespace rawb
