#include "rawb/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rawb {

ActivationDecision pick_top(const Vector& scores, int budget, bool allow_idle) {
  const int n = static_cast<int>(scores.size());
  if (budget < 0) throw std::invalid_argument("pick_top: budget must be >= 0");
  for (int i = 0; i < n; ++i) {
    if (std::isnan(scores(i))) throw std::invalid_argument("pick_top: NaN score");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;  // ties go to the lower arm id
  });

  ActivationDecision decision;
  decision.scores = scores;
  const int take = std::min(budget, n);
  for (int k = 0; k < take; ++k) {
    if (allow_idle && scores(order[k]) < 0.0) break;  // order is sorted, rest are lower
    decision.active.push_back(order[k]);
  }
  std::sort(decision.active.begin(), decision.active.end());
  return decision;
}

namespace {

void check_state_shape(const SystemState& state, std::size_t n_arms, int horizon,
                       const char* who) {
  if (state.states.size() != n_arms || state.cum_codes.size() != n_arms)
    throw std::invalid_argument(std::string(who) + ": state size does not match tables");
  if (state.t < 0 || state.t >= horizon)
    throw std::invalid_argument(std::string(who) + ": decision epoch out of range");
}

}  // namespace

ActivationDecision rawip_decide(const std::vector<WhittleTable>& tables,
                                const SystemState& state, int budget, bool allow_idle) {
  if (tables.empty()) throw std::invalid_argument("rawip_decide: no tables");
  check_state_shape(state, tables.size(), tables[0].horizon, "rawip_decide");
  Vector scores(static_cast<Eigen::Index>(tables.size()));
  for (std::size_t i = 0; i < tables.size(); ++i) {
    scores(static_cast<Eigen::Index>(i)) =
        tables[i].at(state.t, state.states[i], state.cum_codes[i]);
  }
  return pick_top(scores, budget, allow_idle);
}

ActivationDecision ssup_decide(const std::vector<StageIndexTable>& tables,
                               const SystemState& state, int budget, bool allow_idle) {
  if (tables.empty()) throw std::invalid_argument("ssup_decide: no tables");
  check_state_shape(state, tables.size(), tables[0].horizon, "ssup_decide");
  Vector scores(static_cast<Eigen::Index>(tables.size()));
  for (std::size_t i = 0; i < tables.size(); ++i) {
    scores(static_cast<Eigen::Index>(i)) = tables[i].index(state.states[i], state.t);
  }
  return pick_top(scores, budget, allow_idle);
}

ActivationDecision RandomPolicy::decide(const SystemState& state, Rng& rng) const {
  if (static_cast<int>(state.states.size()) != n_arms_)
    throw std::invalid_argument("RandomPolicy: state size mismatch");
  // Exchangeable random keys make the activated set uniform over subsets.
  Vector keys(n_arms_);
  for (int i = 0; i < n_arms_; ++i) keys(i) = rng.next_double();
  return pick_top(keys, budget_, false);
}

namespace {

std::vector<std::uint32_t> feasible_masks(int n_arms, int budget) {
  std::vector<std::uint32_t> masks;
  const std::uint32_t limit = 1u << n_arms;
  for (std::uint32_t m = 0; m < limit; ++m) {
    if (std::popcount(m) <= budget) masks.push_back(m);
  }
  return masks;
}

}  // namespace

OracleSolution exact_oracle(const BanditInstance& instance, std::size_t max_table_entries) {
  validate(instance);
  const int N = instance.n_arms();
  const int T = instance.horizon;
  if (N > 22)
    throw std::invalid_argument("exact_oracle: joint table infeasible beyond 22 arms");
  for (const auto& arm : instance.arms) {
    if (arm.active_rewards)
      throw std::invalid_argument("exact_oracle: rewards must not depend on the action");
  }

  OracleSolution sol;
  sol.horizon = T;
  sol.n_arms = N;
  sol.budget = instance.budget;
  sol.lattices.reserve(N);
  for (const auto& arm : instance.arms) sol.lattices.push_back(build_lattice(arm, T));

  // Per-arm successor level index, per stage.
  std::vector<std::vector<std::vector<int>>> succ(N);
  for (int i = 0; i < N; ++i) {
    const auto& lat = sol.lattices[i];
    const int n = instance.arms[i].n_states;
    succ[i].resize(T > 1 ? T - 1 : 0);
    for (int t = 0; t + 1 < T; ++t) {
      succ[i][t].resize(static_cast<std::size_t>(lat.level_count(t)) * n);
      for (int s = 0; s < lat.level_count(t); ++s) {
        for (int x = 0; x < n; ++x) {
          const int j = lat.index_of(t + 1, lat.step(lat.levels[t][s], x));
          if (j < 0) throw std::runtime_error("exact_oracle: successor level missing");
          succ[i][t][static_cast<std::size_t>(s) * n + x] = j;
        }
      }
    }
  }

  // Joint cell layout per stage, with the entry budget enforced up front.
  sol.stages.resize(T);
  std::size_t total_cells = 0;
  for (int t = 0; t < T; ++t) {
    auto& stage = sol.stages[t];
    stage.level_counts.resize(N);
    stage.strides.assign(N, 1);
    std::size_t cells = 1;
    for (int i = N - 1; i >= 0; --i) {
      stage.level_counts[i] = sol.lattices[i].level_count(t);
      stage.strides[i] = cells;
      const std::size_t arm_cells =
          static_cast<std::size_t>(instance.arms[i].n_states) * stage.level_counts[i];
      if (arm_cells == 0 || cells > max_table_entries / arm_cells) {
        std::ostringstream msg;
        msg << "exact_oracle: joint table exceeds " << max_table_entries
            << " entries at t=" << t;
        throw std::invalid_argument(msg.str());
      }
      cells *= arm_cells;
    }
    stage.n_cells = cells;
    total_cells += cells;
    if (total_cells > max_table_entries) {
      std::ostringstream msg;
      msg << "exact_oracle: joint table needs " << total_cells << "+ entries, budget is "
          << max_table_entries;
      throw std::invalid_argument(msg.str());
    }
  }

  const std::vector<std::uint32_t> masks = feasible_masks(N, instance.budget);

  std::vector<int> xs(N), ss(N), succ_idx(N);
  std::vector<double> v_next;
  for (int t = T - 1; t >= 0; --t) {
    auto& stage = sol.stages[t];
    std::vector<double> v_cur(stage.n_cells);
    stage.best_mask.assign(stage.n_cells, 0);

    for (std::size_t cell = 0; cell < stage.n_cells; ++cell) {
      // Decode per-arm (x, s) from the mixed-radix cell index.
      std::size_t rem = cell;
      for (int i = 0; i < N; ++i) {
        const std::size_t code = rem / stage.strides[i];
        rem %= stage.strides[i];
        xs[i] = static_cast<int>(code) / stage.level_counts[i];
        ss[i] = static_cast<int>(code) % stage.level_counts[i];
      }

      if (t == T - 1) {
        // Terminal stage: utilities are action-free, every mask ties; keep
        // the all-passive mask.
        double total = 0.0;
        for (int i = 0; i < N; ++i) {
          const double s_val = sol.lattices[i].value_of(sol.lattices[i].levels[t][ss[i]]);
          total += eval_utility(instance.utilities[i], s_val + instance.arms[i].rewards(xs[i]));
        }
        v_cur[cell] = total;
        stage.best_mask[cell] = 0;
        continue;
      }

      for (int i = 0; i < N; ++i) {
        succ_idx[i] = succ[i][t][static_cast<std::size_t>(ss[i]) * instance.arms[i].n_states +
                                 xs[i]];
      }

      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t best_mask = 0;
      for (const std::uint32_t mask : masks) {
        // Expectation over the joint next state: odometer over arms with a
        // running probability product.
        double expect = 0.0;
        std::vector<int> nx(N, 0);
        for (;;) {
          double prob = 1.0;
          std::size_t next_cell = 0;
          for (int i = 0; i < N && prob > 0.0; ++i) {
            const int a = (mask >> i) & 1u;
            prob *= instance.arms[i].transitions[a](xs[i], nx[i]);
            next_cell += sol.stages[t + 1].strides[i] *
                         (static_cast<std::size_t>(nx[i]) * sol.stages[t + 1].level_counts[i] +
                          succ_idx[i]);
          }
          if (prob > 0.0) expect += prob * v_next[next_cell];
          int d = N - 1;
          while (d >= 0 && ++nx[d] == instance.arms[d].n_states) nx[d--] = 0;
          if (d < 0) break;
        }
        if (expect > best) {
          best = expect;
          best_mask = mask;
        }
      }
      v_cur[cell] = best;
      stage.best_mask[cell] = best_mask;
    }
    v_next = std::move(v_cur);
  }

  std::size_t start_cell = 0;
  for (int i = 0; i < N; ++i) {
    const int s0 = sol.lattices[i].index_of(0, sol.lattices[i].zero_code());
    start_cell += sol.stages[0].strides[i] *
                  (static_cast<std::size_t>(instance.arms[i].initial_state) *
                       sol.stages[0].level_counts[i] +
                   s0);
  }
  sol.value = v_next[start_cell];
  return sol;
}

std::uint32_t OracleSolution::mask_at(const SystemState& state) const {
  if (state.t < 0 || state.t >= horizon)
    throw std::invalid_argument("OracleSolution: decision epoch out of range");
  if (static_cast<int>(state.states.size()) != n_arms)
    throw std::invalid_argument("OracleSolution: state size mismatch");
  const Stage& stage = stages[state.t];
  std::size_t cell = 0;
  for (int i = 0; i < n_arms; ++i) {
    const int s_idx = lattices[i].index_of(state.t, state.cum_codes[i]);
    if (s_idx < 0) throw std::runtime_error("OracleSolution: cumulative level missing");
    cell += stage.strides[i] *
            (static_cast<std::size_t>(state.states[i]) * stage.level_counts[i] + s_idx);
  }
  return stage.best_mask[cell];
}

ActivationDecision OraclePolicy::decide(const SystemState& state, Rng&) const {
  const std::uint32_t mask = solution_->mask_at(state);
  ActivationDecision decision;
  decision.scores = Vector::Zero(solution_->n_arms);
  for (int i = 0; i < solution_->n_arms; ++i) {
    if ((mask >> i) & 1u) {
      decision.active.push_back(i);
      decision.scores(i) = 1.0;
    }
  }
  return decision;
}

}  // namespace rawb
