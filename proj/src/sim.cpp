#include "rawb/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rawb {

std::vector<RewardLattice> build_lattices(const BanditInstance& instance) {
  std::vector<RewardLattice> lattices;
  lattices.reserve(instance.arms.size());
  for (const auto& arm : instance.arms) lattices.push_back(build_lattice(arm, instance.horizon));
  return lattices;
}

Trajectory rollout(const BanditInstance& instance, const std::vector<RewardLattice>& lattices,
                   const SystemPolicy& policy, Rng& rng) {
  const int N = instance.n_arms();
  const int T = instance.horizon;
  if (static_cast<int>(lattices.size()) != N)
    throw std::invalid_argument("rollout: one lattice per arm required");

  Trajectory traj;
  traj.states.reserve(T);
  traj.decisions.reserve(T);
  traj.step_rewards.setZero(T, N);
  traj.totals = Vector::Zero(N);
  traj.utilities = Vector::Zero(N);

  SystemState state;
  state.t = 0;
  state.states.resize(N);
  state.cum_codes.resize(N);
  for (int i = 0; i < N; ++i) {
    state.states[i] = instance.arms[i].initial_state;
    state.cum_codes[i] = lattices[i].zero_code();
  }

  for (int t = 0; t < T; ++t) {
    state.t = t;
    traj.states.push_back(state);
    ActivationDecision decision = policy.decide(state, rng);

    for (int i = 0; i < N; ++i) {
      const double r = instance.arms[i].rewards(state.states[i]);
      traj.step_rewards(t, i) = r;
      traj.totals(i) += r;
    }

    SystemState next = state;
    for (int i = 0; i < N; ++i) {
      const int a = decision.is_active(i) ? 1 : 0;
      const double u = rng.next_double();
      next.cum_codes[i] = lattices[i].step(state.cum_codes[i], state.states[i]);
      next.states[i] = sample_categorical(instance.arms[i].P(a).row(state.states[i]), u);
    }
    traj.decisions.push_back(std::move(decision));
    state = std::move(next);
  }
  state.t = T;
  traj.states.push_back(state);  // terminal state, for transition counting

  for (int i = 0; i < N; ++i) {
    traj.utilities(i) = eval_utility(instance.utilities[i], traj.totals(i));
    traj.objective += traj.utilities(i);
    traj.total_reward += traj.totals(i);
  }
  return traj;
}

EvalResult evaluate_paths(const BanditInstance& instance, const SystemPolicy& policy,
                          int n_paths, std::uint64_t seed, int jobs) {
  validate(instance);
  if (n_paths < 1) throw std::invalid_argument("evaluate_paths: n_paths must be >= 1");
  const int N = instance.n_arms();
  const std::vector<RewardLattice> lattices = build_lattices(instance);

  std::vector<double> objectives(n_paths);
  std::vector<double> totals(n_paths);
  EvalResult result;
  result.arm_totals.resize(n_paths, N);

  parallel_for(n_paths, jobs, [&](int p) {
    Rng rng = derive_stream(seed, stream_tag::kPath, static_cast<std::uint64_t>(p));
    const Trajectory traj = rollout(instance, lattices, policy, rng);
    objectives[p] = traj.objective;
    totals[p] = traj.total_reward;
    result.arm_totals.row(p) = traj.totals.transpose();
  });

  // Fixed-order compensated reductions: identical output for any job count.
  KahanSum obj_sum, total_sum;
  for (int p = 0; p < n_paths; ++p) {
    obj_sum.add(objectives[p]);
    total_sum.add(totals[p]);
  }
  const double mean = obj_sum.value() / n_paths;

  KahanSum sq_sum;
  for (int p = 0; p < n_paths; ++p) {
    const double d = objectives[p] - mean;
    sq_sum.add(d * d);
  }
  const double se =
      n_paths > 1 ? std::sqrt(sq_sum.value() / (static_cast<double>(n_paths) * (n_paths - 1)))
                  : 0.0;

  EvalSummary& summary = result.summary;
  summary.n_paths = n_paths;
  summary.objective_mean = mean;
  summary.objective_se = se;
  summary.total_mean = total_sum.value() / n_paths;
  summary.seed = seed;
  summary.positive_mass = Vector::Zero(N);
  for (int i = 0; i < N; ++i) {
    long hits = 0;
    for (int p = 0; p < n_paths; ++p) {
      if (result.arm_totals(p, i) >= instance.utilities[i].tau) ++hits;
    }
    summary.positive_mass(i) = static_cast<double>(hits) / n_paths;
  }
  return result;
}

EvalSummary evaluate(const BanditInstance& instance, const SystemPolicy& policy, int n_paths,
                     std::uint64_t seed, int jobs) {
  return evaluate_paths(instance, policy, n_paths, seed, jobs).summary;
}

double relative_improvement(const EvalSummary& base, const EvalSummary& test) {
  if (base.objective_mean == 0.0)
    throw std::runtime_error("relative_improvement: undefined for a zero baseline");
  return 100.0 * (test.objective_mean - base.objective_mean) / std::abs(base.objective_mean);
}

std::vector<HistogramRow> histogram(const Vector& values, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  double lo = 0.0;
  double hi = 1.0;
  if (values.size() > 0) {
    lo = std::min(lo, values.minCoeff());
    hi = std::max(hi, values.maxCoeff());
  }
  const double width = (hi - lo) / bins;
  std::vector<HistogramRow> rows(bins);
  for (int b = 0; b < bins; ++b) {
    rows[b].left = lo + b * width;
    rows[b].right = b + 1 == bins ? hi : lo + (b + 1) * width;
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    int b = static_cast<int>((values(i) - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++rows[b].count;
  }
  return rows;
}

}  // namespace rawb
