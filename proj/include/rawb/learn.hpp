#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rawb/models.hpp"
#include "rawb/rng.hpp"
#include "rawb/sim.hpp"
#include "rawb/types.hpp"

namespace rawb {

struct Observation {
  int arm = 0;
  int state = 0;
  int action = 0;
  int next_state = 0;
};

// Independent Dirichlet posterior per (arm, state, action) transition row.
// counts includes the prior pseudo-counts.
struct PosteriorBank {
  std::vector<std::array<Matrix, 2>> counts;  // counts[arm][a](x, x')

  static PosteriorBank symmetric(const BanditInstance& shape, double pseudo_count = 1.0);

  void observe(const Observation& obs);
  int n_arms() const { return static_cast<int>(counts.size()); }
};

PosteriorBank update_posterior(PosteriorBank bank, const std::vector<Observation>& batch);

// One model draw: every transition row sampled from its Dirichlet, rewards
// and everything else copied from the known instance structure.
std::vector<ArmModel> sample_models(const PosteriorBank& bank, const BanditInstance& shape,
                                    Rng& rng);

// Transition-model prior abstraction for the Thompson loop: conjugate
// Dirichlet rows, or a parametric grid over a machine family's rate.
class TransitionPrior {
 public:
  virtual ~TransitionPrior() = default;
  virtual void observe(const Observation& obs) = 0;
  virtual std::vector<ArmModel> sample(const BanditInstance& shape, Rng& rng) = 0;
  virtual std::string checkpoint_json() const = 0;
};

class DirichletPrior final : public TransitionPrior {
 public:
  explicit DirichletPrior(PosteriorBank bank) : bank_(std::move(bank)) {}

  void observe(const Observation& obs) override { bank_.observe(obs); }
  std::vector<ArmModel> sample(const BanditInstance& shape, Rng& rng) override {
    return sample_models(bank_, shape, rng);
  }
  std::string checkpoint_json() const override;

  const PosteriorBank& bank() const { return bank_; }

 private:
  PosteriorBank bank_;
};

// Discrete posterior over the rate parameter of one machine-template family,
// shared structure across arms but one grid of weights per arm.  The
// posterior is exact: weights accumulate log-likelihoods of observed
// transitions under each candidate rate.
class MachineRatePrior final : public TransitionPrior {
 public:
  MachineRatePrior(int family, int n_states, int horizon, int n_arms, Vector rate_grid);

  void observe(const Observation& obs) override;
  std::vector<ArmModel> sample(const BanditInstance& shape, Rng& rng) override;
  std::string checkpoint_json() const override;

  double sample_rate(int arm, Rng& rng) const;
  Vector posterior(int arm) const;  // normalized weights

 private:
  int family_;
  int n_states_;
  int horizon_;
  Vector grid_;
  std::vector<std::array<Matrix, 2>> log_prob_;  // per grid point: log P(x'|x,a)
  std::vector<Vector> log_weight_;               // per arm
};

struct LearnConfig {
  int episodes = 200;
  int batches_per_episode = 10;
  int eval_paths = 100;
  std::uint64_t seed = 1;
  double whittle_eps = 1e-4;
  bool allow_idle = false;
  int jobs = 1;
};

struct RegretPoint {
  int episode = 0;              // 1-based
  std::uint64_t model_seed = 0; // stream id of the episode's model draw
  double oracle_estimate = 0.0;
  double learner_estimate = 0.0;
  double gap = 0.0;
  double cumulative = 0.0;
  double averaged = 0.0;  // cumulative / episode
};

struct RegretCurve {
  std::vector<RegretPoint> points;
  double final_cumulative() const { return points.empty() ? 0.0 : points.back().cumulative; }
};

// Thompson-sampling loop: each episode draws one model from the prior,
// plans the risk-aware index policy on the draw, runs batches_per_episode
// rounds on the true instance to collect transitions, and scores the episode
// gap against the true-parameter index policy.  Both sides of every gap are
// evaluated under common random numbers, so a perfectly informed prior shows
// a gap of exactly zero.  Only transitions are unknown to the learner;
// rewards, utilities, horizon and budget come from the true instance.
RegretCurve run_rawip_ts(const BanditInstance& truth, TransitionPrior& prior,
                         const LearnConfig& config);

RegretCurve run_rawip_ts(const BanditInstance& truth, PosteriorBank bank,
                         const LearnConfig& config);

// Bayesian-regret ceiling 12 * N^2 * T * r_max * x_max * sqrt(K T (1 + ln(K T)));
// zero when K is zero.
double regret_bound(int n_arms, int horizon, int episodes, double max_reward, int max_states);

}  // namespace rawb
