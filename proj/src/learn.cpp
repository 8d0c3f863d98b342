#include "rawb/learn.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rawb/whittle.hpp"

namespace rawb {

PosteriorBank PosteriorBank::symmetric(const BanditInstance& shape, double pseudo_count) {
  if (!(pseudo_count > 0.0))
    throw std::invalid_argument("PosteriorBank: pseudo_count must be positive");
  PosteriorBank bank;
  bank.counts.reserve(shape.arms.size());
  for (const auto& arm : shape.arms) {
    const int n = arm.n_states;
    bank.counts.push_back({Matrix::Constant(n, n, pseudo_count),
                           Matrix::Constant(n, n, pseudo_count)});
  }
  return bank;
}

void PosteriorBank::observe(const Observation& obs) {
  if (obs.arm < 0 || obs.arm >= n_arms())
    throw std::invalid_argument("PosteriorBank::observe: arm out of range");
  Matrix& rows = counts[obs.arm][obs.action == 1 ? 1 : 0];
  if (obs.state < 0 || obs.state >= rows.rows() || obs.next_state < 0 ||
      obs.next_state >= rows.cols())
    throw std::invalid_argument("PosteriorBank::observe: state out of range");
  rows(obs.state, obs.next_state) += 1.0;
}

PosteriorBank update_posterior(PosteriorBank bank, const std::vector<Observation>& batch) {
  for (const auto& obs : batch) bank.observe(obs);
  return bank;
}

std::vector<ArmModel> sample_models(const PosteriorBank& bank, const BanditInstance& shape,
                                    Rng& rng) {
  if (bank.n_arms() != shape.n_arms())
    throw std::invalid_argument("sample_models: bank and instance disagree on arm count");
  std::vector<ArmModel> arms;
  arms.reserve(shape.arms.size());
  for (int i = 0; i < shape.n_arms(); ++i) {
    ArmModel arm = shape.arms[i];
    for (int a = 0; a < 2; ++a) {
      const Matrix& c = bank.counts[i][a];
      if (c.rows() != arm.n_states || c.cols() != arm.n_states)
        throw std::invalid_argument("sample_models: count shape mismatch");
      Matrix P(arm.n_states, arm.n_states);
      for (int x = 0; x < arm.n_states; ++x) {
        double row_sum = 0.0;
        for (int j = 0; j < arm.n_states; ++j) {
          P(x, j) = rng.next_gamma(c(x, j));
          row_sum += P(x, j);
        }
        if (row_sum <= 0.0) {
          std::ostringstream msg;
          msg << "sample_models: arm " << i << " action " << a << " row " << x
              << " has no posterior mass";
          throw std::runtime_error(msg.str());
        }
        P.row(x) /= row_sum;
      }
      arm.transitions[a] = P;
    }
    validate(arm);
    arms.push_back(std::move(arm));
  }
  return arms;
}

std::string DirichletPrior::checkpoint_json() const {
  nlohmann::ordered_json doc;
  doc["kind"] = "dirichlet";
  auto& arms = doc["arms"];
  arms = nlohmann::ordered_json::array();
  for (const auto& per_arm : bank_.counts) {
    nlohmann::ordered_json entry;
    for (int a = 0; a < 2; ++a) {
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (int x = 0; x < per_arm[a].rows(); ++x) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int j = 0; j < per_arm[a].cols(); ++j) row.push_back(round9(per_arm[a](x, j)));
        rows.push_back(std::move(row));
      }
      entry[a == 0 ? "passive" : "active"] = std::move(rows);
    }
    arms.push_back(std::move(entry));
  }
  return doc.dump(2);
}

MachineRatePrior::MachineRatePrior(int family, int n_states, int horizon, int n_arms,
                                   Vector rate_grid)
    : family_(family), n_states_(n_states), horizon_(horizon), grid_(std::move(rate_grid)) {
  if (grid_.size() < 1) throw std::invalid_argument("MachineRatePrior: empty rate grid");
  if (n_arms < 1) throw std::invalid_argument("MachineRatePrior: n_arms must be >= 1");
  log_prob_.reserve(grid_.size());
  for (Eigen::Index g = 0; g < grid_.size(); ++g) {
    // Family 2 pairs the repair rate with half its value for the passive
    // kernel, matching the instance builder's convention.
    const std::optional<double> p2 =
        family_ == 2 ? std::optional<double>(grid_(g) / 2.0) : std::nullopt;
    const ArmModel arm = make_machine_arm(n_states_, grid_(g), family_, horizon_, p2);
    std::array<Matrix, 2> lp;
    for (int a = 0; a < 2; ++a) {
      lp[a] = arm.transitions[a].array().log().matrix();  // log(0) = -inf is intended
    }
    log_prob_.push_back(std::move(lp));
  }
  log_weight_.assign(n_arms, Vector::Zero(grid_.size()));
}

void MachineRatePrior::observe(const Observation& obs) {
  if (obs.arm < 0 || obs.arm >= static_cast<int>(log_weight_.size()))
    throw std::invalid_argument("MachineRatePrior::observe: arm out of range");
  if (obs.state < 0 || obs.state >= n_states_ || obs.next_state < 0 ||
      obs.next_state >= n_states_)
    throw std::invalid_argument("MachineRatePrior::observe: state out of range");
  const int a = obs.action == 1 ? 1 : 0;
  for (Eigen::Index g = 0; g < grid_.size(); ++g) {
    log_weight_[obs.arm](g) += log_prob_[g][a](obs.state, obs.next_state);
  }
}

Vector MachineRatePrior::posterior(int arm) const {
  const Vector& lw = log_weight_[arm];
  const double peak = lw.maxCoeff();
  if (!std::isfinite(peak))
    throw std::runtime_error(
        "MachineRatePrior: observations impossible under every grid rate");
  Vector w = (lw.array() - peak).exp();
  return w / w.sum();
}

double MachineRatePrior::sample_rate(int arm, Rng& rng) const {
  const Vector w = posterior(arm);
  const double u = rng.next_double();
  double cum = 0.0;
  for (Eigen::Index g = 0; g < w.size(); ++g) {
    cum += w(g);
    if (u < cum) return grid_(g);
  }
  return grid_(w.size() - 1);
}

std::vector<ArmModel> MachineRatePrior::sample(const BanditInstance& shape, Rng& rng) {
  if (shape.n_arms() != static_cast<int>(log_weight_.size()))
    throw std::invalid_argument("MachineRatePrior::sample: arm count mismatch");
  std::vector<ArmModel> arms;
  arms.reserve(shape.arms.size());
  for (int i = 0; i < shape.n_arms(); ++i) {
    const double rate = sample_rate(i, rng);
    const std::optional<double> p2 =
        family_ == 2 ? std::optional<double>(rate / 2.0) : std::nullopt;
    ArmModel arm = make_machine_arm(n_states_, rate, family_, horizon_, p2);
    arm.rewards = shape.arms[i].rewards;
    arm.initial_state = shape.arms[i].initial_state;
    arms.push_back(std::move(arm));
  }
  return arms;
}

std::string MachineRatePrior::checkpoint_json() const {
  nlohmann::ordered_json doc;
  doc["kind"] = "machine_rate";
  doc["family"] = family_;
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (Eigen::Index g = 0; g < grid_.size(); ++g) grid.push_back(round9(grid_(g)));
  doc["rate_grid"] = std::move(grid);
  auto& arms = doc["posterior"];
  arms = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < log_weight_.size(); ++i) {
    const Vector w = posterior(static_cast<int>(i));
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index g = 0; g < w.size(); ++g) row.push_back(round9(w(g)));
    arms.push_back(std::move(row));
  }
  return doc.dump(2);
}

namespace {

std::vector<WhittleTable> plan_tables(const std::vector<ArmModel>& arms,
                                      const BanditInstance& truth, double eps) {
  std::vector<WhittleTable> tables;
  tables.reserve(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    WhittleTable table =
        compute_whittle(arms[i], truth.utilities[i], truth.horizon, 0.0, std::nullopt, eps);
    table.arm_id = static_cast<int>(i);
    tables.push_back(std::move(table));
  }
  return tables;
}

}  // namespace

RegretCurve run_rawip_ts(const BanditInstance& truth, TransitionPrior& prior,
                         const LearnConfig& config) {
  validate(truth);
  if (config.episodes < 0) throw std::invalid_argument("run_rawip_ts: episodes must be >= 0");
  if (config.batches_per_episode < 1)
    throw std::invalid_argument("run_rawip_ts: batches_per_episode must be >= 1");
  if (config.eval_paths < 1)
    throw std::invalid_argument("run_rawip_ts: eval_paths must be >= 1");

  const int T = truth.horizon;
  const int N = truth.n_arms();

  // The informed side of every gap: the index policy planned on the true
  // parameters, fixed across episodes.
  const IndexPolicy oracle_policy(plan_tables(truth.arms, truth, config.whittle_eps),
                                  truth.budget, config.allow_idle);
  const std::vector<RewardLattice> lattices = build_lattices(truth);

  RegretCurve curve;
  curve.points.reserve(config.episodes);
  KahanSum cumulative;

  for (int k = 1; k <= config.episodes; ++k) {
    const std::uint64_t model_seed = stream_id(config.seed, stream_tag::kModel, k);
    Rng model_rng(model_seed);
    const std::vector<ArmModel> sampled = prior.sample(truth, model_rng);
    const IndexPolicy learner_policy(plan_tables(sampled, truth, config.whittle_eps),
                                     truth.budget, config.allow_idle);

    for (int b = 0; b < config.batches_per_episode; ++b) {
      Rng rng = derive_stream(config.seed, stream_tag::kBatch, k, b);
      const Trajectory traj = rollout(truth, lattices, learner_policy, rng);
      for (int t = 0; t < T; ++t) {
        for (int i = 0; i < N; ++i) {
          prior.observe({i, traj.states[t].states[i],
                         traj.decisions[t].is_active(i) ? 1 : 0,
                         traj.states[t + 1].states[i]});
        }
      }
    }

    // Common random numbers: both estimates share one evaluation seed, so
    // matching policies produce a gap of exactly zero.
    const std::uint64_t eval_seed = stream_id(config.seed, stream_tag::kEval, k);
    const double oracle_est =
        evaluate(truth, oracle_policy, config.eval_paths, eval_seed, config.jobs)
            .objective_mean;
    const double learner_est =
        evaluate(truth, learner_policy, config.eval_paths, eval_seed, config.jobs)
            .objective_mean;

    RegretPoint point;
    point.episode = k;
    point.model_seed = model_seed;
    point.oracle_estimate = oracle_est;
    point.learner_estimate = learner_est;
    point.gap = oracle_est - learner_est;
    cumulative.add(point.gap);
    point.cumulative = cumulative.value();
    point.averaged = point.cumulative / k;
    curve.points.push_back(point);
  }
  return curve;
}

RegretCurve run_rawip_ts(const BanditInstance& truth, PosteriorBank bank,
                         const LearnConfig& config) {
  DirichletPrior prior(std::move(bank));
  return run_rawip_ts(truth, prior, config);
}

double regret_bound(int n_arms, int horizon, int episodes, double max_reward, int max_states) {
  if (n_arms < 1 || horizon < 1)
    throw std::invalid_argument("regret_bound: n_arms and horizon must be >= 1");
  if (episodes < 0) throw std::invalid_argument("regret_bound: episodes must be >= 0");
  if (!(max_reward >= 0.0) || max_states < 1)
    throw std::invalid_argument("regret_bound: bad reward or state bound");
  if (episodes == 0) return 0.0;
  const double kt = static_cast<double>(episodes) * horizon;
  return 12.0 * n_arms * n_arms * horizon * max_reward * max_states *
         std::sqrt(kt * (1.0 + std::log(kt)));
}

}  // namespace rawb
