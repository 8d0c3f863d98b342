#include "rawb/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rawb {

namespace {

constexpr double kQuantumTol = 1e-9;
constexpr std::int64_t kMaxRewardCode = 1'000'000'000'000LL;

// Euclid on reals with snapping: residues within tol of 0 or of the divisor
// count as exact.
double real_gcd(double a, double b, double tol) {
  a = std::abs(a);
  b = std::abs(b);
  if (a < b) std::swap(a, b);
  while (b > tol) {
    double r = std::fmod(a, b);
    if (r < tol || r > b - tol) r = 0.0;
    a = b;
    b = r;
  }
  return a;
}

std::int64_t snap_to_grid(const RewardLattice& lat, double value) {
  const double raw = (value - lat.origin) / lat.quantum;
  std::int64_t code = std::llround(raw);
  if (code < 0) code = 0;
  if (code >= lat.grid_size) code = lat.grid_size - 1;
  return code;
}

void require_action_free(const ArmModel& arm, const char* who) {
  if (arm.active_rewards)
    throw std::invalid_argument(std::string(who) +
                                ": rewards must not depend on the action");
}

}  // namespace

std::int64_t RewardLattice::zero_code() const {
  return approximate ? snap_to_grid(*this, 0.0) : 0;
}

std::int64_t RewardLattice::step(std::int64_t code, int x) const {
  if (approximate) return snap_to_grid(*this, value_of(code) + state_rewards(x));
  return code + reward_codes[x];
}

int RewardLattice::index_of(int t, std::int64_t code) const {
  const auto& row = levels[t];
  const auto it = std::lower_bound(row.begin(), row.end(), code);
  if (it == row.end() || *it != code) return -1;
  return static_cast<int>(it - row.begin());
}

RewardLattice build_lattice(const ArmModel& arm, int horizon, int grid_levels) {
  validate(arm);
  require_action_free(arm, "build_lattice");
  if (horizon < 1) throw std::invalid_argument("build_lattice: horizon must be >= 1");
  if (grid_levels < 2) throw std::invalid_argument("build_lattice: grid_levels must be >= 2");

  RewardLattice lat;
  lat.state_rewards = arm.rewards;

  // Rewards below tolerance contribute nothing the 1e-9 contract can see.
  std::vector<double> nonzero;
  for (int x = 0; x < arm.n_states; ++x) {
    if (std::abs(arm.rewards(x)) > kQuantumTol) nonzero.push_back(arm.rewards(x));
  }

  bool exact = true;
  double quantum = 1.0;
  if (!nonzero.empty()) {
    double g = std::abs(nonzero[0]);
    for (std::size_t i = 1; i < nonzero.size(); ++i) g = real_gcd(g, nonzero[i], kQuantumTol);
    if (g < kQuantumTol) {
      exact = false;
    } else {
      quantum = g;
      for (double r : nonzero) {
        const std::int64_t k = std::llround(r / g);
        if (std::abs(r - static_cast<double>(k) * g) > kQuantumTol ||
            std::llabs(k) > kMaxRewardCode) {
          exact = false;
          break;
        }
      }
    }
  }

  if (exact) {
    lat.quantum = quantum;
    lat.origin = 0.0;
    lat.reward_codes.resize(arm.n_states);
    for (int x = 0; x < arm.n_states; ++x) {
      lat.reward_codes[x] = std::abs(arm.rewards(x)) > kQuantumTol
                                ? std::llround(arm.rewards(x) / quantum)
                                : 0;
    }
  } else {
    lat.approximate = true;
    lat.grid_size = grid_levels;
    const double min_r = arm.rewards.minCoeff();
    const double max_r = arm.rewards.maxCoeff();
    const double lo = std::min(0.0, horizon * min_r);
    const double hi = std::max(0.0, horizon * max_r);
    lat.origin = lo;
    lat.quantum = (hi - lo) / (grid_levels - 1);
    if (!(lat.quantum > 0.0)) lat.quantum = 1.0;
  }

  lat.levels.resize(horizon + 1);
  lat.levels[0] = {lat.zero_code()};
  for (int t = 0; t < horizon; ++t) {
    std::set<std::int64_t> next;
    for (const std::int64_t s : lat.levels[t]) {
      for (int x = 0; x < arm.n_states; ++x) next.insert(lat.step(s, x));
    }
    lat.levels[t + 1].assign(next.begin(), next.end());
  }
  return lat;
}

UtilityFn utility_function(const UtilitySpec& u) {
  validate(u);
  return [u](double j) { return eval_utility(u, j); };
}

UtilityFn identity_utility() {
  return [](double j) { return j; };
}

PenalizedArmSolver::PenalizedArmSolver(ArmModel arm, UtilityFn terminal_utility, int horizon,
                                       int grid_levels)
    : arm_(std::move(arm)), horizon_(horizon) {
  require_action_free(arm_, "PenalizedArmSolver");
  lattice_ = build_lattice(arm_, horizon_, grid_levels);
  const int n = arm_.n_states;

  offsets_.resize(horizon_);
  int off = 0;
  for (int t = 0; t < horizon_; ++t) {
    offsets_[t] = off;
    off += n * lattice_.level_count(t);
  }
  table_size_ = off;

  succ_.resize(horizon_ > 1 ? horizon_ - 1 : 0);
  for (int t = 0; t + 1 < horizon_; ++t) {
    const int L = lattice_.level_count(t);
    succ_[t].resize(static_cast<std::size_t>(L) * n);
    for (int s = 0; s < L; ++s) {
      for (int x = 0; x < n; ++x) {
        const std::int64_t code = lattice_.step(lattice_.levels[t][s], x);
        const int j = lattice_.index_of(t + 1, code);
        if (j < 0) throw std::runtime_error("PenalizedArmSolver: successor level missing");
        succ_[t][static_cast<std::size_t>(s) * n + x] = j;
      }
    }
  }

  const int Lf = lattice_.level_count(horizon_ - 1);
  terminal_utility_.resize(n, Lf);
  for (int s = 0; s < Lf; ++s) {
    const double base = lattice_.value_of(lattice_.levels[horizon_ - 1][s]);
    for (int x = 0; x < n; ++x) {
      const double u = terminal_utility(base + arm_.rewards(x));
      if (!std::isfinite(u)) {
        std::ostringstream msg;
        msg << "PenalizedArmSolver: terminal utility not finite at t=" << horizon_ - 1
            << " x=" << x << " s=" << base;
        throw std::runtime_error(msg.str());
      }
      terminal_utility_(x, s) = u;
    }
  }
}

PenalizedArmSolver::Coord PenalizedArmSolver::decode(int flat) const {
  for (int t = horizon_ - 1; t >= 0; --t) {
    if (flat >= offsets_[t]) {
      const int rem = flat - offsets_[t];
      const int L = lattice_.level_count(t);
      return {t, rem / L, rem % L};
    }
  }
  throw std::out_of_range("PenalizedArmSolver::decode: bad flat index");
}

template <bool kKeepTables>
void PenalizedArmSolver::run(double lambda, ArmSolution* out,
                             std::vector<std::uint8_t>* flat) const {
  if (!std::isfinite(lambda))
    throw std::invalid_argument("PenalizedArmSolver: lambda must be finite");
  const int T = horizon_;
  const int n = arm_.n_states;
  const double pen = lambda / T;

  if constexpr (kKeepTables) {
    out->horizon = T;
    out->lambda = lambda;
    out->lattice = lattice_;
    out->values.resize(T);
    out->policy.resize(T);
    out->initial_state = arm_.initial_state;
  }
  if (flat) flat->assign(table_size_, 0);

  Matrix next;
  for (int t = T - 1; t >= 0; --t) {
    const int L = lattice_.level_count(t);
    Matrix cur(n, L);
    PolicyGrid pol(n, L);
    for (int s = 0; s < L; ++s) {
      for (int x = 0; x < n; ++x) {
        double q0, q1;
        if (t == T - 1) {
          const double base = terminal_utility_(x, s);
          q0 = base;
          q1 = base - pen;
        } else {
          const int j = succ_[t][static_cast<std::size_t>(s) * n + x];
          q0 = arm_.transitions[0].row(x).dot(next.col(j));
          q1 = arm_.transitions[1].row(x).dot(next.col(j)) - pen;
        }
        const bool active = q1 - q0 >= -kTieTol;
        const double v = std::max(q0, q1);
        if (!std::isfinite(v)) {
          std::ostringstream msg;
          msg << "PenalizedArmSolver: non-finite value at t=" << t << " x=" << x
              << " s=" << lattice_.value_of(lattice_.levels[t][s]);
          throw std::runtime_error(msg.str());
        }
        cur(x, s) = v;
        pol(x, s) = active ? 1 : 0;
        if (flat) (*flat)[flat_index(t, x, s)] = active ? 1 : 0;
      }
    }
    if constexpr (kKeepTables) {
      out->values[t] = cur;
      out->policy[t] = pol;
    }
    next = std::move(cur);
  }
  if constexpr (kKeepTables) out->initial_value = next(arm_.initial_state, 0);
}

ArmSolution PenalizedArmSolver::solve(double lambda) const {
  ArmSolution out;
  run<true>(lambda, &out, nullptr);
  return out;
}

std::vector<std::uint8_t> PenalizedArmSolver::solve_policy(double lambda) const {
  std::vector<std::uint8_t> flat;
  run<false>(lambda, nullptr, &flat);
  return flat;
}

ArmSolution solve_penalized(const ArmModel& arm, const UtilitySpec& utility, int horizon,
                            double lambda) {
  PenalizedArmSolver solver(arm, utility_function(utility), horizon);
  return solver.solve(lambda);
}

StageArmSolver::StageArmSolver(ArmModel arm, Vector stage_rewards, int horizon)
    : arm_(std::move(arm)), stage_rewards_(std::move(stage_rewards)), horizon_(horizon) {
  validate(arm_);
  require_action_free(arm_, "StageArmSolver");
  if (horizon_ < 1) throw std::invalid_argument("StageArmSolver: horizon must be >= 1");
  if (stage_rewards_.size() != arm_.n_states)
    throw std::invalid_argument("StageArmSolver: stage_rewards size must equal n_states");
  for (int x = 0; x < arm_.n_states; ++x) {
    if (!std::isfinite(stage_rewards_(x)))
      throw std::invalid_argument("StageArmSolver: stage_rewards must be finite");
  }
}

StageSolution StageArmSolver::solve(double lambda) const {
  if (!std::isfinite(lambda))
    throw std::invalid_argument("StageArmSolver: lambda must be finite");
  const int T = horizon_;
  const int n = arm_.n_states;
  const double pen = lambda / T;

  StageSolution out;
  out.horizon = T;
  out.lambda = lambda;
  out.values.resize(n, T);
  out.policy.resize(n, T);

  Vector next = Vector::Zero(n);
  for (int t = T - 1; t >= 0; --t) {
    Vector cur(n);
    for (int x = 0; x < n; ++x) {
      const double q0 = stage_rewards_(x) + arm_.transitions[0].row(x).dot(next);
      const double q1 = stage_rewards_(x) - pen + arm_.transitions[1].row(x).dot(next);
      const bool active = q1 - q0 >= -kTieTol;
      const double v = std::max(q0, q1);
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "StageArmSolver: non-finite value at t=" << t << " x=" << x;
        throw std::runtime_error(msg.str());
      }
      cur(x) = v;
      out.values(x, t) = v;
      out.policy(x, t) = active ? 1 : 0;
    }
    next = cur;
  }
  out.initial_value = next(arm_.initial_state);
  return out;
}

std::vector<std::uint8_t> StageArmSolver::solve_policy(double lambda) const {
  const StageSolution sol = solve(lambda);
  std::vector<std::uint8_t> flat(static_cast<std::size_t>(horizon_) * arm_.n_states);
  for (int t = 0; t < horizon_; ++t) {
    for (int x = 0; x < arm_.n_states; ++x) {
      flat[static_cast<std::size_t>(t) * arm_.n_states + x] = sol.policy(x, t);
    }
  }
  return flat;
}

template void PenalizedArmSolver::run<true>(double, ArmSolution*,
                                            std::vector<std::uint8_t>*) const;
template void PenalizedArmSolver::run<false>(double, ArmSolution*,
                                             std::vector<std::uint8_t>*) const;

}  // namespace rawb
