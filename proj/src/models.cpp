#include "rawb/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace rawb {

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double round9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

void validate(const ArmModel& arm) {
  if (arm.n_states < 1) throw std::invalid_argument("ArmModel: n_states must be >= 1");
  for (int a = 0; a < 2; ++a) {
    const Matrix& P = arm.transitions[a];
    if (P.rows() != arm.n_states || P.cols() != arm.n_states) {
      std::ostringstream msg;
      msg << "ArmModel: transitions[" << a << "] must be " << arm.n_states << "x"
          << arm.n_states << ", got " << P.rows() << "x" << P.cols();
      throw std::invalid_argument(msg.str());
    }
    for (int x = 0; x < arm.n_states; ++x) {
      double row_sum = 0.0;
      for (int j = 0; j < arm.n_states; ++j) {
        const double v = P(x, j);
        if (!std::isfinite(v) || v < -kProbTol) {
          std::ostringstream msg;
          msg << "ArmModel: transitions[" << a << "](" << x << "," << j
              << ") = " << v << " is not a probability";
          throw std::invalid_argument(msg.str());
        }
        row_sum += v;
      }
      if (std::abs(row_sum - 1.0) > kProbTol) {
        std::ostringstream msg;
        msg << "ArmModel: transitions[" << a << "] row " << x << " sums to "
            << row_sum << ", expected 1";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  if (arm.rewards.size() != arm.n_states)
    throw std::invalid_argument("ArmModel: rewards size must equal n_states");
  for (int x = 0; x < arm.n_states; ++x) {
    if (!std::isfinite(arm.rewards(x)))
      throw std::invalid_argument("ArmModel: rewards must be finite");
  }
  if (arm.active_rewards) {
    if (arm.active_rewards->size() != arm.n_states)
      throw std::invalid_argument("ArmModel: active_rewards size must equal n_states");
    for (int x = 0; x < arm.n_states; ++x) {
      if (!std::isfinite((*arm.active_rewards)(x)))
        throw std::invalid_argument("ArmModel: active_rewards must be finite");
    }
  }
  if (arm.initial_state < 0 || arm.initial_state >= arm.n_states)
    throw std::invalid_argument("ArmModel: initial_state out of range");
}

void validate(const UtilitySpec& u) {
  const int fam = static_cast<int>(u.family);
  if (fam < 1 || fam > 3) throw std::invalid_argument("UtilitySpec: unknown family");
  if (!(u.tau > 0.0 && u.tau < 1.0))
    throw std::invalid_argument("UtilitySpec: tau must lie in (0, 1)");
  if (u.family != UtilityFamily::kIndicator && !(u.order > 0.0))
    throw std::invalid_argument("UtilitySpec: order must be positive");
}

double eval_utility(const UtilitySpec& u, double total_reward) {
  const double j = total_reward;
  double v;
  switch (u.family) {
    case UtilityFamily::kIndicator:
      // Hitting the target exactly counts as success.
      return j >= u.tau ? 1.0 : 0.0;
    case UtilityFamily::kPowerShortfall: {
      const double shortfall = std::max(0.0, u.tau - j);
      v = 1.0 - std::pow(u.tau, -1.0 / u.order) * std::pow(shortfall, 1.0 / u.order);
      break;
    }
    case UtilityFamily::kSigmoid:
      v = (1.0 + std::exp(-u.order * (1.0 - u.tau))) /
          (1.0 + std::exp(-u.order * (j - u.tau)));
      break;
    default:
      throw std::invalid_argument("eval_utility: unknown family");
  }
  // The closed forms leave [0, 1] only outside the normalized-reward domain
  // (power shortfall below 0, sigmoid above 1); clamping there keeps the
  // documented range without touching any value on [0, 1].
  return std::clamp(v, 0.0, 1.0);
}

void validate(const BanditInstance& instance) {
  if (instance.arms.empty()) throw std::invalid_argument("BanditInstance: no arms");
  if (instance.utilities.size() != instance.arms.size())
    throw std::invalid_argument("BanditInstance: one utility per arm required");
  if (instance.horizon < 1) throw std::invalid_argument("BanditInstance: horizon must be >= 1");
  if (instance.budget < 0 || instance.budget > instance.n_arms())
    throw std::invalid_argument("BanditInstance: budget must lie in [0, n_arms]");
  for (const auto& arm : instance.arms) validate(arm);
  for (const auto& u : instance.utilities) validate(u);
}

namespace {

void require_parameter(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("make_machine_arm: " + what);
}

}  // namespace

ArmModel make_machine_arm(int n_states, double p, int family, int horizon,
                          std::optional<double> p2) {
  require_parameter(n_states >= 1, "n_states must be >= 1");
  require_parameter(horizon >= 1, "horizon must be >= 1");
  const int n = n_states;
  ArmModel arm;
  arm.n_states = n;
  arm.initial_state = n - 1;
  arm.rewards = Vector::Zero(n);
  if (n > 1) {
    for (int x = 0; x < n; ++x)
      arm.rewards(x) = static_cast<double>(x) / (static_cast<double>(n - 1) * horizon);
  }

  Matrix P0 = Matrix::Zero(n, n);
  Matrix P1 = Matrix::Zero(n, n);
  // The worst state is absorbing under the passive action in families 1, 2
  // and 4; repairs always start from the top row pattern of each family.
  switch (family) {
    case 1: {
      require_parameter(p >= 0.0 && p <= 1.0, "family 1 needs p in [0, 1]");
      P0(0, 0) = 1.0;
      for (int x = 1; x < n; ++x) {
        P0(x, 0) = 1.0 - p;
        P0(x, x) += p;
      }
      P1.setIdentity();
      break;
    }
    case 2: {
      require_parameter(p2.has_value(), "family 2 needs the slower rate p2");
      require_parameter(p >= 0.0 && p <= 1.0, "family 2 needs p in [0, 1]");
      require_parameter(*p2 >= 0.0 && *p2 <= 1.0, "family 2 needs p2 in [0, 1]");
      require_parameter(p > *p2, "family 2 needs p > p2");
      P0(0, 0) = 1.0;
      P1(0, 0) = 1.0;
      for (int x = 1; x < n; ++x) {
        P0(x, 0) = 1.0 - *p2;
        P0(x, x) += *p2;
        P1(x, 0) = 1.0 - p;
        P1(x, x) += p;
      }
      break;
    }
    case 3: {
      require_parameter(p >= 0.0 && p <= 0.5, "family 3 needs p in [0, 0.5]");
      P0(0, 0) = 1.0;
      P1(0, 0) = 1.0;
      for (int x = 1; x < n; ++x) {
        P0(x, x - 1) = 1.0 - p;
        P0(x, x) += p;
        P1(x, x - 1) = p;
        P1(x, x) += 1.0 - p;
      }
      break;
    }
    case 4: {
      if (n > 1)
        require_parameter(p >= 0.0 && p <= 1.0 / (n - 1),
                          "family 4 needs p in [0, 1/(n_states-1)]");
      P0(0, 0) = 1.0;
      for (int x = 1; x < n; ++x) {
        P0(x, 0) = 1.0 - (n - 1) * p;
        for (int j = 1; j < x; ++j) P0(x, j) += p;
        P0(x, x) += (n - x) * p;
      }
      for (int x = 0; x < n; ++x) {
        if (x < n - 1) P1(x, x) += (n - 1 - x) * p;
        P1(x, n - 1) += 1.0 - (n - 1 - x) * p;
      }
      break;
    }
    default:
      require_parameter(false, "family must be one of 1, 2, 3, 4");
  }
  arm.transitions = {P0, P1};
  validate(arm);
  return arm;
}

ArmModel make_patient_arm(int horizon, Rng& rng, const PatientRanges& ranges) {
  if (horizon < 1) throw std::invalid_argument("make_patient_arm: horizon must be >= 1");
  constexpr int kDead = 0;
  constexpr int n = 3;
  for (int a = 0; a < 2; ++a) {
    if (ranges.lo[a].rows() != n || ranges.lo[a].cols() != n || ranges.hi[a].rows() != n ||
        ranges.hi[a].cols() != n)
      throw std::invalid_argument("make_patient_arm: ranges must be 3x3 per action");
    // Feasibility: a renormalized row can only reach mass 1 when the upper
    // bounds allow it.  DEAD's forced row is exempt.
    for (int x = 1; x < n; ++x) {
      double hi_sum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (ranges.lo[a](x, j) < 0.0 || ranges.hi[a](x, j) < ranges.lo[a](x, j))
          throw std::invalid_argument("make_patient_arm: malformed interval");
        hi_sum += ranges.hi[a](x, j);
      }
      if (hi_sum < 1.0 - kProbTol) {
        std::ostringstream msg;
        msg << "make_patient_arm: action " << a << " row " << x
            << " upper bounds sum to " << hi_sum << " < 1";
        throw std::invalid_argument(msg.str());
      }
    }
  }

  ArmModel arm;
  arm.n_states = n;
  arm.initial_state = 2;  // STABLE
  arm.rewards = Vector::Zero(n);
  arm.rewards(1) = 1.0 / (2.0 * horizon);
  arm.rewards(2) = 1.0 / horizon;
  for (int a = 0; a < 2; ++a) {
    Matrix P = Matrix::Zero(n, n);
    P(kDead, kDead) = 1.0;
    for (int x = 1; x < n; ++x) {
      double row_sum = 0.0;
      for (int j = 0; j < n; ++j) {
        P(x, j) = rng.next_uniform(ranges.lo[a](x, j), ranges.hi[a](x, j));
        row_sum += P(x, j);
      }
      if (row_sum <= 0.0)
        throw std::invalid_argument("make_patient_arm: drew a zero-mass row");
      P.row(x) /= row_sum;
    }
    arm.transitions[a] = P;
  }
  validate(arm);
  return arm;
}

double tail_mass(const Matrix& P, int x, int k) {
  if (k <= 0) return 1.0;
  const Eigen::Index n = P.cols();
  if (k >= n) return 0.0;
  return P.row(x).tail(n - k).sum();
}

namespace {

using Witness = Assumption1Report::Witness;
using Flag = Assumption1Report::Flag;

void record(Flag& flag, const Witness& w) {
  if (!flag.ok) return;  // keep the first counterexample only
  flag.ok = false;
  flag.witness = w;
}

}  // namespace

Assumption1Report check_assumption1(const ArmModel& arm) {
  validate(arm);
  Assumption1Report report;
  const int n = arm.n_states;

  for (int a = 0; a < 2; ++a) {
    for (int x = 0; x + 1 < n; ++x) {
      if (arm.reward(x + 1, a) < arm.reward(x, a) - kProbTol)
        record(report.reward_monotone, {x + 1, x, a, a, -1});
      for (int k = 0; k < n; ++k) {
        if (tail_mass(arm.P(a), x + 1, k) < tail_mass(arm.P(a), x, k) - kProbTol)
          record(report.q_monotone_in_x, {x + 1, x, a, a, k});
      }
    }
  }

  // Superadditivity: f(x1,a1) + f(x2,a2) >= f(x1,a2) + f(x2,a1) whenever
  // x1 >= x2 and a1 >= a2; equivalently increasing differences in (x, a).
  for (int x2 = 0; x2 < n; ++x2) {
    for (int x1 = x2; x1 < n; ++x1) {
      const double lhs_r = arm.reward(x1, 1) + arm.reward(x2, 0);
      const double rhs_r = arm.reward(x1, 0) + arm.reward(x2, 1);
      if (lhs_r < rhs_r - kProbTol) record(report.reward_superadditive, {x1, x2, 1, 0, -1});
      for (int k = 0; k < n; ++k) {
        const double lhs = tail_mass(arm.P(1), x1, k) + tail_mass(arm.P(0), x2, k);
        const double rhs = tail_mass(arm.P(0), x1, k) + tail_mass(arm.P(1), x2, k);
        if (lhs < rhs - kProbTol) record(report.q_superadditive, {x1, x2, 1, 0, k});
      }
    }
  }

  for (int x = 0; x < n; ++x) {
    for (int k = 0; k < n; ++k) {
      if (tail_mass(arm.P(1), x, k) < tail_mass(arm.P(0), x, k) - kProbTol)
        record(report.q_monotone_in_a, {x, x, 1, 0, k});
    }
    if (std::abs(arm.reward(x, 1) - arm.reward(x, 0)) > kProbTol)
      record(report.reward_action_free, {x, x, 1, 0, -1});
  }
  return report;
}

}  // namespace rawb
