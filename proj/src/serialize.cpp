#include "rawb/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rawb {

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index x = 0; x < m.rows(); ++x) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(round9(m(x, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index x = 0; x < rows; ++x) {
    const auto& row = j.at(x);
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(x, c) = row.at(c).get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(round9(v(i)));
  return arr;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

Json witness_to_json(const Assumption1Report::Flag& flag) {
  Json out;
  out["holds"] = flag.ok;
  if (!flag.ok) {
    Json w;
    w["x1"] = flag.witness.x1;
    w["x2"] = flag.witness.x2;
    w["a1"] = flag.witness.a1;
    w["a2"] = flag.witness.a2;
    if (flag.witness.k >= 0) w["k"] = flag.witness.k;
    out["counterexample"] = std::move(w);
  }
  return out;
}

}  // namespace

Json to_json(const ArmModel& arm) {
  Json j;
  j["n_states"] = arm.n_states;
  j["passive"] = matrix_to_json(arm.transitions[0]);
  j["active"] = matrix_to_json(arm.transitions[1]);
  j["rewards"] = vector_to_json(arm.rewards);
  if (arm.active_rewards) j["active_rewards"] = vector_to_json(*arm.active_rewards);
  j["initial_state"] = arm.initial_state;
  return j;
}

ArmModel arm_from_json(const Json& j) {
  ArmModel arm;
  arm.n_states = j.at("n_states").get<int>();
  arm.transitions[0] = matrix_from_json(j.at("passive"));
  arm.transitions[1] = matrix_from_json(j.at("active"));
  arm.rewards = vector_from_json(j.at("rewards"));
  if (j.contains("active_rewards")) arm.active_rewards = vector_from_json(j.at("active_rewards"));
  arm.initial_state = j.value("initial_state", 0);
  validate(arm);
  return arm;
}

Json to_json(const UtilitySpec& u) {
  Json j;
  j["alpha"] = static_cast<int>(u.family);
  j["tau"] = round9(u.tau);
  if (u.family != UtilityFamily::kIndicator) j["order"] = round9(u.order);
  return j;
}

UtilitySpec utility_from_json(const Json& j) {
  UtilitySpec u;
  u.family = static_cast<UtilityFamily>(j.at("alpha").get<int>());
  u.tau = j.at("tau").get<double>();
  u.order = j.value("order", 1.0);
  validate(u);
  return u;
}

Json to_json(const BanditInstance& instance) {
  Json j;
  j["horizon"] = instance.horizon;
  j["budget"] = instance.budget;
  Json arms = Json::array();
  for (const auto& arm : instance.arms) arms.push_back(to_json(arm));
  j["arms"] = std::move(arms);
  Json utils = Json::array();
  for (const auto& u : instance.utilities) utils.push_back(to_json(u));
  j["utilities"] = std::move(utils);
  return j;
}

BanditInstance instance_from_json(const Json& j) {
  BanditInstance instance;
  instance.horizon = j.at("horizon").get<int>();
  instance.budget = j.at("budget").get<int>();
  for (const auto& a : j.at("arms")) instance.arms.push_back(arm_from_json(a));
  for (const auto& u : j.at("utilities")) instance.utilities.push_back(utility_from_json(u));
  validate(instance);
  return instance;
}

PatientRanges patient_ranges_from_json(const Json& j) {
  PatientRanges ranges;
  for (int a = 0; a < 2; ++a) {
    const auto& key = a == 0 ? "P0" : "P1";
    const auto& rows = j.at(key);
    if (rows.size() != 3) throw std::invalid_argument("patient ranges: need 3 rows");
    ranges.lo[a].resize(3, 3);
    ranges.hi[a].resize(3, 3);
    for (int x = 0; x < 3; ++x) {
      const auto& row = rows.at(x);
      if (row.size() != 3) throw std::invalid_argument("patient ranges: need 3 columns");
      for (int c = 0; c < 3; ++c) {
        const auto& pair = row.at(c);
        if (pair.size() != 2) throw std::invalid_argument("patient ranges: entry must be [lo, hi]");
        ranges.lo[a](x, c) = pair.at(0).get<double>();
        ranges.hi[a](x, c) = pair.at(1).get<double>();
      }
    }
  }
  return ranges;
}

PatientRanges load_patient_ranges(const std::filesystem::path& file) {
  return patient_ranges_from_json(load_json(file));
}

Json to_json(const Assumption1Report& report) {
  Json j;
  j["reward_monotone"] = witness_to_json(report.reward_monotone);
  j["q_monotone_in_x"] = witness_to_json(report.q_monotone_in_x);
  j["reward_superadditive"] = witness_to_json(report.reward_superadditive);
  j["q_superadditive"] = witness_to_json(report.q_superadditive);
  j["q_monotone_in_a"] = witness_to_json(report.q_monotone_in_a);
  j["reward_action_free"] = witness_to_json(report.reward_action_free);
  j["all_hold"] = report.all_hold();
  return j;
}

Json to_json(const IndexabilityReport& report) {
  Json j;
  j["arm_id"] = report.arm_id;
  j["grid_points"] = report.lambda_grid.size();
  j["lambda_min"] = report.lambda_grid.empty() ? 0.0 : round9(report.lambda_grid.front());
  j["lambda_max"] = report.lambda_grid.empty() ? 0.0 : round9(report.lambda_grid.back());
  j["monotone"] = report.monotone;
  if (report.first_violation) {
    Json v;
    v["lambda_lo"] = round9(report.first_violation->lambda_lo);
    v["lambda_hi"] = round9(report.first_violation->lambda_hi);
    v["t"] = report.first_violation->t;
    v["x"] = report.first_violation->x;
    v["s"] = round9(report.first_violation->s_value);
    j["first_violation"] = std::move(v);
  }
  return j;
}

Json to_json(const EvalSummary& summary) {
  Json j;
  j["n_paths"] = summary.n_paths;
  j["objective_mean"] = round9(summary.objective_mean);
  j["objective_se"] = round9(summary.objective_se);
  j["total_reward_mean"] = round9(summary.total_mean);
  j["positive_mass"] = vector_to_json(summary.positive_mass);
  j["seed"] = summary.seed;
  return j;
}

Json solution_to_json(const ArmSolution& solution) {
  Json j;
  j["horizon"] = solution.horizon;
  j["lambda"] = round9(solution.lambda);
  j["lattice_quantum"] = round9(solution.lattice.quantum);
  j["lattice_approximate"] = solution.lattice.approximate;
  j["initial_value"] = round9(solution.initial_value);
  Json cells;
  for (int t = 0; t < solution.horizon; ++t) {
    for (Eigen::Index x = 0; x < solution.values[t].rows(); ++x) {
      for (Eigen::Index s = 0; s < solution.values[t].cols(); ++s) {
        std::ostringstream key;
        key << t << "/" << x << "/" << s;
        Json cell;
        cell["s_value"] = round9(solution.lattice.value_of(solution.lattice.levels[t][s]));
        cell["value"] = round9(solution.values[t](x, s));
        cell["active"] = solution.policy[t](x, s) == 1;
        cells[key.str()] = std::move(cell);
      }
    }
  }
  j["cells"] = std::move(cells);
  return j;
}

Json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  Json j;
  in >> j;
  return j;
}

void write_json(const std::filesystem::path& file, const Json& doc) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << doc.dump(2) << "\n";
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

}  // namespace rawb
