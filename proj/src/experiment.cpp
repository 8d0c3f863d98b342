#include "rawb/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "rawb/policy.hpp"
#include "rawb/whittle.hpp"

namespace rawb {

namespace {

namespace fs = std::filesystem;

std::array<double, 2> default_p_range(int n_states) {
  return {0.1 / n_states, 1.0 / n_states};
}

double linspace_at(const std::array<double, 2>& range, int i, int n) {
  if (n == 1) return 0.5 * (range[0] + range[1]);
  return range[0] + (range[1] - range[0]) * (static_cast<double>(i) / (n - 1));
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = linspace_at({lo, hi}, i, n);
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig config;
  config.mode = j.value("mode", std::string("plan"));
  config.out_dir = j.value("out_dir", std::string("out"));

  if (j.contains("instance")) {
    const auto& ji = j.at("instance");
    auto& in = config.instance;
    in.kind = ji.value("kind", std::string("machine"));
    in.family = ji.value("family", 4);
    in.n_states = ji.value("n_states", 3);
    in.n_arms = ji.value("n_arms", 6);
    in.budget = ji.value("budget", 2);
    in.horizon = ji.value("horizon", 5);
    if (ji.contains("p_range")) {
      in.p_range = std::array<double, 2>{ji.at("p_range").at(0).get<double>(),
                                         ji.at("p_range").at(1).get<double>()};
    }
    if (ji.contains("p2_range")) {
      in.p2_range = std::array<double, 2>{ji.at("p2_range").at(0).get<double>(),
                                          ji.at("p2_range").at(1).get<double>()};
    }
    in.ranges_file = ji.value("ranges_file", std::string());
    if (ji.contains("utility")) in.utility = utility_from_json(ji.at("utility"));
    if (ji.contains("initial_state")) in.initial_state = ji.at("initial_state").get<int>();
  }

  if (j.contains("algo")) {
    const auto& ja = j.at("algo");
    auto& al = config.algo;
    al.eps = ja.value("eps", 1e-4);
    al.n_paths = ja.value("n_paths", 100);
    al.episodes = ja.value("episodes", 200);
    al.batches = ja.value("batches", 10);
    al.eval_paths = ja.value("eval_paths", 100);
    al.seed = ja.value("seed", std::uint64_t{1});
    al.jobs = ja.value("jobs", 1);
    al.allow_idle = ja.value("allow_idle", false);
    al.prior = ja.value("prior", std::string("dirichlet"));
    al.rate_grid_points = ja.value("rate_grid_points", 41);
    if (ja.contains("policies")) {
      al.policies.clear();
      for (const auto& p : ja.at("policies")) al.policies.push_back(p.get<std::string>());
    }
    if (ja.contains("dump_lambda")) al.dump_lambda = ja.at("dump_lambda").get<double>();
  }

  if (j.contains("sweep")) {
    const auto& js = j.at("sweep");
    auto& sw = config.sweep;
    if (js.contains("horizons")) sw.horizons = js.at("horizons").get<std::vector<int>>();
    if (js.contains("state_sizes")) sw.state_sizes = js.at("state_sizes").get<std::vector<int>>();
    if (js.contains("arm_multipliers"))
      sw.arm_multipliers = js.at("arm_multipliers").get<std::vector<int>>();
    if (js.contains("budget_fractions"))
      sw.budget_fractions = js.at("budget_fractions").get<std::vector<double>>();
    if (js.contains("utility_families")) {
      sw.utility_families.clear();
      for (const auto& u : js.at("utility_families")) {
        sw.utility_families.emplace_back(u.at(0).get<int>(), u.at(1).get<double>());
      }
    }
    if (js.contains("taus")) sw.taus = js.at("taus").get<std::vector<double>>();
  }
  return config;
}

Json to_json(const ExperimentConfig& config) {
  Json j;
  j["mode"] = config.mode;

  Json ji;
  const auto& in = config.instance;
  ji["kind"] = in.kind;
  ji["family"] = in.family;
  ji["n_states"] = in.n_states;
  ji["n_arms"] = in.n_arms;
  ji["budget"] = in.budget;
  ji["horizon"] = in.horizon;
  {
    const auto pr = in.p_range ? *in.p_range : default_p_range(in.n_states);
    ji["p_range"] = Json::array({round9(pr[0]), round9(pr[1])});
  }
  if (in.p2_range) ji["p2_range"] = Json::array({round9((*in.p2_range)[0]), round9((*in.p2_range)[1])});
  if (!in.ranges_file.empty()) ji["ranges_file"] = in.ranges_file;
  ji["utility"] = to_json(in.utility);
  if (in.initial_state) ji["initial_state"] = *in.initial_state;
  j["instance"] = std::move(ji);

  Json ja;
  const auto& al = config.algo;
  ja["eps"] = round9(al.eps);
  ja["n_paths"] = al.n_paths;
  ja["episodes"] = al.episodes;
  ja["batches"] = al.batches;
  ja["eval_paths"] = al.eval_paths;
  ja["seed"] = al.seed;
  ja["jobs"] = al.jobs;
  ja["allow_idle"] = al.allow_idle;
  ja["prior"] = al.prior;
  ja["rate_grid_points"] = al.rate_grid_points;
  ja["policies"] = al.policies;
  if (al.dump_lambda) ja["dump_lambda"] = round9(*al.dump_lambda);
  j["algo"] = std::move(ja);

  Json js;
  const auto& sw = config.sweep;
  js["horizons"] = sw.horizons;
  js["state_sizes"] = sw.state_sizes;
  js["arm_multipliers"] = sw.arm_multipliers;
  js["budget_fractions"] = sw.budget_fractions;
  Json fams = Json::array();
  for (const auto& [alpha, order] : sw.utility_families)
    fams.push_back(Json::array({alpha, round9(order)}));
  js["utility_families"] = std::move(fams);
  js["taus"] = sw.taus;
  j["sweep"] = std::move(js);

  j["out_dir"] = config.out_dir;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  ExperimentConfig config = config_from_json(load_json(file));
  // A config is a self-contained document: a relative ranges_file points
  // next to the config, not wherever the process happens to run.
  if (!config.instance.ranges_file.empty()) {
    std::filesystem::path ranges(config.instance.ranges_file);
    if (ranges.is_relative()) {
      config.instance.ranges_file =
          (file.parent_path() / ranges).lexically_normal().string();
    }
  }
  return config;
}

BanditInstance build_instance(const InstanceConfig& config, std::uint64_t seed) {
  if (config.n_arms < 1) throw std::invalid_argument("build_instance: n_arms must be >= 1");
  if (config.horizon < 1) throw std::invalid_argument("build_instance: horizon must be >= 1");

  BanditInstance instance;
  instance.horizon = config.horizon;
  instance.budget = config.budget;
  instance.arms.reserve(config.n_arms);

  if (config.kind == "machine") {
    const auto pr = config.p_range ? *config.p_range : default_p_range(config.n_states);
    for (int i = 0; i < config.n_arms; ++i) {
      const double p = linspace_at(pr, i, config.n_arms);
      std::optional<double> p2;
      if (config.family == 2) {
        p2 = config.p2_range ? linspace_at(*config.p2_range, i, config.n_arms) : p / 2.0;
      }
      instance.arms.push_back(
          make_machine_arm(config.n_states, p, config.family, config.horizon, p2));
    }
  } else if (config.kind == "patient") {
    if (config.ranges_file.empty())
      throw std::invalid_argument("build_instance: patient instances need ranges_file");
    const PatientRanges ranges = load_patient_ranges(config.ranges_file);
    for (int i = 0; i < config.n_arms; ++i) {
      Rng rng = derive_stream(seed, stream_tag::kInstance, static_cast<std::uint64_t>(i));
      instance.arms.push_back(make_patient_arm(config.horizon, rng, ranges));
    }
  } else {
    throw std::invalid_argument("build_instance: unknown kind '" + config.kind + "'");
  }

  if (config.initial_state) {
    for (auto& arm : instance.arms) {
      if (*config.initial_state < 0 || *config.initial_state >= arm.n_states)
        throw std::invalid_argument("build_instance: initial_state out of range");
      arm.initial_state = *config.initial_state;
    }
  }
  instance.utilities.assign(config.n_arms, config.utility);
  validate(instance);
  return instance;
}

namespace {

void prepare_out_dir(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  write_json(fs::path(config.out_dir) / "config.json", to_json(config));
  write_text(fs::path(config.out_dir) / "seed.txt", std::to_string(config.algo.seed) + "\n");
}

std::vector<WhittleTable> rawip_tables(const BanditInstance& instance, double eps) {
  std::vector<WhittleTable> tables;
  tables.reserve(instance.arms.size());
  for (int i = 0; i < instance.n_arms(); ++i) {
    WhittleTable t = compute_whittle(instance.arms[i], instance.utilities[i],
                                     instance.horizon, 0.0, std::nullopt, eps);
    t.arm_id = i;
    tables.push_back(std::move(t));
  }
  return tables;
}

std::vector<WhittleTable> neutral_tables(const BanditInstance& instance, double eps) {
  std::vector<WhittleTable> tables;
  tables.reserve(instance.arms.size());
  for (int i = 0; i < instance.n_arms(); ++i) {
    WhittleTable t =
        compute_neutral_whittle(instance.arms[i], instance.horizon, 0.0, std::nullopt, eps);
    t.arm_id = i;
    tables.push_back(std::move(t));
  }
  return tables;
}

std::vector<StageIndexTable> ssup_tables(const BanditInstance& instance, double eps) {
  std::vector<StageIndexTable> tables;
  tables.reserve(instance.arms.size());
  for (int i = 0; i < instance.n_arms(); ++i) {
    StageIndexTable t = compute_ssup_index(instance.arms[i], instance.utilities[i],
                                           instance.horizon, 0.0, std::nullopt, eps);
    t.arm_id = i;
    tables.push_back(std::move(t));
  }
  return tables;
}

std::unique_ptr<SystemPolicy> make_policy(const std::string& name,
                                          const BanditInstance& instance,
                                          const AlgoConfig& algo) {
  if (name == "rawip")
    return std::make_unique<IndexPolicy>(rawip_tables(instance, algo.eps), instance.budget,
                                         algo.allow_idle);
  if (name == "neutral")
    return std::make_unique<IndexPolicy>(neutral_tables(instance, algo.eps), instance.budget,
                                         algo.allow_idle);
  if (name == "ssup")
    return std::make_unique<StageIndexPolicy>(ssup_tables(instance, algo.eps),
                                              instance.budget, algo.allow_idle);
  if (name == "random")
    return std::make_unique<RandomPolicy>(instance.n_arms(), instance.budget);
  if (name == "oracle")
    return std::make_unique<OraclePolicy>(
        std::make_shared<const OracleSolution>(exact_oracle(instance)));
  throw std::invalid_argument("unknown policy '" + name + "'");
}

void write_csv(const fs::path& file, const std::string& text) { write_text(file, text); }

}  // namespace

void run_plan(const ExperimentConfig& config) {
  prepare_out_dir(config);
  const fs::path out(config.out_dir);
  const BanditInstance instance = build_instance(config.instance, config.algo.seed);
  write_json(out / "instance.json", to_json(instance));

  std::vector<std::string> names = config.algo.policies;
  if (names.empty()) names = {"rawip", "neutral", "ssup"};

  Json summary;
  Json policies_json;
  std::vector<EvalResult> results;
  std::vector<std::string> evaluated;
  std::optional<double> oracle_value;

  for (const auto& name : names) {
    std::unique_ptr<SystemPolicy> policy = make_policy(name, instance, config.algo);
    if (name == "oracle") {
      // Recover the oracle's planned value as well as its simulated one.
      oracle_value = exact_oracle(instance).value;
    }
    EvalResult result = evaluate_paths(instance, *policy, config.algo.n_paths,
                                       config.algo.seed, config.algo.jobs);
    policies_json[name] = to_json(result.summary);
    results.push_back(std::move(result));
    evaluated.push_back(name);
  }
  summary["policies"] = std::move(policies_json);
  if (oracle_value) summary["oracle_value"] = round9(*oracle_value);

  const auto find_result = [&](const std::string& name) -> const EvalResult* {
    for (std::size_t i = 0; i < evaluated.size(); ++i) {
      if (evaluated[i] == name) return &results[i];
    }
    return nullptr;
  };

  const EvalResult* neutral = find_result("neutral");
  Json improvements;
  for (const auto& name : evaluated) {
    if (name == "neutral" || neutral == nullptr) continue;
    const EvalResult* r = find_result(name);
    try {
      improvements[name + "_vs_neutral_pct"] =
          round9(relative_improvement(neutral->summary, r->summary));
    } catch (const std::runtime_error&) {
      improvements[name + "_vs_neutral_pct"] = "undefined";
    }
  }
  summary["improvements"] = std::move(improvements);
  write_json(out / "summary.json", summary);

  std::ostringstream csv;
  csv << "policy,objective_mean,objective_se,total_reward_mean,improvement_vs_neutral_pct\n";
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    const EvalSummary& s = results[i].summary;
    csv << evaluated[i] << "," << format_g9(s.objective_mean) << ","
        << format_g9(s.objective_se) << "," << format_g9(s.total_mean) << ",";
    if (evaluated[i] != "neutral" && neutral != nullptr) {
      try {
        csv << format_g9(relative_improvement(neutral->summary, s));
      } catch (const std::runtime_error&) {
        csv << "undefined";
      }
    }
    csv << "\n";
  }
  write_csv(out / "comparison.csv", csv.str());

  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    for (int arm = 0; arm < instance.n_arms(); ++arm) {
      const Vector col = results[i].arm_totals.col(arm);
      std::ostringstream hist_csv;
      hist_csv << "bin_left,bin_right,count\n";
      for (const auto& row : histogram(col)) {
        hist_csv << format_g9(row.left) << "," << format_g9(row.right) << "," << row.count
                 << "\n";
      }
      std::ostringstream fname;
      fname << "hist_" << evaluated[i] << "_arm" << arm << ".csv";
      write_csv(out / fname.str(), hist_csv.str());
    }
  }
}

namespace {

struct SweepCell {
  int horizon = 0;
  int n_states = 0;
  int n_arms = 0;
  int budget = 0;
  int alpha = 0;
  double order = 0.0;
  double tau = 0.0;
};

struct SweepOutcome {
  double rawip_obj = 0.0, neutral_obj = 0.0, ssup_obj = 0.0;
  double rawip_impr = 0.0, ssup_impr = 0.0;
  bool defined = false;
  std::string error;
};

}  // namespace

void run_sweep(const ExperimentConfig& config) {
  prepare_out_dir(config);
  const fs::path out(config.out_dir);

  std::vector<SweepCell> cells;
  for (const int T : config.sweep.horizons) {
    for (const int X : config.sweep.state_sizes) {
      for (const int mult : config.sweep.arm_multipliers) {
        for (const double frac : config.sweep.budget_fractions) {
          for (const auto& [alpha, order] : config.sweep.utility_families) {
            for (const double tau : config.sweep.taus) {
              SweepCell cell;
              cell.horizon = T;
              cell.n_states = X;
              cell.n_arms = mult * X;
              cell.budget = static_cast<int>(std::floor(frac * cell.n_arms));
              cell.alpha = alpha;
              cell.order = order;
              cell.tau = tau;
              cells.push_back(cell);
            }
          }
        }
      }
    }
  }

  std::vector<SweepOutcome> outcomes(cells.size());
  parallel_for(static_cast<int>(cells.size()), config.algo.jobs, [&](int c) {
    const SweepCell& cell = cells[c];
    SweepOutcome& outcome = outcomes[c];
    try {
      InstanceConfig ic = config.instance;
      ic.kind = "machine";
      ic.n_states = cell.n_states;
      ic.n_arms = cell.n_arms;
      ic.budget = cell.budget;
      ic.horizon = cell.horizon;
      ic.p_range.reset();  // per-cell default [0.1/X, 1/X]
      ic.utility.family = static_cast<UtilityFamily>(cell.alpha);
      ic.utility.tau = cell.tau;
      ic.utility.order = cell.alpha == 1 ? 1.0 : cell.order;

      const std::uint64_t cell_seed =
          stream_id(config.algo.seed, stream_tag::kCell, static_cast<std::uint64_t>(c));
      const BanditInstance instance = build_instance(ic, cell_seed);

      const IndexPolicy rawip(rawip_tables(instance, config.algo.eps), instance.budget,
                              config.algo.allow_idle);
      const IndexPolicy neutral(neutral_tables(instance, config.algo.eps), instance.budget,
                                config.algo.allow_idle);
      const StageIndexPolicy ssup(ssup_tables(instance, config.algo.eps), instance.budget,
                                  config.algo.allow_idle);

      const EvalSummary rawip_s =
          evaluate(instance, rawip, config.algo.n_paths, cell_seed, 1);
      const EvalSummary neutral_s =
          evaluate(instance, neutral, config.algo.n_paths, cell_seed, 1);
      const EvalSummary ssup_s = evaluate(instance, ssup, config.algo.n_paths, cell_seed, 1);

      outcome.rawip_obj = round9(rawip_s.objective_mean);
      outcome.neutral_obj = round9(neutral_s.objective_mean);
      outcome.ssup_obj = round9(ssup_s.objective_mean);
      outcome.rawip_impr = round9(relative_improvement(neutral_s, rawip_s));
      outcome.ssup_impr = round9(relative_improvement(neutral_s, ssup_s));
      outcome.defined = true;
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  });

  std::ostringstream csv;
  csv << "cell,horizon,n_states,n_arms,budget,alpha,order,tau,"
         "rawip_objective,neutral_objective,ssup_objective,"
         "rawip_improvement_pct,ssup_improvement_pct,error\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const SweepCell& cell = cells[c];
    const SweepOutcome& o = outcomes[c];
    csv << c << "," << cell.horizon << "," << cell.n_states << "," << cell.n_arms << ","
        << cell.budget << "," << cell.alpha << "," << format_g9(cell.order) << ","
        << format_g9(cell.tau) << ",";
    if (o.defined) {
      csv << format_g9(o.rawip_obj) << "," << format_g9(o.neutral_obj) << ","
          << format_g9(o.ssup_obj) << "," << format_g9(o.rawip_impr) << ","
          << format_g9(o.ssup_impr) << ",";
    } else {
      csv << ",,,,,";
    }
    csv << (o.defined ? "" : o.error) << "\n";
  }
  write_csv(out / "cells.csv", csv.str());

  // Aggregates over defined cells, computed on the rounded values that the
  // CSV stores so they recompute exactly from the file.
  const auto aggregate = [&](auto getter) {
    KahanSum sum;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    int defined = 0, above = 0;
    for (const auto& o : outcomes) {
      if (!o.defined) continue;
      const double v = getter(o);
      sum.add(v);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      ++defined;
      if (v > 0.0) ++above;
    }
    struct Agg {
      int n;
      double mean, mn, mx, pct_above;
    } agg{};
    agg.n = defined;
    agg.mean = defined > 0 ? round9(sum.value() / defined) : 0.0;
    agg.mn = defined > 0 ? mn : 0.0;
    agg.mx = defined > 0 ? mx : 0.0;
    agg.pct_above = defined > 0 ? round9(100.0 * above / defined) : 0.0;
    return agg;
  };

  const auto rawip_agg = aggregate([](const SweepOutcome& o) { return o.rawip_impr; });
  const auto ssup_agg = aggregate([](const SweepOutcome& o) { return o.ssup_impr; });

  std::ostringstream agg_csv;
  agg_csv << "policy,n_cells,improvement_mean,improvement_min,improvement_max,"
             "pct_above_zero\n";
  agg_csv << "rawip," << rawip_agg.n << "," << format_g9(rawip_agg.mean) << ","
          << format_g9(rawip_agg.mn) << "," << format_g9(rawip_agg.mx) << ","
          << format_g9(rawip_agg.pct_above) << "\n";
  agg_csv << "ssup," << ssup_agg.n << "," << format_g9(ssup_agg.mean) << ","
          << format_g9(ssup_agg.mn) << "," << format_g9(ssup_agg.mx) << ","
          << format_g9(ssup_agg.pct_above) << "\n";
  write_csv(out / "aggregate.csv", agg_csv.str());

  // Mean improvement per utility configuration.
  std::ostringstream by_util;
  by_util << "alpha,order,n_cells,rawip_improvement_mean,ssup_improvement_mean\n";
  for (const auto& [alpha, order] : config.sweep.utility_families) {
    KahanSum rawip_sum, ssup_sum;
    int n = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].alpha != alpha || cells[c].order != order || !outcomes[c].defined) continue;
      rawip_sum.add(outcomes[c].rawip_impr);
      ssup_sum.add(outcomes[c].ssup_impr);
      ++n;
    }
    by_util << alpha << "," << format_g9(order) << "," << n << ","
            << (n > 0 ? format_g9(round9(rawip_sum.value() / n)) : "") << ","
            << (n > 0 ? format_g9(round9(ssup_sum.value() / n)) : "") << "\n";
  }
  write_csv(out / "by_utility.csv", by_util.str());
}

void run_learn(const ExperimentConfig& config) {
  prepare_out_dir(config);
  const fs::path out(config.out_dir);
  const BanditInstance instance = build_instance(config.instance, config.algo.seed);
  write_json(out / "instance.json", to_json(instance));

  std::unique_ptr<TransitionPrior> prior;
  if (config.algo.prior == "dirichlet") {
    prior = std::make_unique<DirichletPrior>(PosteriorBank::symmetric(instance, 1.0));
  } else if (config.algo.prior == "machine_rate") {
    if (config.instance.kind != "machine")
      throw std::invalid_argument("run_learn: machine_rate prior needs a machine instance");
    const auto pr =
        config.instance.p_range ? *config.instance.p_range : default_p_range(config.instance.n_states);
    const std::vector<double> pts = linspace(pr[0], pr[1], config.algo.rate_grid_points);
    Vector grid(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) grid(static_cast<Eigen::Index>(i)) = pts[i];
    prior = std::make_unique<MachineRatePrior>(config.instance.family, config.instance.n_states,
                                               config.instance.horizon, instance.n_arms(), grid);
  } else {
    throw std::invalid_argument("run_learn: unknown prior '" + config.algo.prior + "'");
  }

  LearnConfig lc;
  lc.episodes = config.algo.episodes;
  lc.batches_per_episode = config.algo.batches;
  lc.eval_paths = config.algo.eval_paths;
  lc.seed = config.algo.seed;
  lc.whittle_eps = config.algo.eps;
  lc.allow_idle = config.algo.allow_idle;
  lc.jobs = config.algo.jobs;

  const RegretCurve curve = run_rawip_ts(instance, *prior, lc);

  double r_max = 0.0;
  int x_max = 0;
  for (const auto& arm : instance.arms) {
    r_max = std::max(r_max, arm.rewards.maxCoeff());
    x_max = std::max(x_max, arm.n_states);
  }

  std::ostringstream csv;
  csv << "k,regret,regret_over_k,bound\n";
  for (const auto& point : curve.points) {
    csv << point.episode << "," << format_g9(point.cumulative) << ","
        << format_g9(point.averaged) << ","
        << format_g9(regret_bound(instance.n_arms(), instance.horizon, point.episode, r_max,
                                  x_max))
        << "\n";
  }
  write_csv(out / "regret.csv", csv.str());

  std::ostringstream detail;
  detail << "k,model_seed,oracle_estimate,learner_estimate,gap\n";
  for (const auto& point : curve.points) {
    detail << point.episode << "," << point.model_seed << ","
           << format_g9(point.oracle_estimate) << "," << format_g9(point.learner_estimate)
           << "," << format_g9(point.gap) << "\n";
  }
  write_csv(out / "episodes.csv", detail.str());

  write_text(out / "posterior.json", prior->checkpoint_json() + "\n");
}

void run_whittle(const ExperimentConfig& config) {
  prepare_out_dir(config);
  const fs::path out(config.out_dir);
  const BanditInstance instance = build_instance(config.instance, config.algo.seed);
  write_json(out / "instance.json", to_json(instance));

  const std::string kind = config.algo.policies.empty() ? "rawip" : config.algo.policies[0];
  std::vector<WhittleTable> tables;
  if (kind == "rawip") {
    tables = rawip_tables(instance, config.algo.eps);
  } else if (kind == "neutral") {
    tables = neutral_tables(instance, config.algo.eps);
  } else {
    throw std::invalid_argument("run_whittle: policy must be rawip or neutral");
  }

  std::ostringstream csv;
  csv << "arm_id,t,x,s_level,index\n";
  for (const auto& table : tables) {
    for (int t = 0; t < table.horizon; ++t) {
      for (int x = 0; x < table.n_states; ++x) {
        for (int s = 0; s < table.lattice.level_count(t); ++s) {
          csv << table.arm_id << "," << t << "," << x << ","
              << format_g9(table.lattice.value_of(table.lattice.levels[t][s])) << ","
              << format_g9(table.index[t](x, s)) << "\n";
        }
      }
    }
  }
  write_csv(out / "whittle.csv", csv.str());

  if (config.algo.dump_lambda) {
    const ArmSolution sol = kind == "neutral"
                                ? PenalizedArmSolver(instance.arms[0], identity_utility(),
                                                     instance.horizon)
                                      .solve(*config.algo.dump_lambda)
                                : solve_penalized(instance.arms[0], instance.utilities[0],
                                                  instance.horizon, *config.algo.dump_lambda);
    write_json(out / "solution.json", solution_to_json(sol));
  }
}

void run_check(const ExperimentConfig& config) {
  prepare_out_dir(config);
  const fs::path out(config.out_dir);
  const BanditInstance instance = build_instance(config.instance, config.algo.seed);
  write_json(out / "instance.json", to_json(instance));

  Json report = Json::array();
  for (int i = 0; i < instance.n_arms(); ++i) {
    const ArmModel& arm = instance.arms[i];
    Json entry;
    entry["arm_id"] = i;
    entry["assumption1"] = to_json(check_assumption1(arm));

    PenalizedArmSolver solver(arm, utility_function(instance.utilities[i]), instance.horizon);
    const PolicySolver fn = [&solver](double lambda) { return solver.solve_policy(lambda); };
    const double ub = find_passive_bound(fn, config.algo.eps);
    IndexabilityReport ir = verify_indexability(arm, instance.utilities[i], instance.horizon,
                                                linspace(0.0, ub, 50));
    ir.arm_id = i;
    entry["indexability"] = to_json(ir);
    report.push_back(std::move(entry));
  }
  Json doc;
  doc["arms"] = std::move(report);
  write_json(out / "check.json", doc);
}

void run_experiment(const ExperimentConfig& config) {
  if (config.mode == "plan") return run_plan(config);
  if (config.mode == "sweep") return run_sweep(config);
  if (config.mode == "learn") return run_learn(config);
  if (config.mode == "whittle") return run_whittle(config);
  if (config.mode == "check") return run_check(config);
  throw std::invalid_argument("run_experiment: unknown mode '" + config.mode + "'");
}

}  // namespace rawb
