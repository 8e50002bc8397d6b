#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "forum/baselines.hpp"
#include "forum/core/config.hpp"
#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/rng.hpp"
#include "forum/driver.hpp"
#include "forum/harness/io.hpp"
#include "forum/problems/hyperclean.hpp"
#include "forum/problems/quadratic.hpp"
#include "forum/problems/synthetic.hpp"

namespace forum {

using Json = nlohmann::json;

namespace detail {

inline const Json& require_field(const Json& j, const char* key,
                                 const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T field_as(const Json& j, const char* key, const char* where) {
  try {
    return require_field(j, key, where).get<T>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(where) + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback, const char* where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return field_as<T>(j, key, where);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem selection

struct ProblemConfig {
  std::string type;  // synthetic | random_quadratic | hyperclean
  // random_quadratic
  Index n = 3, p = 10, m = 2;
  // hyperclean
  HypercleanSpec hyperclean;
  // When set, generated problems use this seed for every repeat (fixed
  // data); otherwise the repeat seed is used.
  std::optional<std::uint64_t> fixed_seed;

  static ProblemConfig from_json(const Json& j) {
    ProblemConfig cfg;
    cfg.type = detail::field_as<std::string>(j, "type", "problem");
    if (cfg.type == "synthetic") {
      // no parameters
    } else if (cfg.type == "random_quadratic") {
      cfg.n = detail::field_or<Index>(j, "n", cfg.n, "problem");
      cfg.p = detail::field_or<Index>(j, "p", cfg.p, "problem");
      cfg.m = detail::field_or<Index>(j, "m", cfg.m, "problem");
      if (cfg.n < 1 || cfg.p < 1 || cfg.m < 1)
        throw ConfigError("problem: n, p, m must be >= 1");
    } else if (cfg.type == "hyperclean") {
      HypercleanSpec& h = cfg.hyperclean;
      h.datasets = detail::field_or<Index>(j, "datasets", h.datasets, "problem");
      h.classes = detail::field_or<Index>(j, "classes", h.classes, "problem");
      h.feature_dim =
          detail::field_or<Index>(j, "feature_dim", h.feature_dim, "problem");
      h.train_size =
          detail::field_or<Index>(j, "train_size", h.train_size, "problem");
      h.val_size = detail::field_or<Index>(j, "val_size", h.val_size, "problem");
      h.test_size =
          detail::field_or<Index>(j, "test_size", h.test_size, "problem");
      h.corruption_rate = detail::field_or<double>(j, "corruption_rate",
                                                   h.corruption_rate, "problem");
      h.cluster_separation = detail::field_or<double>(
          j, "cluster_separation", h.cluster_separation, "problem");
      h.ridge = detail::field_or<double>(j, "ridge", h.ridge, "problem");
      h.validate();
    } else {
      throw ConfigError("problem: unknown type '" + cfg.type + "'");
    }
    if (j.contains("seed"))
      cfg.fixed_seed = detail::field_as<std::uint64_t>(j, "seed", "problem");
    return cfg;
  }

  Json to_json() const {
    Json j;
    j["type"] = type;
    if (type == "random_quadratic") {
      j["n"] = n;
      j["p"] = p;
      j["m"] = m;
    } else if (type == "hyperclean") {
      j["datasets"] = hyperclean.datasets;
      j["classes"] = hyperclean.classes;
      j["feature_dim"] = hyperclean.feature_dim;
      j["train_size"] = hyperclean.train_size;
      j["val_size"] = hyperclean.val_size;
      j["test_size"] = hyperclean.test_size;
      j["corruption_rate"] = hyperclean.corruption_rate;
      j["cluster_separation"] = hyperclean.cluster_separation;
      j["ridge"] = hyperclean.ridge;
    }
    if (fixed_seed) j["seed"] = *fixed_seed;
    return j;
  }

  std::unique_ptr<ProblemOracle> make(std::uint64_t repeat_seed) const {
    const std::uint64_t s = fixed_seed.value_or(repeat_seed);
    if (type == "synthetic") return std::make_unique<SyntheticProblem>();
    if (type == "random_quadratic") {
      return std::make_unique<QuadraticProblem>(random_quadratic(s, n, p, m));
    }
    HypercleanSpec spec = hyperclean;
    spec.seed = s;
    return std::make_unique<HypercleanProblem>(spec);
  }

  OptimalityGap gap_fn() const {
    if (type == "synthetic")
      return [](const DecisionPoint& z) { return dist_to_pareto(z); };
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Initialization

struct InitConfig {
  bool random = false;
  double scale = 1.0;
  Vector alpha;  // explicit mode
  Vector omega;

  static InitConfig from_json(const Json& j) {
    InitConfig cfg;
    const std::string type = detail::field_as<std::string>(j, "type", "init");
    if (type == "random") {
      cfg.random = true;
      cfg.scale = detail::field_or<double>(j, "scale", 1.0, "init");
    } else if (type == "explicit") {
      const auto a = detail::field_as<std::vector<double>>(j, "alpha", "init");
      const auto w = detail::field_as<std::vector<double>>(j, "omega", "init");
      cfg.alpha = Eigen::Map<const Vector>(a.data(), static_cast<Index>(a.size()));
      cfg.omega = Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size()));
    } else {
      throw ConfigError("init: unknown type '" + type + "'");
    }
    return cfg;
  }

  Json to_json() const {
    Json j;
    if (random) {
      j["type"] = "random";
      j["scale"] = scale;
    } else {
      j["type"] = "explicit";
      j["alpha"] = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
      j["omega"] = std::vector<double>(omega.data(), omega.data() + omega.size());
    }
    return j;
  }

  DecisionPoint make(const Dims& dims, std::uint64_t seed) const {
    if (random) {
      Rng rng(seed);
      return DecisionPoint(scale * rng.normal_vector(dims.n),
                           scale * rng.normal_vector(dims.p));
    }
    if (alpha.size() != dims.n || omega.size() != dims.p)
      throw ConfigError("init: explicit point does not match problem dims (n=" +
                        std::to_string(dims.n) + ", p=" + std::to_string(dims.p) +
                        ")");
    return DecisionPoint(alpha, omega);
  }
};

// ---------------------------------------------------------------------------
// Solver config <-> json

inline QpConfig qp_from_json(const Json& j) {
  QpConfig qp;
  qp.max_iters = detail::field_or<int>(j, "max_iters", qp.max_iters, "qp");
  qp.tolerance = detail::field_or<double>(j, "tolerance", qp.tolerance, "qp");
  qp.grad_floor = detail::field_or<double>(j, "grad_floor", qp.grad_floor, "qp");
  return qp;
}

inline Json qp_to_json(const QpConfig& qp) {
  return Json{{"max_iters", qp.max_iters},
              {"tolerance", qp.tolerance},
              {"grad_floor", qp.grad_floor}};
}

inline ForumConfig forum_from_json(const Json& j) {
  ForumConfig cfg;
  cfg.K = detail::field_or<int>(j, "K", cfg.K, "forum");
  cfg.T = detail::field_or<int>(j, "T", cfg.T, "forum");
  cfg.mu = detail::field_or<double>(j, "mu", cfg.mu, "forum");
  cfg.eta = detail::field_or<double>(j, "eta", cfg.eta, "forum");
  cfg.rho = detail::field_or<double>(j, "rho", cfg.rho, "forum");
  cfg.beta_exponent =
      detail::field_or<double>(j, "beta_exponent", cfg.beta_exponent, "forum");
  cfg.warm_start = detail::field_or<bool>(j, "warm_start", cfg.warm_start, "forum");
  if (j.contains("per_block_steps")) {
    const auto steps =
        detail::field_as<std::vector<double>>(j, "per_block_steps", "forum");
    if (steps.size() != 2)
      throw ConfigError("forum: per_block_steps must be [mu_alpha, mu_omega]");
    cfg.per_block_steps = std::make_pair(steps[0], steps[1]);
  }
  cfg.metric_stride =
      detail::field_or<int>(j, "metric_stride", cfg.metric_stride, "forum");
  cfg.metric_ll_factor =
      detail::field_or<int>(j, "metric_ll_factor", cfg.metric_ll_factor, "forum");
  if (j.contains("qp")) cfg.qp = qp_from_json(j.at("qp"));
  if (j.contains("early_stop")) {
    const Json& e = j.at("early_stop");
    StoppingTolerances tols;
    tols.metric_tol =
        detail::field_or<double>(e, "metric_tol", tols.metric_tol, "early_stop");
    tols.stall_tol =
        detail::field_or<double>(e, "stall_tol", tols.stall_tol, "early_stop");
    tols.stall_window =
        detail::field_or<int>(e, "stall_window", tols.stall_window, "early_stop");
    cfg.early_stop = tols;
  }
  cfg.validate();
  return cfg;
}

inline Json forum_to_json(const ForumConfig& cfg) {
  Json j{{"K", cfg.K},
         {"T", cfg.T},
         {"mu", cfg.mu},
         {"eta", cfg.eta},
         {"rho", cfg.rho},
         {"beta_exponent", cfg.beta_exponent},
         {"warm_start", cfg.warm_start},
         {"metric_stride", cfg.metric_stride},
         {"metric_ll_factor", cfg.metric_ll_factor},
         {"qp", qp_to_json(cfg.qp)}};
  if (cfg.per_block_steps)
    j["per_block_steps"] =
        std::vector<double>{cfg.per_block_steps->first, cfg.per_block_steps->second};
  if (cfg.early_stop)
    j["early_stop"] = Json{{"metric_tol", cfg.early_stop->metric_tol},
                           {"stall_tol", cfg.early_stop->stall_tol},
                           {"stall_window", cfg.early_stop->stall_window}};
  return j;
}

inline MomlConfig moml_from_json(const Json& j, MomlConfig::Mode mode) {
  MomlConfig cfg;
  cfg.mode = mode;
  cfg.K = detail::field_or<int>(j, "K", cfg.K, "moml");
  cfg.T = detail::field_or<int>(j, "T", cfg.T, "moml");
  cfg.mu = detail::field_or<double>(j, "mu", cfg.mu, "moml");
  cfg.eta = detail::field_or<double>(j, "eta", cfg.eta, "moml");
  cfg.warm_start = detail::field_or<bool>(j, "warm_start", cfg.warm_start, "moml");
  cfg.metric_stride =
      detail::field_or<int>(j, "metric_stride", cfg.metric_stride, "moml");
  if (j.contains("qp")) cfg.qp = qp_from_json(j.at("qp"));
  cfg.validate();
  return cfg;
}

inline Json moml_to_json(const MomlConfig& cfg) {
  return Json{{"K", cfg.K},           {"T", cfg.T},
              {"mu", cfg.mu},         {"eta", cfg.eta},
              {"warm_start", cfg.warm_start},
              {"metric_stride", cfg.metric_stride},
              {"qp", qp_to_json(cfg.qp)}};
}

// ---------------------------------------------------------------------------
// Experiment config

enum class Method { kForum, kMomlExact, kMomlUnrolled };

inline Method method_from_string(const std::string& s) {
  if (s == "forum") return Method::kForum;
  if (s == "moml_exact") return Method::kMomlExact;
  if (s == "moml_unrolled") return Method::kMomlUnrolled;
  throw ConfigError("method: unknown value '" + s +
                    "' (expected forum | moml_exact | moml_unrolled)");
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kForum: return "forum";
    case Method::kMomlExact: return "moml_exact";
    default: return "moml_unrolled";
  }
}

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemConfig problem;
  Method method = Method::kForum;
  ForumConfig forum;
  MomlConfig moml;
  InitConfig init;
  std::vector<std::uint64_t> seeds = {0};

  static ExperimentConfig from_json(const Json& j) {
    ExperimentConfig cfg;
    cfg.name = detail::field_or<std::string>(j, "name", cfg.name, "config");
    cfg.problem =
        ProblemConfig::from_json(detail::require_field(j, "problem", "config"));
    cfg.method = method_from_string(
        detail::field_as<std::string>(j, "method", "config"));
    if (cfg.method == Method::kForum)
      cfg.forum = forum_from_json(detail::field_or<Json>(j, "forum", Json::object(),
                                                         "config"));
    else
      cfg.moml = moml_from_json(
          detail::field_or<Json>(j, "moml", Json::object(), "config"),
          cfg.method == Method::kMomlExact ? MomlConfig::Mode::kExact
                                           : MomlConfig::Mode::kUnrolled);
    cfg.init = InitConfig::from_json(detail::require_field(j, "init", "config"));

    if (j.contains("seeds")) {
      cfg.seeds = detail::field_as<std::vector<std::uint64_t>>(j, "seeds", "config");
      if (cfg.seeds.empty()) throw ConfigError("config: seeds must be non-empty");
    } else {
      const auto base = detail::field_or<std::uint64_t>(j, "seed", 0, "config");
      const auto repeats = detail::field_or<int>(j, "repeats", 1, "config");
      if (repeats < 1) throw ConfigError("config: repeats must be >= 1");
      cfg.seeds.clear();
      for (int r = 0; r < repeats; ++r)
        cfg.seeds.push_back(base + static_cast<std::uint64_t>(r));
    }
    return cfg;
  }

  Json to_json() const {
    Json j;
    j["name"] = name;
    j["problem"] = problem.to_json();
    j["method"] = method_name(method);
    if (method == Method::kForum)
      j["forum"] = forum_to_json(forum);
    else
      j["moml"] = moml_to_json(moml);
    j["init"] = init.to_json();
    j["seeds"] = seeds;
    return j;
  }

  std::string canonical() const { return to_json().dump(); }
  std::string hash() const { return fnv1a_hex(canonical()); }

  // Problem/method capability mismatches are reported before any compute.
  void check_capabilities() const {
    if (method == Method::kMomlExact && problem.type == "hyperclean")
      throw CapabilityError(
          "moml_exact needs exact_ll_solution and ll_solution_jacobian; "
          "problem 'hyperclean' provides neither");
  }
};

// ---------------------------------------------------------------------------
// Trace serialization

inline std::string trace_header(Index m) {
  std::ostringstream out;
  out << "k";
  for (Index i = 1; i <= m; ++i) out << ",F_" << i;
  out << ",q_tilde,q_exact,kkt_residual,optimality_gap,nu,direction_norm,"
         "wall_time_s,workspace_floats";
  return out.str();
}

inline std::string trace_csv(const RunResult& run, Index m,
                             const std::string& config_hash,
                             std::uint64_t seed) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  out << trace_header(m) << "\n";
  for (const IterateRecord& r : run.trace) {
    out << r.k;
    for (Index i = 0; i < m; ++i) out << "," << csv_number(r.F_values[i]);
    out << "," << csv_number(r.q_tilde) << "," << csv_number(r.q_exact) << ","
        << csv_number(r.kkt_residual) << "," << csv_number(r.optimality_gap)
        << "," << csv_number(r.nu) << "," << csv_number(r.direction_norm) << ","
        << csv_number(r.wall_time_seconds) << "," << r.workspace_floats << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Running

struct RepeatOutcome {
  std::uint64_t seed = 0;
  Dims dims;
  RunResult run;
  std::map<std::string, double> metrics;  // final scalar metrics
  std::string verdict;
  std::filesystem::path trace_path;
};

struct ExperimentOutcome {
  ExperimentConfig config;
  std::vector<RepeatOutcome> repeats;
  Json summary;
  std::filesystem::path summary_path;
  bool any_diverged = false;
};

namespace detail {

inline void collect_final_metrics(const RunResult& run, Index m,
                                  std::map<std::string, double>& metrics) {
  if (run.trace.empty()) return;
  const IterateRecord& last = run.trace.back();
  for (Index i = 0; i < m; ++i)
    metrics["final_F_" + std::to_string(i + 1)] = last.F_values[i];
  if (last.q_tilde) metrics["final_q_tilde"] = *last.q_tilde;
  if (last.q_exact) metrics["final_q_exact"] = *last.q_exact;
  if (last.kkt_residual) metrics["final_kkt_residual"] = *last.kkt_residual;
  if (last.optimality_gap) metrics["final_optimality_gap"] = *last.optimality_gap;
  metrics["final_direction_norm"] = last.direction_norm;
  double total_time = 0.0;
  std::int64_t peak_ws = 0;
  for (const auto& r : run.trace) {
    total_time += r.wall_time_seconds;
    peak_ws = std::max(peak_ws, r.workspace_floats);
  }
  metrics["total_wall_time_s"] = total_time;
  metrics["peak_workspace_floats"] = static_cast<double>(peak_ws);
  metrics["iterations"] = static_cast<double>(run.steps_executed);
  metrics["max_q_exact"] = run.max_q_exact;
}

inline std::string run_verdict(const RunResult& run, double tol) {
  if (run.diverged) return "diverged";
  if (run.verdict == StepVerdict::kConverged) return "converged";
  if (run.verdict == StepVerdict::kStalled) return "stalled";
  if (!run.trace.empty()) {
    const IterateRecord& last = run.trace.back();
    if (last.kkt_residual && last.q_exact && *last.kkt_residual < tol &&
        *last.q_exact < tol)
      return "converged";
  }
  return "completed";
}

}  // namespace detail

// Executes one configured repeat and returns the finished run plus its
// final metrics. Used by run_experiment and the method comparison.
inline RepeatOutcome run_single(const ExperimentConfig& config,
                                std::uint64_t seed) {
  RepeatOutcome outcome;
  outcome.seed = seed;
  const auto problem = config.problem.make(seed);
  const Dims dims = problem->dims();
  outcome.dims = dims;
  const DecisionPoint z0 = config.init.make(dims, seed);
  const OptimalityGap gap = config.problem.gap_fn();

  double verdict_tol = 1e-6;
  if (config.method == Method::kForum) {
    ForumConfig fc = config.forum;
    fc.seed = seed;
    if (fc.early_stop) verdict_tol = fc.early_stop->metric_tol;
    outcome.run = run_forum(*problem, z0, fc, gap);
  } else {
    MomlConfig mc = config.moml;
    mc.seed = seed;
    outcome.run = run_moml(*problem, z0, mc, gap);
  }

  detail::collect_final_metrics(outcome.run, dims.m, outcome.metrics);
  outcome.verdict = detail::run_verdict(outcome.run, verdict_tol);

  if (config.problem.type == "hyperclean" && !outcome.run.diverged) {
    const auto& hp = dynamic_cast<const HypercleanProblem&>(*problem);
    const HypercleanReport report =
        hyperclean_report(hp, outcome.run.final_point);
    outcome.metrics["mean_weight_clean"] = report.mean_weight_clean;
    outcome.metrics["mean_weight_corrupt"] = report.mean_weight_corrupt;
    outcome.metrics["mean_test_accuracy"] = report.mean_test_accuracy();
    for (std::size_t i = 0; i < report.test_accuracy.size(); ++i) {
      const std::string suffix = "_" + std::to_string(i + 1);
      outcome.metrics["val_accuracy" + suffix] = report.val_accuracy[i];
      outcome.metrics["test_accuracy" + suffix] = report.test_accuracy[i];
      outcome.metrics["test_macro_f1" + suffix] = report.test_macro_f1[i];
    }
  }
  return outcome;
}

// Runs every configured seed, writes one trace CSV per repeat and a summary
// JSON, and returns everything written. Outputs embed the config hash and
// seed; re-running from the summary's config echo reproduces every trace
// bit-for-bit except the wall_time_s column (timing is physical).
inline ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                        const std::filesystem::path& out_dir) {
  config.check_capabilities();
  std::filesystem::create_directories(out_dir);
  const std::string hash = config.hash();

  ExperimentOutcome outcome;
  outcome.config = config;

  Json repeats_json = Json::array();
  for (const std::uint64_t seed : config.seeds) {
    RepeatOutcome repeat = run_single(config, seed);

    repeat.trace_path =
        out_dir / (config.name + "_seed" + std::to_string(seed) + "_trace.csv");
    atomic_write_file(repeat.trace_path,
                      trace_csv(repeat.run, repeat.dims.m, hash, seed));

    Json rj;
    rj["seed"] = seed;
    rj["verdict"] = repeat.verdict;
    rj["diverged"] = repeat.run.diverged;
    rj["trace_rows"] = repeat.run.trace.size();
    rj["warnings"] = repeat.run.warnings;
    rj["metrics"] = repeat.metrics;
    repeats_json.push_back(rj);

    outcome.any_diverged = outcome.any_diverged || repeat.run.diverged;
    outcome.repeats.push_back(std::move(repeat));
  }

  // Aggregates over repeats: mean and std of every metric present in all.
  Json aggregates = Json::object();
  if (!outcome.repeats.empty()) {
    for (const auto& [key, value] : outcome.repeats.front().metrics) {
      std::vector<double> values;
      values.push_back(value);
      bool everywhere = true;
      for (std::size_t r = 1; r < outcome.repeats.size(); ++r) {
        const auto it = outcome.repeats[r].metrics.find(key);
        if (it == outcome.repeats[r].metrics.end()) {
          everywhere = false;
          break;
        }
        values.push_back(it->second);
      }
      if (!everywhere) continue;
      const double mean =
          std::accumulate(values.begin(), values.end(), 0.0) / values.size();
      double var = 0.0;
      for (const double v : values) var += (v - mean) * (v - mean);
      const double std_dev =
          values.size() > 1 ? std::sqrt(var / (values.size() - 1)) : 0.0;
      aggregates[key] = Json{{"mean", mean}, {"std", std_dev}};
    }
  }

  Json summary;
  summary["config"] = config.to_json();
  summary["config_hash"] = hash;
  summary["method"] = method_name(config.method);
  summary["problem"] = config.problem.type;
  summary["repeats"] = repeats_json;
  summary["aggregates"] = aggregates;

  outcome.summary = summary;
  outcome.summary_path = out_dir / (config.name + "_summary.json");
  atomic_write_file(outcome.summary_path, summary.dump(2) + "\n");
  return outcome;
}

}  // namespace forum
