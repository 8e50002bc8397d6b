#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "forum/harness/experiment.hpp"

namespace forum {

// Side-by-side comparison of methods on one shared problem and
// initialization. Per method: final metrics, iterations until the chosen
// threshold metric first drops below its value ("not_reached" when it
// never does), and total wall time.
struct CompareConfig {
  std::string name = "compare";
  ProblemConfig problem;
  InitConfig init;
  std::uint64_t seed = 0;
  std::string threshold_metric = "optimality_gap";  // or q_exact | kkt_residual
  double threshold_value = 1e-2;

  struct Entry {
    Method method = Method::kForum;
    ForumConfig forum;
    MomlConfig moml;
  };
  std::vector<Entry> entries;

  static CompareConfig from_json(const Json& j) {
    CompareConfig cfg;
    cfg.name = detail::field_or<std::string>(j, "name", cfg.name, "compare");
    cfg.problem =
        ProblemConfig::from_json(detail::require_field(j, "problem", "compare"));
    cfg.init = InitConfig::from_json(detail::require_field(j, "init", "compare"));
    cfg.seed = detail::field_or<std::uint64_t>(j, "seed", 0, "compare");
    if (j.contains("threshold")) {
      const Json& t = j.at("threshold");
      cfg.threshold_metric = detail::field_or<std::string>(
          t, "metric", cfg.threshold_metric, "threshold");
      cfg.threshold_value =
          detail::field_or<double>(t, "value", cfg.threshold_value, "threshold");
      if (cfg.threshold_metric != "optimality_gap" &&
          cfg.threshold_metric != "q_exact" &&
          cfg.threshold_metric != "kkt_residual")
        throw ConfigError("threshold: metric must be optimality_gap, q_exact, "
                          "or kkt_residual");
    }
    const Json& runs = detail::require_field(j, "runs", "compare");
    if (!runs.is_array() || runs.empty())
      throw ConfigError("compare: runs must be a non-empty array");
    for (const Json& r : runs) {
      Entry entry;
      entry.method =
          method_from_string(detail::field_as<std::string>(r, "method", "runs"));
      if (entry.method == Method::kForum)
        entry.forum = forum_from_json(
            detail::field_or<Json>(r, "forum", Json::object(), "runs"));
      else
        entry.moml = moml_from_json(
            detail::field_or<Json>(r, "moml", Json::object(), "runs"),
            entry.method == Method::kMomlExact ? MomlConfig::Mode::kExact
                                               : MomlConfig::Mode::kUnrolled);
      cfg.entries.push_back(std::move(entry));
    }
    return cfg;
  }

  ExperimentConfig experiment_for(const Entry& entry) const {
    ExperimentConfig cfg;
    cfg.name = name;
    cfg.problem = problem;
    cfg.init = init;
    cfg.method = entry.method;
    cfg.forum = entry.forum;
    cfg.moml = entry.moml;
    cfg.seeds = {seed};
    return cfg;
  }
};

struct CompareRow {
  std::string method;
  std::optional<double> final_optimality_gap;
  std::optional<double> final_kkt_residual;
  std::optional<double> final_q_exact;
  std::optional<std::int64_t> iters_to_threshold;
  double total_wall_time_s = 0.0;
};

inline std::vector<CompareRow> compare_methods(const CompareConfig& config) {
  std::vector<CompareRow> rows;
  for (const auto& entry : config.entries) {
    const ExperimentConfig run_cfg = config.experiment_for(entry);
    run_cfg.check_capabilities();
    const RepeatOutcome outcome = run_single(run_cfg, config.seed);

    CompareRow row;
    row.method = method_name(entry.method);
    auto metric = [&](const char* key) -> std::optional<double> {
      const auto it = outcome.metrics.find(key);
      if (it == outcome.metrics.end()) return std::nullopt;
      return it->second;
    };
    row.final_optimality_gap = metric("final_optimality_gap");
    row.final_kkt_residual = metric("final_kkt_residual");
    row.final_q_exact = metric("final_q_exact");
    row.total_wall_time_s = metric("total_wall_time_s").value_or(0.0);

    for (const IterateRecord& r : outcome.run.trace) {
      std::optional<double> value;
      if (config.threshold_metric == "optimality_gap") value = r.optimality_gap;
      else if (config.threshold_metric == "q_exact") value = r.q_exact;
      else value = r.kkt_residual;
      if (value && *value < config.threshold_value) {
        row.iters_to_threshold = r.k;
        break;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "method,final_optimality_gap,final_kkt_residual,final_q_exact,"
         "iters_to_threshold,total_wall_time_s\n";
  for (const auto& r : rows) {
    out << r.method << "," << csv_number(r.final_optimality_gap) << ","
        << csv_number(r.final_kkt_residual) << "," << csv_number(r.final_q_exact)
        << ",";
    if (r.iters_to_threshold) out << *r.iters_to_threshold;
    else out << "not_reached";
    out << "," << csv_number(r.total_wall_time_s) << "\n";
  }
  return out.str();
}

}  // namespace forum
