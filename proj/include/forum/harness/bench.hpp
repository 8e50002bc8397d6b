#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "forum/harness/experiment.hpp"

namespace forum {

// Grid settings for the per-iteration complexity measurement. The problem
// family is the random quadratic with p swept over the grid; every cell is
// timed over timed_iterations iterations after warmup_iterations warm-up
// iterations, with metric bookkeeping disabled.
struct BenchConfig {
  std::vector<int> T_values = {1, 4, 16, 64, 256};
  std::vector<Index> p_values = {100, 1000, 10000};
  std::vector<Method> methods = {Method::kForum, Method::kMomlUnrolled};
  Index n = 10;
  Index m = 2;
  ForumConfig forum;
  MomlConfig moml;
  int warmup_iterations = 2;
  int timed_iterations = 5;
  std::uint64_t seed = 0;
  std::string name = "bench";

  static BenchConfig from_json(const Json& j) {
    BenchConfig cfg;
    cfg.name = detail::field_or<std::string>(j, "name", cfg.name, "bench");
    if (j.contains("T_values"))
      cfg.T_values = detail::field_as<std::vector<int>>(j, "T_values", "bench");
    if (j.contains("p_values"))
      cfg.p_values = detail::field_as<std::vector<Index>>(j, "p_values", "bench");
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& name :
           detail::field_as<std::vector<std::string>>(j, "methods", "bench"))
        cfg.methods.push_back(method_from_string(name));
    }
    cfg.n = detail::field_or<Index>(j, "n", cfg.n, "bench");
    cfg.m = detail::field_or<Index>(j, "m", cfg.m, "bench");
    if (j.contains("forum")) cfg.forum = forum_from_json(j.at("forum"));
    if (j.contains("moml"))
      cfg.moml = moml_from_json(j.at("moml"), MomlConfig::Mode::kUnrolled);
    cfg.warmup_iterations = detail::field_or<int>(j, "warmup_iterations",
                                                  cfg.warmup_iterations, "bench");
    cfg.timed_iterations = detail::field_or<int>(j, "timed_iterations",
                                                 cfg.timed_iterations, "bench");
    cfg.seed = detail::field_or<std::uint64_t>(j, "seed", cfg.seed, "bench");
    if (cfg.T_values.empty() || cfg.p_values.empty() || cfg.methods.empty())
      throw ConfigError("bench: T_values, p_values, methods must be non-empty");
    if (cfg.warmup_iterations < 0 || cfg.timed_iterations < 1)
      throw ConfigError("bench: need warmup >= 0 and timed >= 1 iterations");
    return cfg;
  }

  Json to_json() const {
    Json j;
    j["name"] = name;
    j["T_values"] = T_values;
    j["p_values"] = p_values;
    std::vector<std::string> names;
    for (const Method m_ : methods) names.push_back(method_name(m_));
    j["methods"] = names;
    j["n"] = n;
    j["m"] = m;
    j["forum"] = forum_to_json(forum);
    j["moml"] = moml_to_json(moml);
    j["warmup_iterations"] = warmup_iterations;
    j["timed_iterations"] = timed_iterations;
    j["seed"] = seed;
    return j;
  }
};

struct ComplexityCell {
  std::string method;
  int T = 0;
  Index p = 0;
  double time_mean_s = 0.0;
  double time_std_s = 0.0;
  std::int64_t peak_workspace_floats = 0;
};

struct ComplexitySlope {
  std::string method;
  Index p = 0;
  double time_vs_T = 0.0;       // least-squares slope, seconds per LL step
  double workspace_vs_T = 0.0;  // floats per LL step
};

struct ComplexityReport {
  std::vector<ComplexityCell> cells;
  std::vector<ComplexitySlope> slopes;

  const ComplexityCell& cell(const std::string& method, int T, Index p) const {
    for (const auto& c : cells)
      if (c.method == method && c.T == T && c.p == p) return c;
    throw ConfigError("complexity report: no cell for " + method + " T=" +
                      std::to_string(T) + " p=" + std::to_string(p));
  }
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace detail

// Measures per-upper-level-iteration wall time and peak workspace floats
// over the (method, T, p) grid and fits least-squares slopes against T.
// Timing covers the update computation only (metrics are disabled).
inline ComplexityReport benchmark_complexity(const BenchConfig& config) {
  ComplexityReport report;
  for (const Method method : config.methods) {
    for (const Index p : config.p_values) {
      const QuadraticProblem problem =
          random_quadratic(config.seed, config.n, p, config.m);
      Rng init_rng(config.seed);
      const DecisionPoint z0(init_rng.normal_vector(config.n),
                             init_rng.normal_vector(p));

      std::vector<double> slope_T, slope_time, slope_ws;
      for (const int T : config.T_values) {
        const int total = config.warmup_iterations + config.timed_iterations;
        RunResult run;
        if (method == Method::kForum) {
          ForumConfig fc = config.forum;
          fc.K = total;
          fc.T = T;
          fc.metric_stride = 0;
          fc.seed = config.seed;
          run = run_forum(problem, z0, fc);
        } else if (method == Method::kMomlUnrolled) {
          MomlConfig mc = config.moml;
          mc.mode = MomlConfig::Mode::kUnrolled;
          mc.K = total;
          mc.T = T;
          mc.metric_stride = 0;
          mc.seed = config.seed;
          run = run_moml(problem, z0, mc);
        } else {
          MomlConfig mc = config.moml;
          mc.mode = MomlConfig::Mode::kExact;
          mc.K = total;
          mc.metric_stride = 0;
          mc.seed = config.seed;
          run = run_moml(problem, z0, mc);
        }

        ComplexityCell cell;
        cell.method = method_name(method);
        cell.T = T;
        cell.p = p;
        std::vector<double> times;
        for (int k = config.warmup_iterations; k < total; ++k) {
          const IterateRecord& r = run.trace.at(static_cast<std::size_t>(k));
          times.push_back(r.wall_time_seconds);
          cell.peak_workspace_floats =
              std::max(cell.peak_workspace_floats, r.workspace_floats);
        }
        double mean = 0.0;
        for (const double t : times) mean += t;
        mean /= static_cast<double>(times.size());
        double var = 0.0;
        for (const double t : times) var += (t - mean) * (t - mean);
        cell.time_mean_s = mean;
        cell.time_std_s = times.size() > 1
                              ? std::sqrt(var / static_cast<double>(times.size() - 1))
                              : 0.0;
        report.cells.push_back(cell);

        slope_T.push_back(static_cast<double>(T));
        slope_time.push_back(cell.time_mean_s);
        slope_ws.push_back(static_cast<double>(cell.peak_workspace_floats));
      }

      ComplexitySlope slope;
      slope.method = method_name(method);
      slope.p = p;
      slope.time_vs_T = detail::ls_slope(slope_T, slope_time);
      slope.workspace_vs_T = detail::ls_slope(slope_T, slope_ws);
      report.slopes.push_back(slope);
    }
  }
  return report;
}

inline std::string complexity_csv(const ComplexityReport& report) {
  std::ostringstream out;
  out << "method,T,p,time_mean_s,time_std_s,peak_workspace_floats\n";
  for (const auto& c : report.cells)
    out << c.method << "," << c.T << "," << c.p << "," << csv_number(c.time_mean_s)
        << "," << csv_number(c.time_std_s) << "," << c.peak_workspace_floats
        << "\n";
  return out.str();
}

inline Json complexity_json(const BenchConfig& config,
                            const ComplexityReport& report) {
  Json j;
  j["config"] = config.to_json();
  j["config_hash"] = fnv1a_hex(config.to_json().dump());
  Json cells = Json::array();
  for (const auto& c : report.cells)
    cells.push_back(Json{{"method", c.method},
                         {"T", c.T},
                         {"p", c.p},
                         {"time_mean_s", c.time_mean_s},
                         {"time_std_s", c.time_std_s},
                         {"peak_workspace_floats", c.peak_workspace_floats}});
  j["cells"] = cells;
  Json slopes = Json::array();
  for (const auto& s : report.slopes)
    slopes.push_back(Json{{"method", s.method},
                          {"p", s.p},
                          {"time_vs_T", s.time_vs_T},
                          {"workspace_vs_T", s.workspace_vs_T}});
  j["slopes"] = slopes;
  return j;
}

}  // namespace forum
