#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forum/core/validate.hpp"
#include "forum/harness/bench.hpp"
#include "forum/harness/compare.hpp"
#include "forum/harness/experiment.hpp"
#include "forum/harness/io.hpp"

namespace forum {

// Exit codes: 0 success, 1 failed checks, 2 config error, 3 divergence,
// 4 problem/method capability mismatch.
enum ExitCode {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitCapability = 4,
};

namespace detail {

inline Json load_config_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"first-order multi-gradient solver for multi-objective "
               "bi-level problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  bool quiet = false;
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "JSON config file")->required();
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--seed", seed_override, "override the config seed(s)");
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment config");
  add_common(cmd_run);
  CLI::App* cmd_bench =
      app.add_subcommand("bench-complexity", "per-iteration cost over a (T, p) grid");
  add_common(cmd_bench);
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "side-by-side method comparison");
  add_common(cmd_compare);
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "oracle checks for a problem config");
  add_common(cmd_validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const Json raw = detail::load_config_json(config_path);

    if (cmd_run->parsed()) {
      ExperimentConfig config = ExperimentConfig::from_json(raw);
      if (seed_override) config.seeds = {*seed_override};
      const ExperimentOutcome outcome = run_experiment(config, out_dir);
      if (!quiet) {
        for (const auto& repeat : outcome.repeats) {
          std::cout << config.name << " seed=" << repeat.seed << " verdict="
                    << repeat.verdict << " -> " << repeat.trace_path.string()
                    << "\n";
          for (const auto& w : repeat.run.warnings)
            std::cerr << "warning: " << w << "\n";
        }
        std::cout << "summary: " << outcome.summary_path.string() << "\n";
      }
      return outcome.any_diverged ? kExitDivergence : kExitOk;
    }

    if (cmd_bench->parsed()) {
      BenchConfig config = BenchConfig::from_json(raw);
      if (seed_override) config.seed = *seed_override;
      const ComplexityReport report = benchmark_complexity(config);
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      const auto csv_path = dir / (config.name + "_complexity.csv");
      const auto json_path = dir / (config.name + "_complexity.json");
      atomic_write_file(csv_path, complexity_csv(report));
      atomic_write_file(json_path, complexity_json(config, report).dump(2) + "\n");
      if (!quiet)
        std::cout << "complexity report: " << csv_path.string() << ", "
                  << json_path.string() << "\n";
      return kExitOk;
    }

    if (cmd_compare->parsed()) {
      CompareConfig config = CompareConfig::from_json(raw);
      if (seed_override) config.seed = *seed_override;
      const std::vector<CompareRow> rows = compare_methods(config);
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      const auto csv_path = dir / (config.name + "_compare.csv");
      atomic_write_file(csv_path, compare_csv(rows));
      if (!quiet) std::cout << "comparison: " << csv_path.string() << "\n";
      return kExitOk;
    }

    // validate
    const Json& problem_json = detail::require_field(raw, "problem", "config");
    const ProblemConfig problem_cfg = ProblemConfig::from_json(problem_json);
    const int samples = detail::field_or<int>(raw, "samples", 10, "config");
    const std::uint64_t seed =
        seed_override.value_or(detail::field_or<std::uint64_t>(raw, "seed", 0,
                                                               "config"));
    const auto problem = problem_cfg.make(seed);
    const ValidationReport report = validate_problem(*problem, samples, seed);
    Json out;
    out["problem"] = report.problem;
    out["all_passed"] = report.all_passed();
    Json checks = Json::array();
    for (const auto& c : report.checks)
      checks.push_back(Json{{"name", c.name},
                            {"passed", c.passed},
                            {"worst_error", c.worst_error},
                            {"detail", c.detail}});
    out["checks"] = checks;
    std::cout << out.dump(2) << "\n";
    return report.all_passed() ? kExitOk : kExitFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapabilityError& e) {
    std::cerr << "capability mismatch: " << e.what() << "\n";
    return kExitCapability;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << " (step " << e.step_index << ")\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace forum
