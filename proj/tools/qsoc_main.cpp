// qsoc: scenario-driven front end for the stochastic/quantum optimal control
// toolkit. Subcommands: run, list, compare. Exit codes: 0 ok, 2 validation,
// 3 numerical failure, 4 I/O.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "qsoc/scenario/scenarios.hpp"

namespace {

int default_threads() {
  if (const char* env = std::getenv("QSOC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void print_report_summary(const qsoc::RunReport& report) {
  const auto& body = report.json();
  std::printf("scenario: %s\n", body["scenario"].get<std::string>().c_str());
  std::printf("config hash: %s\n", body["config_hash"].get<std::string>().c_str());
  for (const auto& [name, m] : body["metrics"].items()) {
    if (m.contains("std_error"))
      std::printf("  %-32s %.6g +- %.2g\n", name.c_str(), m["value"].get<double>(),
                  m["std_error"].get<double>());
    else
      std::printf("  %-32s %.6g (exact)\n", name.c_str(), m["value"].get<double>());
    if (m.contains("warnings"))
      for (const auto& w : m["warnings"])
        std::printf("    warning: %s\n", w.get<std::string>().c_str());
  }
  for (const auto& [name, inv] : body["invariants"].items())
    std::printf("  [%s] %-30s %s\n", inv["pass"].get<bool>() ? "ok" : "FAIL", name.c_str(),
                inv["detail"].get<std::string>().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsoc: information-state feedback control toolkit"};
  app.require_subcommand(1);

  std::string run_target, out_dir = ".";
  int threads = default_threads();
  std::int64_t seed_override = -1;

  auto* run_cmd = app.add_subcommand("run", "run a scenario config file or built-in name");
  run_cmd->add_option("config", run_target, "config path or built-in scenario name")
      ->required();
  run_cmd->add_option("--seed", seed_override, "override the config seed");
  run_cmd->add_option("--out", out_dir, "output directory for report and CSV artifacts");
  run_cmd->add_option("--threads", threads, "worker thread count (QSOC_THREADS honored)");

  auto* list_cmd = app.add_subcommand("list", "list built-in scenarios");

  std::string cmp_a, cmp_b;
  auto* cmp_cmd =
      app.add_subcommand("compare", "paired common-noise comparison of two configs");
  cmp_cmd->add_option("config_a", cmp_a, "first config")->required();
  cmp_cmd->add_option("config_b", cmp_b, "second config")->required();
  cmp_cmd->add_option("--out", out_dir, "output directory");
  cmp_cmd->add_option("--threads", threads, "worker thread count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) {
      for (const auto& [name, blurb] : qsoc::scenario_catalog())
        std::printf("%-16s %s\n", name.c_str(), blurb.c_str());
      return 0;
    }
    qsoc::RunOptions opt;
    opt.out_dir = out_dir;
    opt.threads = threads;
    if (run_cmd->parsed()) {
      auto config = qsoc::load_scenario_config(run_target);
      if (seed_override >= 0) config["seed"] = seed_override;
      const auto report = qsoc::run_scenario(config, opt);
      print_report_summary(report);
      std::printf("report: %s/report.json\n", out_dir.c_str());
      return 0;
    }
    if (cmp_cmd->parsed()) {
      const auto a = qsoc::load_scenario_config(cmp_a);
      const auto b = qsoc::load_scenario_config(cmp_b);
      const auto report = qsoc::compare_scenarios(a, b, opt);
      print_report_summary(report);
      std::printf("report: %s/compare_report.json\n", out_dir.c_str());
      return 0;
    }
  } catch (const qsoc::ValidationError& err) {
    std::fprintf(stderr, "validation error: %s\n", err.what());
    return 2;
  } catch (const qsoc::IoError& err) {
    std::fprintf(stderr, "i/o error: %s\n", err.what());
    return 4;
  } catch (const qsoc::NumericalError& err) {
    std::fprintf(stderr, "numerical error: %s\n", err.what());
    return 3;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 3;
  }
  return 0;
}
