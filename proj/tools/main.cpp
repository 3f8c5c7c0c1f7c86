#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "liepose/checks.hpp"
#include "liepose/config.hpp"
#include "liepose/errors.hpp"
#include "liepose/experiment.hpp"

namespace {

int cmd_check(const std::string& suite) {
  liepose::SuiteResult result;
  try {
    result = liepose::run_check_suite(suite);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n"
              << "usage: check <suite> with suite one of:";
    for (const std::string& name : liepose::check_suite_names()) {
      std::cerr << ' ' << name;
    }
    std::cerr << '\n';
    return 2;
  }
  for (const liepose::CheckLine& line : result.lines) {
    std::printf("%s: max observed %.6g (tolerance %.6g) %s\n",
                line.name.c_str(), line.observed, line.tolerance,
                line.pass ? "PASS" : "FAIL");
  }
  std::printf("suite %s: %s in %.2f s\n", result.suite.c_str(),
              result.pass() ? "PASS" : "FAIL", result.runtime_s);
  return result.pass() ? 0 : 1;
}

int cmd_train(const std::string& config_path, int jobs,
              const std::optional<std::uint64_t>& seed_override,
              const std::optional<std::string>& output_dir) {
  liepose::ExperimentConfig cfg;
  try {
    cfg = liepose::load_experiment_config(config_path);
  } catch (const liepose::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  liepose::RunOptions options;
  options.jobs = jobs;
  options.seed_override = seed_override;
  if (output_dir) {
    options.output_dir_override = *output_dir;
  }
  const auto outcomes = liepose::run_experiment(cfg, options, std::cout);
  int diverged = 0;
  for (const liepose::RunOutcome& outcome : outcomes) {
    if (outcome.diverged) {
      ++diverged;
    }
  }
  if (diverged > 0) {
    std::cerr << diverged << " of " << outcomes.size()
              << " runs diverged; partial results kept\n";
    return 1;
  }
  std::cout << outcomes.size() << " runs completed\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  liepose::ReportResult report;
  try {
    report = liepose::build_report(dir);
  } catch (const liepose::SceneMismatch& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const liepose::EmptyInput& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  std::cout << report.table_text;
  const auto table_path = std::filesystem::path(dir) / "report.csv";
  const auto curve_path = std::filesystem::path(dir) / "curve.csv";
  std::ofstream(table_path, std::ios::trunc) << report.table_csv;
  std::ofstream(curve_path, std::ios::trunc) << report.curve_csv;
  std::cout << "wrote " << table_path.string() << " and "
            << curve_path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SE(3) pose losses with learned uncertainty: verification "
               "suites, synthetic experiments, and reports"};
  app.require_subcommand(1);

  std::string suite;
  CLI::App* check =
      app.add_subcommand("check", "run a fixed-seed verification suite");
  check->add_option("suite", suite, "roundtrip, grad, sample, or density")
      ->required();

  std::string config_path;
  int jobs = 1;
  std::uint64_t seed_value = 0;
  std::string output_dir_value;
  CLI::App* train =
      app.add_subcommand("train", "execute every (method, scene) run in a "
                                  "config file");
  train->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  train->add_option("--jobs", jobs, "parallel runs (default 1)");
  CLI::Option* seed_opt = train->add_option(
      "--seed-override", seed_value, "replace every configured seed");
  CLI::Option* dir_opt = train->add_option(
      "--output-dir", output_dir_value, "override the configured output_dir");

  std::string report_dir;
  CLI::App* report = app.add_subcommand(
      "report", "build the cross-method table from run artifacts");
  report->add_option("dir", report_dir, "directory with run artifacts")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*check) {
      return cmd_check(suite);
    }
    if (*train) {
      if (jobs < 1) {
        std::cerr << "--jobs must be at least 1\n";
        return 2;
      }
      std::optional<std::uint64_t> seed_override;
      if (*seed_opt) {
        seed_override = seed_value;
      }
      std::optional<std::string> output_dir;
      if (*dir_opt) {
        output_dir = output_dir_value;
      }
      return cmd_train(config_path, jobs, seed_override, output_dir);
    }
    if (*report) {
      if (!std::filesystem::is_directory(report_dir)) {
        std::cerr << "not a directory: " << report_dir << '\n';
        return 2;
      }
      return cmd_report(report_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
