#pragma once

// Experiment execution and reporting. Each (method, scene) pair is one run
// owning a per-epoch CSV and a JSON summary under the output directory; runs
// share no mutable state, so they may execute in parallel.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "liepose/config.hpp"
#include "liepose/metrics.hpp"

namespace liepose {

struct RunOptions {
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;  // replaces every config seed
  std::optional<std::filesystem::path> output_dir_override;
};

struct RunOutcome {
  std::string run_id;
  std::string method;
  std::string scene;
  bool diverged = false;
  std::string error;  // set when diverged
};

/// Executes every (method, scene) pair, writing <run_id>.csv and
/// <run_id>.json into the output directory. Returns one outcome per run.
/// Epoch rows hit the CSV as they complete, so a diverged run keeps its
/// partial curve.
std::vector<RunOutcome> run_experiment(const ExperimentConfig& cfg,
                                       const RunOptions& options,
                                       std::ostream& log);

struct ReportResult {
  std::string table_text;
  std::string table_csv;
  std::string curve_csv;
};

/// Builds the cross-method table from the run summaries in a directory and
/// the per-epoch curve CSV from the run CSVs. Throws EmptyInput when the
/// directory has no summaries and SceneMismatch when methods cover
/// different scene sets.
ReportResult build_report(const std::filesystem::path& dir);

}  // namespace liepose
