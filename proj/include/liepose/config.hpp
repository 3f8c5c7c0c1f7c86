#pragma once

// Experiment config files: strict JSON with a published schema. Unknown
// fields are rejected so a typo cannot silently fall back to a default.

#include <filesystem>
#include <string>
#include <vector>

#include "liepose/harness.hpp"

namespace liepose {

struct MethodConfig {
  std::string name;
  TrainConfig train;
};

struct ExperimentConfig {
  std::filesystem::path output_dir = "runs";
  std::vector<SceneConfig> scenes;
  std::vector<MethodConfig> methods;  // ordered by method name
  std::string raw_text;               // file contents, echoed into summaries
};

/// Parses and validates. Throws ConfigError with the offending field path
/// (or parse position) in the message.
ExperimentConfig parse_experiment_config(const std::string& text);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// run_id = method + "_" + scene + "_" + seed (the method's train seed).
std::string make_run_id(const std::string& method, const std::string& scene,
                        std::uint64_t seed);

}  // namespace liepose
