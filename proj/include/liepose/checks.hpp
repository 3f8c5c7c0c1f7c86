#pragma once

// Verification suites behind the CLI `check` subcommand. Each suite runs a
// fixed-seed oracle comparison and reports the worst observed error against
// its tolerance.

#include <string>
#include <vector>

namespace liepose {

struct CheckLine {
  std::string name;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckLine> lines;
  double runtime_s = 0.0;

  bool pass() const {
    for (const CheckLine& line : lines) {
      if (!line.pass) {
        return false;
      }
    }
    return !lines.empty();
  }
};

/// Suites: roundtrip, grad, sample, density.
const std::vector<std::string>& check_suite_names();

/// Throws std::invalid_argument for an unknown suite name.
SuiteResult run_check_suite(const std::string& name);

}  // namespace liepose
