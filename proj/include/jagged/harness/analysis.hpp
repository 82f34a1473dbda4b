#pragma once

// Scenario-level checks driven by a config's "analysis" block, compared
// against the thresholds stored in the same file.

#include <string>
#include <vector>

#include <json.hpp>

#include "jagged/harness/config.hpp"
#include "jagged/harness/scenario.hpp"

namespace jagged::harness {

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", "<=", ">", ">=", or "holds"
  double threshold = 0.0;
  bool passed = false;
};

struct AnalysisResult {
  std::string kind;
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Threshold value by key; throws UsageError naming the field when absent.
double threshold(const ScenarioConfig& config, const std::string& key);

/// Runs the analysis named by /analysis/kind. `primary` is the manifest of
/// the config as written; analyses that need variants run them here.
/// A config without an analysis block yields an empty, passing result.
AnalysisResult analyze(const ScenarioConfig& config, const RunManifest& primary,
                       const ScenarioOptions& options = {});

}  // namespace jagged::harness
