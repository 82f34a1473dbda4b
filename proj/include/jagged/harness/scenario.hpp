#pragma once

// Ensemble execution, manifests and cross-run analyses.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jagged/harness/config.hpp"
#include "jagged/telemetry.hpp"
#include "jagged/verifier.hpp"

namespace jagged::harness {

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string error;  // divergence or convergence diagnostic
  Trace trace;
  AllocationSummary summary;
  VerificationResult verification;
  double wall_seconds = 0.0;
  std::filesystem::path trace_path;  // CSV
  std::filesystem::path trace_json_path;
  std::filesystem::path summary_path;
  std::filesystem::path bounds_path;
};

struct RunManifest {
  std::string name;
  std::string config_hash;
  nlohmann::json config;
  std::filesystem::path output_dir;  // empty when nothing was written
  std::vector<RunRecord> runs;

  bool any_diverged() const;
  /// Every bound report satisfied; under `strict`, assumption-limited runs
  /// also count as failures.
  bool bounds_satisfied(bool strict) const;
  nlohmann::json to_json() const;
};

struct ScenarioOptions {
  std::optional<std::filesystem::path> out;  // overrides the config's output_dir
  std::optional<std::uint64_t> seed;         // overrides the base seed
  std::size_t jobs = 1;
  bool write = true;
  bool verify = true;
};

/// Runs the ensemble (seeds base_seed + index) over `jobs` workers. A run
/// that diverges is recorded and the rest continue.
RunManifest run_scenario(const ScenarioConfig& config, const ScenarioOptions& options = {});

/// Verification options stored beside a trace.json (its "verify" object).
VerificationOptions stored_verify_options(const nlohmann::json& trace_json);

/// Reads a manifest.json written by run_scenario, reloading every trace.
RunManifest load_manifest(const std::filesystem::path& path);

/// Spearman rank correlation with average ranks for ties; nullopt when
/// either side has zero variance.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Across runs: early dispersion (1/m) sum (W_i(fT) - Wbar)^2 against final
/// J(T). Needs at least 10 runs; nullopt when undefined.
std::optional<double> correlate_early_late(const RunManifest& manifest, double early_fraction);

struct InterventionComparison {
  std::vector<double> delta_j;       // per matched run: treated - baseline
  std::vector<Vector> delta_gains;
  std::vector<Vector> delta_shares;  // cumulative shares
  std::vector<double> delta_peak_gain;  // change in the gain of the baseline's top capability
  double mean_delta_j = 0.0;
  double mean_delta_peak_gain = 0.0;
};

/// Matched by run index; seeds, ensemble sizes and capability counts must agree.
InterventionComparison compare_interventions(const RunManifest& baseline, const RunManifest& treated);

struct ScalingPoint {
  std::size_t dim = 0;
  double normalized_jaggedness = 0.0;  // J / (mean G)^2, averaged over the ensemble
};

/// Re-runs the config at each dimension by overriding `dim_pointer`.
std::vector<ScalingPoint> scaling_sweep(const ScenarioConfig& config, const std::vector<std::size_t>& dims,
                                        const std::string& dim_pointer, const ScenarioOptions& options = {});

/// Copy of the config with one field overridden; the name gains a suffix.
ScenarioConfig override_config(const ScenarioConfig& config, const std::string& pointer,
                               const nlohmann::json& value);

}  // namespace jagged::harness
