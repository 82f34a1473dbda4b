#pragma once

// Scenario configuration files (JSON, schema 1) and their resolution into
// concrete objectives, capabilities and trainer settings.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "jagged/capabilities.hpp"
#include "jagged/interventions.hpp"
#include "jagged/objectives.hpp"
#include "jagged/trainer.hpp"
#include "jagged/verifier.hpp"

namespace jagged::harness {

inline constexpr int kSchemaVersion = 1;

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::size_t ensemble = 1;
  std::uint64_t base_seed = 0;
  std::string output_dir;
  nlohmann::json document;  // the full validated file
};

/// Validates the top-level structure; every error names the offending field
/// as a JSON pointer. Per-run sections are checked again by `build_run`.
ScenarioConfig parse_config(const nlohmann::json& document);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Everything one ensemble member needs.
struct RunSetup {
  std::shared_ptr<const Objective> objective;
  std::shared_ptr<const QuadraticObjective> quadratic_base;  // set when the base loss is quadratic
  std::shared_ptr<const VarianceRegularizer> variance;
  std::shared_ptr<const CapabilitySet> capabilities;
  TrainerConfig trainer;
  Vector theta0;
  VerificationOptions verify;
};

/// Resolves the document for one seed. Random sections draw from a single
/// generator in a fixed order: dimension, capability count, horizon,
/// objective entries, capability directions.
RunSetup build_run(const nlohmann::json& document, std::uint64_t seed);

/// 64-bit FNV-1a of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& document);

/// Copy of `document` with the value at a JSON pointer replaced. Throws
/// UsageError when the parent does not exist.
nlohmann::json with_override(nlohmann::json document, const std::string& pointer,
                             const nlohmann::json& value);

/// Directory holding the bundled presets.
std::filesystem::path preset_directory();

/// A preset name or a path to a config file.
ScenarioConfig resolve_config(const std::string& name_or_path);

}  // namespace jagged::harness
