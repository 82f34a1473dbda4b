#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jagged/harness/scenario.hpp"

namespace jagged::harness {

struct Series {
  std::string label;
  std::vector<double> values;
};

/// Static, self-contained SVG line chart; x runs over value indices.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<Series>& series);

/// Per-step curves of a trace: cumulative shares, gains and J(t).
std::vector<Series> cumulative_share_series(const Trace& trace);
std::vector<Series> gain_series(const Trace& trace);
std::vector<Series> jaggedness_series(const Trace& trace);

/// Writes <dir>/report/{summary.json, runs.csv, shares.svg, gains.svg,
/// jaggedness.svg}; charts show the first completed run. Returns the paths.
/// Throws UsageError for an empty ensemble and IoError when unwritable.
std::vector<std::filesystem::path> emit_report(const RunManifest& manifest,
                                               const std::filesystem::path& dir);

}  // namespace jagged::harness
