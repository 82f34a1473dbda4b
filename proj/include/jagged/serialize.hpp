#pragma once

// Text formats: trace CSV, full trace JSON (read back by `verify`), summary
// JSON and bound-report JSON.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "jagged/telemetry.hpp"
#include "jagged/verifier.hpp"

namespace jagged {

/// Shortest decimal text that is guaranteed to round-trip ("%.17g").
std::string format_real(double x);

/// One row per step: t, eta, grad_norm, p_1..p_m, E_1..E_m, C_1..C_m,
/// a_1..a_m, residual_norm, then achieved_E_1..achieved_E_m under governance.
void write_trace_csv(std::ostream& out, const Trace& trace);
std::string trace_csv(const Trace& trace);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);

/// Keys W, B_T, Ebar, G, J, kappa.
nlohmann::json summary_to_json(const AllocationSummary& s);

nlohmann::json report_to_json(const BoundReport& r);

/// {remainder_inflation, assumption_limited, window, reports: [...]}.
nlohmann::json verification_to_json(const VerificationResult& v);

/// Writes text, creating parent directories. Throws IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace jagged
