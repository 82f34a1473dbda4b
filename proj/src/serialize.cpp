#include "jagged/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "jagged/errors.hpp"

namespace jagged {

using nlohmann::json;

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const std::size_t m = trace.capability_count();
  out << "t,eta,grad_norm";
  for (const char* prefix : {"p_", "E_", "C_", "a_"}) {
    for (std::size_t i = 1; i <= m; ++i) out << ',' << prefix << i;
    if (prefix[0] == 'a') out << ",residual_norm";
  }
  if (trace.governance_active) {
    for (std::size_t i = 1; i <= m; ++i) out << ",achieved_E_" << i;
  }
  out << '\n';
  for (const StepRecord& s : trace.steps) {
    out << s.t << ',' << format_real(s.eta) << ',' << format_real(s.grad_norm);
    for (const Vector* v : {&s.projections, &s.shares, &s.capability_values, &s.coeffs}) {
      for (double x : *v) out << ',' << format_real(x);
    }
    out << ',' << format_real(s.residual_norm);
    if (trace.governance_active) {
      for (double x : s.applied_shares()) out << ',' << format_real(x);
    }
    out << '\n';
  }
}

std::string trace_csv(const Trace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

json to_json(const Vector& v) { return json(v.entries()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw UsageError("expected an array of numbers");
  std::vector<double> xs;
  for (const json& e : j) {
    if (!e.is_number()) throw UsageError("expected an array of numbers");
    xs.push_back(e.get<double>());
  }
  return Vector(std::move(xs));
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw UsageError("expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (const json& r : j) rows.push_back(vector_from_json(r).entries());
  return Matrix::from_rows(rows);
}

namespace {

json optional_vector(const Vector& v) { return v.empty() ? json(nullptr) : to_json(v); }

Vector optional_vector_from(const json& j) { return j.is_null() ? Vector() : vector_from_json(j); }

}  // namespace

json trace_to_json(const Trace& trace) {
  json steps = json::array();
  for (const StepRecord& s : trace.steps) {
    json row = {{"t", s.t},
                {"eta", s.eta},
                {"grad_norm", s.grad_norm},
                {"projections", to_json(s.projections)},
                {"shares", to_json(s.shares)},
                {"coeffs", to_json(s.coeffs)},
                {"residual_norm", s.residual_norm},
                {"capability_values", to_json(s.capability_values)},
                {"applied_norm", s.applied_norm},
                {"applied_projections", to_json(s.applied_projections)},
                {"predicted_gain", to_json(s.predicted_gain)},
                {"flagged", s.flagged}};
    if (s.achieved_shares) row["achieved_shares"] = to_json(*s.achieved_shares);
    if (s.prox_alignment) row["prox_alignment"] = to_json(*s.prox_alignment);
    if (s.struct_alignment) row["struct_alignment"] = to_json(*s.struct_alignment);
    if (s.coupling) row["coupling"] = to_json(*s.coupling);
    steps.push_back(std::move(row));
  }
  return {{"names", trace.names},
          {"lipschitz", to_json(trace.lipschitz)},
          {"theta_initial", to_json(trace.theta_initial)},
          {"theta_final", optional_vector(trace.theta_final)},
          {"capability_values_final", to_json(trace.capability_values_final)},
          {"coupling_final", trace.coupling_final.rows() ? to_json(trace.coupling_final) : json(nullptr)},
          {"governance_active", trace.governance_active},
          {"steps", std::move(steps)}};
}

Trace trace_from_json(const json& j) {
  try {
    Trace trace;
    trace.names = j.at("names").get<std::vector<std::string>>();
    trace.lipschitz = vector_from_json(j.at("lipschitz"));
    trace.theta_initial = vector_from_json(j.at("theta_initial"));
    trace.theta_final = optional_vector_from(j.at("theta_final"));
    trace.capability_values_final = vector_from_json(j.at("capability_values_final"));
    if (!j.at("coupling_final").is_null()) trace.coupling_final = matrix_from_json(j.at("coupling_final"));
    trace.governance_active = j.at("governance_active").get<bool>();
    for (const json& row : j.at("steps")) {
      StepRecord s;
      s.t = row.at("t").get<std::size_t>();
      s.eta = row.at("eta").get<double>();
      s.grad_norm = row.at("grad_norm").get<double>();
      s.projections = vector_from_json(row.at("projections"));
      s.shares = vector_from_json(row.at("shares"));
      s.coeffs = vector_from_json(row.at("coeffs"));
      s.residual_norm = row.at("residual_norm").get<double>();
      s.capability_values = vector_from_json(row.at("capability_values"));
      s.applied_norm = row.at("applied_norm").get<double>();
      s.applied_projections = vector_from_json(row.at("applied_projections"));
      s.predicted_gain = vector_from_json(row.at("predicted_gain"));
      s.flagged = row.at("flagged").get<bool>();
      if (row.contains("achieved_shares")) s.achieved_shares = vector_from_json(row["achieved_shares"]);
      if (row.contains("prox_alignment")) s.prox_alignment = vector_from_json(row["prox_alignment"]);
      if (row.contains("struct_alignment")) s.struct_alignment = vector_from_json(row["struct_alignment"]);
      if (row.contains("coupling")) s.coupling = matrix_from_json(row["coupling"]);
      trace.steps.push_back(std::move(s));
    }
    return trace;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed trace JSON: ") + e.what());
  }
}

json summary_to_json(const AllocationSummary& s) {
  return {{"W", to_json(s.weights)},
          {"B_T", s.budget},
          {"Ebar", to_json(s.cumulative_shares)},
          {"G", to_json(s.gains)},
          {"J", s.jaggedness},
          {"kappa", s.coupling.rows() ? to_json(s.coupling) : json(nullptr)}};
}

json report_to_json(const BoundReport& r) {
  return {{"name", r.name},
          {"lhs", r.lhs},
          {"rhs", r.rhs},
          {"remainder_budget", r.remainder_budget},
          {"satisfied", r.satisfied},
          {"margin", r.margin},
          {"steps_used", r.steps_used},
          {"flagged_steps", r.flagged_steps},
          {"applicable", r.applicable}};
}

json verification_to_json(const VerificationResult& v) {
  json reports = json::array();
  for (const BoundReport& r : v.reports) reports.push_back(report_to_json(r));
  return {{"remainder_inflation", kRemainderInflation},
          {"assumption_limited", v.assumption_limited},
          {"window", v.window},
          {"reports", std::move(reports)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace jagged
