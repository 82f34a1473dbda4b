#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "jagged/errors.hpp"
#include "jagged/interventions.hpp"
#include "jagged/serialize.hpp"
#include "jagged/trainer.hpp"

using namespace jagged;
using nlohmann::json;

namespace {

Trace toy_trace(bool governed, std::size_t horizon = 40) {
  QuadraticObjective obj(Matrix::diagonal(Vector{3, 0.1}), Vector{2, 0.02});
  CapabilitySet caps({std::make_shared<LinearCapability>("u", Vector{1, 0}),
                      std::make_shared<LinearCapability>("v", Vector{0, 1})});
  TrainerConfig cfg;
  cfg.horizon = horizon;
  cfg.eta.eta0 = 0.05;
  cfg.record_coupling_every = 7;
  if (governed) cfg.governance.emplace(Vector{0.6, 1}, Vector{0, 0});
  return run(cfg, obj, caps, Vector{0, 0});
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(FormatReal, RoundTripsExactly) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    EXPECT_EQ(std::strtod(format_real(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
}

TEST(TraceCsv, HeaderAndRowCount) {
  const Trace t = toy_trace(false);
  const std::string csv = trace_csv(t);
  EXPECT_EQ(first_line(csv), "t,eta,grad_norm,p_1,p_2,E_1,E_2,C_1,C_2,a_1,a_2,residual_norm");
  EXPECT_EQ(line_count(csv), t.horizon() + 1);
}

TEST(TraceCsv, GovernanceAddsAchievedColumns) {
  const std::string csv = trace_csv(toy_trace(true));
  EXPECT_EQ(first_line(csv),
            "t,eta,grad_norm,p_1,p_2,E_1,E_2,C_1,C_2,a_1,a_2,residual_norm,achieved_E_1,achieved_E_2");
}

TEST(TraceJson, RoundTripPreservesEverything) {
  for (bool governed : {false, true}) {
    const Trace a = toy_trace(governed);
    const Trace b = trace_from_json(json::parse(trace_to_json(a).dump()));
    EXPECT_EQ(trace_csv(a), trace_csv(b));
    EXPECT_EQ(a.names, b.names);
    EXPECT_EQ(a.theta_final, b.theta_final);
    EXPECT_EQ(a.capability_values_final, b.capability_values_final);
    EXPECT_EQ(a.governance_active, b.governance_active);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      EXPECT_EQ(a.steps[k].applied_projections, b.steps[k].applied_projections);
      EXPECT_EQ(a.steps[k].predicted_gain, b.steps[k].predicted_gain);
      EXPECT_EQ(a.steps[k].flagged, b.steps[k].flagged);
      EXPECT_EQ(a.steps[k].coupling.has_value(), b.steps[k].coupling.has_value());
    }
  }
}

TEST(TraceJson, MalformedInputIsUsageError) {
  EXPECT_THROW(trace_from_json(json::parse(R"({"names": 3})")), UsageError);
  EXPECT_THROW(vector_from_json(json::parse(R"([1, "x"])")), UsageError);
  EXPECT_THROW(matrix_from_json(json::parse(R"([[1, 2], [3]])")), UsageError);
}

TEST(SummaryJson, Keys) {
  const json s = summary_to_json(cumulative(toy_trace(false)));
  for (const char* k : {"W", "B_T", "Ebar", "G", "J", "kappa"}) EXPECT_TRUE(s.contains(k)) << k;
}

TEST(WriteText, UnwritableTargetIsIoError) {
  EXPECT_THROW(write_text("/proc/version/nested/file.txt", "x"), IoError);
  EXPECT_THROW(read_text("/nonexistent/definitely/missing.json"), IoError);
}

TEST(WriteText, CreatesParentDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "jagged_serialize_test";
  std::filesystem::remove_all(dir);
  write_text(dir / "a" / "b.txt", "hello\n");
  EXPECT_EQ(read_text(dir / "a" / "b.txt"), "hello\n");
  std::filesystem::remove_all(dir);
}
