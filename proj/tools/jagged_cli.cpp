#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jagged/errors.hpp"
#include "jagged/harness/analysis.hpp"
#include "jagged/harness/config.hpp"
#include "jagged/harness/report.hpp"
#include "jagged/harness/scenario.hpp"
#include "jagged/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jagged;
using namespace jagged::harness;

namespace {

enum Exit { kOk = 0, kBoundFailure = 1, kUsage = 2, kDivergence = 3 };

struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t jobs = 1;
  bool strict = false;
};

ScenarioOptions options_from(const Flags& f) {
  ScenarioOptions o;
  o.seed = f.seed;
  if (f.out) o.out = fs::path(*f.out);
  o.jobs = f.jobs == 0 ? 1 : f.jobs;
  return o;
}

void print_run_line(const RunRecord& r) {
  if (r.diverged) {
    std::printf("run %04zu seed %llu  DIVERGED  %s\n", r.index, static_cast<unsigned long long>(r.seed),
                r.error.c_str());
    return;
  }
  std::size_t failed = 0;
  for (const BoundReport& b : r.verification.reports) failed += b.applicable && !b.satisfied;
  std::printf("run %04zu seed %llu  T=%zu  J=%s  Ebar=[", r.index, static_cast<unsigned long long>(r.seed),
              r.trace.horizon(), format_real(r.summary.jaggedness).c_str());
  for (std::size_t i = 0; i < r.summary.cumulative_shares.size(); ++i) {
    std::printf("%s%.4f", i ? ", " : "", r.summary.cumulative_shares[i]);
  }
  std::printf("]  bounds %zu/%zu%s\n", r.verification.reports.size() - failed, r.verification.reports.size(),
              r.verification.assumption_limited ? "  assumption-limited" : "");
}

void print_reports(const VerificationResult& v) {
  for (const BoundReport& b : v.reports) {
    std::printf("  %-4s %-28s lhs=%-24s rhs=%-24s margin=%s\n",
                !b.applicable ? "n/a" : (b.satisfied ? "ok" : "FAIL"), b.name.c_str(),
                format_real(b.lhs).c_str(), format_real(b.rhs).c_str(), format_real(b.margin).c_str());
  }
}

int manifest_status(const RunManifest& m, bool strict) {
  if (m.any_diverged()) return kDivergence;
  if (!m.bounds_satisfied(strict)) return kBoundFailure;
  return kOk;
}

int run_command(const std::string& target, const Flags& flags) {
  const ScenarioConfig config = resolve_config(target);
  const ScenarioOptions opt = options_from(flags);
  const RunManifest manifest = run_scenario(config, opt);
  std::printf("scenario %s  config %s  runs %zu  -> %s\n", manifest.name.c_str(), manifest.config_hash.c_str(),
              manifest.runs.size(), manifest.output_dir.string().c_str());
  for (const RunRecord& r : manifest.runs) print_run_line(r);
  int status = manifest_status(manifest, flags.strict);

  if (config.document.contains("analysis") && !manifest.runs.empty()) {
    ScenarioOptions aopt = opt;
    aopt.out = manifest.output_dir;
    const AnalysisResult a = analyze(config, manifest, aopt);
    write_text(manifest.output_dir / "analysis.json", a.to_json().dump(2) + "\n");
    std::printf("analysis %s\n", a.kind.c_str());
    for (const Check& c : a.checks) {
      if (c.relation == "holds") {
        std::printf("  %-4s %s\n", c.passed ? "ok" : "FAIL", c.name.c_str());
      } else {
        std::printf("  %-4s %s = %s %s %s\n", c.passed ? "ok" : "FAIL", c.name.c_str(), format_real(c.value).c_str(),
                    c.relation.c_str(), format_real(c.threshold).c_str());
      }
    }
    if (!a.passed() && status == kOk) status = kBoundFailure;
  }
  return status;
}

int verify_command(const std::string& target, const Flags& flags) {
  fs::path path(target);
  if (fs::is_directory(path)) path /= "trace.json";
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  const Trace trace = trace_from_json(doc);
  const VerificationResult v = verify_trace(trace, stored_verify_options(doc));
  std::printf("%s  T=%zu  window=%zu%s\n", path.string().c_str(), trace.horizon(), v.window,
              v.assumption_limited ? "  assumption-limited" : "");
  print_reports(v);
  bool ok = true;
  for (const BoundReport& b : v.reports) ok = ok && (!b.applicable || b.satisfied);
  if (flags.strict && v.assumption_limited) ok = false;
  return ok ? kOk : kBoundFailure;
}

std::vector<json> parse_values(const std::string& list) {
  std::vector<json> values;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty()) throw UsageError("--values: empty entry");
    json v = json::parse(item, nullptr, false);
    values.push_back(v.is_discarded() ? json(item) : v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

int sweep_command(const std::string& target, const std::string& param, const std::string& values_text,
                  const Flags& flags) {
  const ScenarioConfig base = resolve_config(target);
  const std::vector<json> values = parse_values(values_text);
  const fs::path root = flags.out ? fs::path(*flags.out) : fs::path(base.output_dir) / "sweep";
  int status = kOk;
  json table = json::array();
  for (const json& v : values) {
    const ScenarioConfig variant = override_config(base, param, v);
    ScenarioOptions opt = options_from(flags);
    opt.out = root / v.dump();
    const RunManifest m = run_scenario(variant, opt);
    std::printf("%s = %s\n", param.c_str(), v.dump().c_str());
    for (const RunRecord& r : m.runs) print_run_line(r);
    const int s = manifest_status(m, flags.strict);
    if (s > status) status = s;
    json row = {{"value", v}, {"manifest", (*opt.out / "manifest.json").generic_string()}};
    json runs = json::array();
    for (const RunRecord& r : m.runs) {
      if (!r.diverged) runs.push_back(summary_to_json(r.summary));
    }
    row["summaries"] = std::move(runs);
    table.push_back(std::move(row));
  }
  write_text(root / "sweep.json", json({{"parameter", param}, {"points", table}}).dump(2) + "\n");
  return status;
}

int report_command(const std::string& target) {
  fs::path path(target);
  if (fs::is_directory(path)) path /= "manifest.json";
  const RunManifest m = load_manifest(path);
  for (const fs::path& p : emit_report(m, m.output_dir)) std::printf("%s\n", p.string().c_str());
  return kOk;
}

int presets_command() {
  const fs::path dir = preset_directory();
  if (!fs::is_directory(dir)) throw UsageError("preset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    const ScenarioConfig c = load_config(f);
    std::printf("%-22s %s\n", c.name.c_str(), c.description.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-allocation simulator and bound verifier"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--seed", flags.seed, "Override the base seed");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--jobs", flags.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  app.add_flag("--strict", flags.strict, "Treat assumption-limited reports as failures");

  std::string target;
  std::string param;
  std::string values;
  auto* run = app.add_subcommand("run", "Run a preset or config file");
  run->add_option("config", target, "Preset name or config path")->required();
  auto* verify = app.add_subcommand("verify", "Re-check the bounds of a stored trace");
  verify->add_option("trace-dir", target, "Run directory or trace.json")->required();
  auto* sweep = app.add_subcommand("sweep", "Run a config over values of one field");
  sweep->add_option("config", target, "Preset name or config path")->required();
  sweep->add_option("--param", param, "JSON pointer to the swept field")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  auto* report = app.add_subcommand("report", "Write summary, CSV and SVG charts for a manifest");
  report->add_option("manifest", target, "manifest.json or its directory")->required();
  auto* presets = app.add_subcommand("presets", "Bundled presets");
  auto* list = presets->add_subcommand("list", "List bundled presets");
  presets->require_subcommand(1);
  for (CLI::App* sub : {run, verify, sweep, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_command(target, flags);
    if (*verify) return verify_command(target, flags);
    if (*sweep) return sweep_command(target, param, values, flags);
    if (*report) return report_command(target);
    if (*list) return presets_command();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const CapabilityError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kUsage;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDivergence;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDivergence;
  } catch (const DiagnosticError& e) {
    std::fprintf(stderr, "diagnostic: %s\n", e.what());
    return kBoundFailure;
  }
  return kUsage;
}
