#include "jagged/harness/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "jagged/errors.hpp"
#include "jagged/serialize.hpp"
#include "jagged/trainer.hpp"

namespace jagged::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string run_dir_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return buf;
}

json verify_sidecar(const VerificationOptions& v) {
  json out = json::object();
  if (v.neglected) out["neglected"] = *v.neglected;
  if (v.mismatch_epsilon) out["mismatch_epsilon"] = *v.mismatch_epsilon;
  return out;
}

void execute(const ScenarioConfig& config, const ScenarioOptions& options, std::uint64_t base_seed,
             const fs::path& out_dir, RunRecord& rec) {
  const auto start = std::chrono::steady_clock::now();
  rec.seed = base_seed + rec.index;
  const RunSetup setup = build_run(config.document, rec.seed);
  try {
    rec.trace = run(setup.trainer, *setup.objective, *setup.capabilities, setup.theta0);
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    rec.error = e.what();
  } catch (const ConvergenceError& e) {
    rec.diverged = true;
    rec.error = e.what();
  }
  if (!rec.diverged) {
    rec.summary = cumulative(rec.trace);
    if (options.verify) {
      try {
        rec.verification = verify_trace(rec.trace, setup.verify);
      } catch (const DiagnosticError& e) {
        rec.error = e.what();
      }
    }
  }
  if (options.write) {
    const fs::path dir = out_dir / "runs" / run_dir_name(rec.index);
    if (!rec.diverged) {
      rec.trace_path = dir / "trace.csv";
      rec.trace_json_path = dir / "trace.json";
      rec.summary_path = dir / "summary.json";
      rec.bounds_path = dir / "bounds.json";
      write_text(rec.trace_path, trace_csv(rec.trace));
      json tj = trace_to_json(rec.trace);
      tj["verify"] = verify_sidecar(setup.verify);
      write_text(rec.trace_json_path, tj.dump());
      write_text(rec.summary_path, summary_to_json(rec.summary).dump(2) + "\n");
      write_text(rec.bounds_path, verification_to_json(rec.verification).dump(2) + "\n");
    }
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path relative_or_empty(const fs::path& p, const fs::path& base) {
  return p.empty() ? p : fs::relative(p, base);
}

}  // namespace

bool RunManifest::any_diverged() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.diverged; });
}

bool RunManifest::bounds_satisfied(bool strict) const {
  for (const RunRecord& r : runs) {
    if (r.diverged) continue;
    if (strict && r.verification.assumption_limited) return false;
    for (const BoundReport& b : r.verification.reports) {
      if (b.applicable && !b.satisfied) return false;
    }
  }
  return true;
}

json RunManifest::to_json() const {
  json rs = json::array();
  for (const RunRecord& r : runs) {
    rs.push_back({{"index", r.index},
                  {"seed", r.seed},
                  {"diverged", r.diverged},
                  {"error", r.error},
                  {"wall_seconds", r.wall_seconds},
                  {"trace", relative_or_empty(r.trace_path, output_dir).generic_string()},
                  {"trace_json", relative_or_empty(r.trace_json_path, output_dir).generic_string()},
                  {"summary", relative_or_empty(r.summary_path, output_dir).generic_string()},
                  {"bounds", relative_or_empty(r.bounds_path, output_dir).generic_string()}});
  }
  return {{"name", name}, {"config_hash", config_hash}, {"config", config}, {"runs", std::move(rs)}};
}

RunManifest run_scenario(const ScenarioConfig& config, const ScenarioOptions& options) {
  if (config.ensemble == 0) throw UsageError("run_scenario: ensemble size must be >= 1");
  RunManifest manifest;
  manifest.name = config.name;
  manifest.config = config.document;
  manifest.config_hash = config_hash(config.document);
  const std::uint64_t base_seed = options.seed.value_or(config.base_seed);
  if (options.write) manifest.output_dir = options.out.value_or(fs::path(config.output_dir));

  manifest.runs.resize(config.ensemble);
  for (std::size_t k = 0; k < config.ensemble; ++k) manifest.runs[k].index = k;

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.jobs, config.ensemble));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t k = next++; k < config.ensemble; k = next++) {
        execute(config, options, base_seed, manifest.output_dir, manifest.runs[k]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
      next = config.ensemble;
    }
  };
  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (options.write) {
    write_text(manifest.output_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  }
  return manifest;
}

VerificationOptions stored_verify_options(const json& trace_json) {
  VerificationOptions vo;
  if (trace_json.contains("verify")) {
    const json& v = trace_json["verify"];
    if (v.contains("neglected")) vo.neglected = v["neglected"].get<std::size_t>();
    if (v.contains("mismatch_epsilon")) vo.mismatch_epsilon = v["mismatch_epsilon"].get<double>();
  }
  return vo;
}

RunManifest load_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw UsageError("manifest " + path.string() + ": " + e.what());
  }
  RunManifest m;
  try {
    m.name = doc.at("name").get<std::string>();
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.config = doc.at("config");
    m.output_dir = path.parent_path();
    for (const json& r : doc.at("runs")) {
      RunRecord rec;
      rec.index = r.at("index").get<std::size_t>();
      rec.seed = r.at("seed").get<std::uint64_t>();
      rec.diverged = r.at("diverged").get<bool>();
      rec.error = r.at("error").get<std::string>();
      rec.wall_seconds = r.at("wall_seconds").get<double>();
      if (!rec.diverged) {
        rec.trace_path = m.output_dir / r.at("trace").get<std::string>();
        rec.trace_json_path = m.output_dir / r.at("trace_json").get<std::string>();
        rec.summary_path = m.output_dir / r.at("summary").get<std::string>();
        rec.bounds_path = m.output_dir / r.at("bounds").get<std::string>();
        const json tj = json::parse(read_text(rec.trace_json_path));
        rec.trace = trace_from_json(tj);
        rec.summary = cumulative(rec.trace);
        rec.verification = verify_trace(rec.trace, stored_verify_options(tj));
      }
      m.runs.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw UsageError("manifest " + path.string() + ": " + e.what());
  }
  return m;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("spearman: need two equal-length samples");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> correlate_early_late(const RunManifest& manifest, double early_fraction) {
  if (!(early_fraction > 0.0 && early_fraction < 1.0)) {
    throw UsageError("correlate_early_late: early fraction must lie in (0, 1)");
  }
  std::vector<double> early;
  std::vector<double> late;
  for (const RunRecord& r : manifest.runs) {
    if (r.diverged) continue;
    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(early_fraction * static_cast<double>(r.trace.horizon()))));
    early.push_back(jaggedness(cumulative(prefix(r.trace, k)).weights));
    late.push_back(r.summary.jaggedness);
  }
  if (early.size() < 10) throw UsageError("correlate_early_late: need at least 10 completed runs");
  return spearman(early, late);
}

InterventionComparison compare_interventions(const RunManifest& baseline, const RunManifest& treated) {
  if (baseline.runs.size() != treated.runs.size() || baseline.runs.empty()) {
    throw UsageError("compare_interventions: ensemble sizes differ");
  }
  InterventionComparison out;
  std::size_t used = 0;
  for (std::size_t k = 0; k < baseline.runs.size(); ++k) {
    const RunRecord& a = baseline.runs[k];
    const RunRecord& b = treated.runs[k];
    if (a.seed != b.seed) throw UsageError("compare_interventions: seeds differ at run " + std::to_string(k));
    if (a.diverged || b.diverged) continue;
    if (a.summary.gains.size() != b.summary.gains.size()) {
      throw UsageError("compare_interventions: capability counts differ");
    }
    const Vector& g = a.summary.gains;
    const std::size_t peak = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
    out.delta_j.push_back(b.summary.jaggedness - a.summary.jaggedness);
    out.delta_gains.push_back(b.summary.gains - a.summary.gains);
    out.delta_shares.push_back(b.summary.cumulative_shares - a.summary.cumulative_shares);
    out.delta_peak_gain.push_back(b.summary.gains[peak] - g[peak]);
    out.mean_delta_j += out.delta_j.back();
    out.mean_delta_peak_gain += out.delta_peak_gain.back();
    ++used;
  }
  if (used > 0) {
    out.mean_delta_j /= static_cast<double>(used);
    out.mean_delta_peak_gain /= static_cast<double>(used);
  }
  return out;
}

ScenarioConfig override_config(const ScenarioConfig& config, const std::string& pointer, const json& value) {
  json doc = with_override(config.document, pointer, value);
  std::string suffix = pointer + "=" + value.dump();
  std::replace(suffix.begin(), suffix.end(), '/', '_');
  doc["name"] = config.name + suffix;
  doc["output_dir"] = (fs::path(config.output_dir) / suffix).generic_string();
  return parse_config(doc);
}

std::vector<ScalingPoint> scaling_sweep(const ScenarioConfig& config, const std::vector<std::size_t>& dims,
                                        const std::string& dim_pointer, const ScenarioOptions& options) {
  if (dims.empty()) throw UsageError("scaling_sweep: no dimensions");
  std::vector<ScalingPoint> out;
  for (std::size_t d : dims) {
    if (d < 2) throw UsageError("scaling_sweep: dimensions must be >= 2");
    ScenarioOptions o = options;
    if (o.out) o.out = *o.out / ("d" + std::to_string(d));
    const RunManifest m = run_scenario(override_config(config, dim_pointer, d), o);
    double acc = 0.0;
    std::size_t used = 0;
    for (const RunRecord& r : m.runs) {
      if (r.diverged) continue;
      const double mean = sum(r.summary.gains) / static_cast<double>(r.summary.gains.size());
      acc += r.summary.jaggedness == 0.0 ? 0.0 : r.summary.jaggedness / (mean * mean);
      ++used;
    }
    out.push_back({d, used ? acc / static_cast<double>(used) : 0.0});
  }
  return out;
}

}  // namespace jagged::harness
