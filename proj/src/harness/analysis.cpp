#include "jagged/harness/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jagged/errors.hpp"
#include "jagged/interventions.hpp"
#include "jagged/serialize.hpp"
#include "jagged/trainer.hpp"

namespace jagged::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Check compare(const std::string& name, double value, const std::string& rel, double thr) {
  bool ok = false;
  if (rel == "<") ok = value < thr;
  else if (rel == "<=") ok = value <= thr;
  else if (rel == ">") ok = value > thr;
  else if (rel == ">=") ok = value >= thr;
  return {name, value, rel, thr, ok};
}

Check holds(const std::string& name, bool ok, double value = 0.0) { return {name, value, "holds", 0.0, ok}; }

const json& analysis_block(const ScenarioConfig& c) { return c.document.at("analysis"); }

template <typename T>
T param(const ScenarioConfig& c, const char* key) {
  const json& a = analysis_block(c);
  if (!a.contains(key)) throw UsageError("config /analysis/" + std::string(key) + ": required field missing");
  try {
    return a[key].get<T>();
  } catch (const json::exception& e) {
    throw UsageError("config /analysis/" + std::string(key) + ": " + e.what());
  }
}

template <typename T>
T param_or(const ScenarioConfig& c, const char* key, T fallback) {
  return analysis_block(c).contains(key) ? param<T>(c, key) : fallback;
}

ScenarioOptions variant_options(const ScenarioOptions& base, const std::string& sub) {
  ScenarioOptions o = base;
  if (o.out) o.out = *o.out / sub;
  return o;
}

const RunRecord& first_completed(const RunManifest& m) {
  for (const RunRecord& r : m.runs) {
    if (!r.diverged) return r;
  }
  throw DiagnosticError("analysis: every run diverged");
}

const BoundReport* find_report(const RunRecord& r, const std::string& prefix) {
  for (const BoundReport& b : r.verification.reports) {
    if (b.name.rfind(prefix, 0) == 0) return &b;
  }
  return nullptr;
}

void allocation(const ScenarioConfig& c, const RunManifest& m, AnalysisResult& out) {
  const auto dom = param<std::size_t>(c, "dominant");
  const auto neg = param<std::size_t>(c, "neglected");
  const RunRecord& r = first_completed(m);
  const AllocationSummary& s = r.summary;
  out.checks.push_back(compare("Ebar dominant", s.cumulative_shares[dom], ">", threshold(c, "ebar_dominant_min")));
  out.checks.push_back(compare("Ebar neglected", s.cumulative_shares[neg], "<", threshold(c, "ebar_neglected_max")));
  out.checks.push_back(compare("J(T)", s.jaggedness, ">", threshold(c, "jaggedness_min")));
  const BoundReport* thm1 = find_report(r, "thm1");
  if (thm1 == nullptr) throw DiagnosticError("analysis: no concentration bound report");
  out.checks.push_back(holds("concentration bound", thm1->satisfied, thm1->margin));
  out.checks.push_back(compare("concentration bound rhs", thm1->rhs, ">", threshold(c, "thm1_rhs_min")));
}

void mismatch(const ScenarioConfig& c, const RunManifest& m, AnalysisResult& out) {
  const auto dom = param<std::size_t>(c, "dominant");
  const auto neg = param<std::size_t>(c, "neglected");
  const RunRecord& r = first_completed(m);
  const BoundReport* cap = find_report(r, "prop2");
  if (cap == nullptr) throw DiagnosticError("analysis: trace has no mismatch bound report");
  out.checks.push_back(holds("per-step mismatch cap", cap->satisfied, cap->margin));
  const double gd = r.summary.gains[dom];
  const double gn = r.summary.gains[neg];
  const double ratio = gd > 0.0 ? gn / gd : std::numeric_limits<double>::infinity();
  out.checks.push_back(compare("neglected / dominant gain", ratio, "<", threshold(c, "neglected_gain_ratio_max")));
  out.details["gains"] = to_json(r.summary.gains);
  out.details["cap_total"] = cap->rhs;
}

void sweep_monotone(const ScenarioConfig& c, const ScenarioOptions& opt, AnalysisResult& out) {
  const auto pointer = param<std::string>(c, "pointer");
  const auto values = param<std::vector<double>>(c, "values");
  const auto index = param<std::size_t>(c, "index");
  std::vector<double> ebar;
  for (double v : values) {
    const ScenarioConfig variant = override_config(c, pointer, v);
    const RunManifest m = run_scenario(variant, variant_options(opt, "sweep/" + json(v).dump()));
    ebar.push_back(first_completed(m).summary.cumulative_shares[index]);
  }
  bool increasing = true;
  for (std::size_t k = 1; k < ebar.size(); ++k) increasing = increasing && ebar[k] > ebar[k - 1];
  out.checks.push_back(holds("Ebar strictly increasing over the sweep", increasing));
  out.checks.push_back(compare("Ebar at first value", ebar.front(), "<", threshold(c, "first_max")));
  out.checks.push_back(compare("Ebar at last value", ebar.back(), ">", threshold(c, "last_min")));
  out.details["values"] = values;
  out.details["ebar"] = ebar;
}

void penalty_compare(const ScenarioConfig& c, const ScenarioOptions& opt, AnalysisResult& out) {
  const auto pointer = param<std::string>(c, "pointer");
  const auto base_value = param<double>(c, "baseline");
  const auto treated_value = param<double>(c, "treated");
  const ScenarioConfig base_cfg = override_config(c, pointer, base_value);
  const ScenarioConfig treated_cfg = override_config(c, pointer, treated_value);
  const RunManifest a = run_scenario(base_cfg, variant_options(opt, "baseline"));
  const RunManifest b = run_scenario(treated_cfg, variant_options(opt, "treated"));
  const InterventionComparison cmp = compare_interventions(a, b);
  out.checks.push_back(compare("mean delta J", cmp.mean_delta_j, "<", 0.0));
  out.checks.push_back(compare("mean delta peak gain", cmp.mean_delta_peak_gain, "<=", 0.0));
  out.details["delta_j"] = cmp.delta_j;
  out.details["delta_peak_gain"] = cmp.delta_peak_gain;

  // Extended descent on the treated composite, residual at checkpoints.
  const auto factor = param_or<std::size_t>(c, "extended_factor", 10);
  const RunSetup setup = build_run(treated_cfg.document, treated_cfg.base_seed);
  if (!setup.variance || !setup.quadratic_base) {
    throw UsageError("config /analysis: the penalty comparison needs a variance intervention");
  }
  TrainerState state{setup.theta0, 0};
  std::vector<double> residuals;
  const std::size_t horizon = setup.trainer.horizon;
  for (std::size_t t = 0; t < factor * horizon; ++t) {
    state = step(setup.trainer, state, *setup.objective, *setup.capabilities).next;
    if ((t + 1) % horizon == 0) {
      residuals.push_back(stationarity_residual(*setup.variance, *setup.quadratic_base, state.theta));
    }
  }
  bool monotone = true;
  for (std::size_t k = 1; k < residuals.size(); ++k) monotone = monotone && residuals[k] <= residuals[k - 1];
  out.checks.push_back(holds("residual non-increasing at checkpoints", monotone));
  out.checks.push_back(compare("final stationarity residual", residuals.back(), "<=", threshold(c, "residual_max")));
  out.details["residual_checkpoints"] = residuals;
}

void governance(const ScenarioConfig& c, const RunManifest& m, const ScenarioOptions& opt, AnalysisResult& out) {
  const auto capped = param<std::size_t>(c, "capped");
  const auto focus = param<std::size_t>(c, "focus");
  const RunSetup setup = build_run(c.document, c.base_seed);
  if (!setup.trainer.governance) throw UsageError("config /interventions/governance: required by this analysis");
  const double cap = setup.trainer.governance->rho_max()[capped];
  const RunRecord& r = first_completed(m);
  double worst = 0.0;
  for (const StepRecord& s : r.trace.steps) worst = std::max(worst, s.applied_shares()[capped]);
  out.checks.push_back(compare("max achieved share of capped capability", worst, "<=", cap + 1e-6));

  json plain_doc = c.document;
  plain_doc["interventions"].erase("governance");
  json identity_doc = c.document;
  identity_doc["interventions"]["governance"] = json::object();
  plain_doc["name"] = c.name + "_uncontrolled";
  identity_doc["name"] = c.name + "_identity";
  const ScenarioConfig plain = parse_config(plain_doc);
  const ScenarioConfig identity = parse_config(identity_doc);
  const RunManifest pm = run_scenario(plain, variant_options(opt, "uncontrolled"));
  const RunManifest im = run_scenario(identity, variant_options(opt, "identity"));
  Trace id_trace = first_completed(im).trace;
  id_trace.governance_active = false;
  const bool same = trace_csv(id_trace) == trace_csv(first_completed(pm).trace) &&
                    id_trace.theta_final == first_completed(pm).trace.theta_final;
  out.checks.push_back(holds("identity policy reproduces the uncontrolled trace bitwise", same));

  const auto [pa, pb] = budget_matched_prefixes(first_completed(pm).trace, r.trace);
  const BoundReport trade = check_thm2_tradeoff(pa, pb, focus);
  out.checks.push_back(holds("opportunity cost at matched budget", trade.satisfied, trade.margin));
  out.details["tradeoff"] = report_to_json(trade);
}

void coupling_cost(const ScenarioConfig& c, const ScenarioOptions& opt, AnalysisResult& out) {
  const auto kappa_pointer = param<std::string>(c, "kappa_pointer");
  const auto kappas = param<std::vector<double>>(c, "kappa_values");
  const auto weight_pointer = param<std::string>(c, "weight_pointer");
  const auto treated = param<double>(c, "treated_weight");
  const auto peak = param<std::size_t>(c, "peak");
  const auto neg = param<std::size_t>(c, "neglected");
  std::vector<double> costs;
  for (double k : kappas) {
    const ScenarioConfig fam = override_config(c, kappa_pointer, k);
    const ScenarioConfig base = override_config(fam, weight_pointer, 0.0);
    const ScenarioConfig trt = override_config(fam, weight_pointer, treated);
    const std::string sub = "kappa/" + json(k).dump();
    const InterventionComparison cmp = compare_interventions(run_scenario(base, variant_options(opt, sub + "/baseline")),
                                                             run_scenario(trt, variant_options(opt, sub + "/treated")));
    const Vector& dg = cmp.delta_gains.at(0);
    costs.push_back(dg[neg] != 0.0 ? -dg[peak] / dg[neg] : std::numeric_limits<double>::infinity());
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < costs.size(); ++k) decreasing = decreasing && costs[k] < costs[k - 1];
  out.checks.push_back(holds("redistribution cost decreasing in coupling", decreasing));
  out.details["kappa"] = kappas;
  out.details["cost"] = costs;
}

void scaling(const ScenarioConfig& c, const ScenarioOptions& opt, AnalysisResult& out) {
  const auto dims = param<std::vector<std::size_t>>(c, "dims");
  const auto dim_pointer = param<std::string>(c, "dim_pointer");
  const auto control_pointer = param<std::string>(c, "control_pointer");
  const auto control_value = param<double>(c, "control_value");
  const std::vector<ScalingPoint> pts = scaling_sweep(c, dims, dim_pointer, variant_options(opt, "scaling"));
  const double floor = threshold(c, "normalized_floor");
  json detail = json::array();
  for (const ScalingPoint& p : pts) {
    out.checks.push_back(compare("normalized J at d=" + std::to_string(p.dim), p.normalized_jaggedness, ">", floor));
    detail.push_back({{"dim", p.dim}, {"normalized_jaggedness", p.normalized_jaggedness}});
  }
  const ScenarioConfig control = override_config(c, control_pointer, control_value);
  const std::vector<ScalingPoint> ctl =
      scaling_sweep(control, dims, dim_pointer, variant_options(opt, "isotropic"));
  for (const ScalingPoint& p : ctl) {
    out.checks.push_back(compare("isotropic normalized J at d=" + std::to_string(p.dim), p.normalized_jaggedness,
                                 "<", threshold(c, "control_max")));
    detail.push_back({{"dim", p.dim}, {"isotropic", true}, {"normalized_jaggedness", p.normalized_jaggedness}});
  }
  out.details["points"] = detail;
}

void correlation(const ScenarioConfig& c, const RunManifest& m, AnalysisResult& out) {
  const double f = param<double>(c, "early_fraction");
  const std::optional<double> rho = correlate_early_late(m, f);
  if (!rho) {
    out.checks.push_back(holds("Spearman correlation defined", false));
    return;
  }
  out.checks.push_back(compare("Spearman(early dispersion, final J)", *rho, ">", threshold(c, "min_correlation")));
  out.details["spearman"] = *rho;
}

}  // namespace

bool AnalysisResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json AnalysisResult::to_json() const {
  json cs = json::array();
  for (const Check& c : checks) {
    cs.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation},
                  {"threshold", c.threshold}, {"passed", c.passed}});
  }
  return {{"kind", kind}, {"passed", passed()}, {"checks", std::move(cs)}, {"details", details}};
}

double threshold(const ScenarioConfig& config, const std::string& key) {
  const json& doc = config.document;
  if (!doc.contains("thresholds") || !doc["thresholds"].contains(key)) {
    throw UsageError("config /thresholds/" + key + ": required field missing");
  }
  const json& v = doc["thresholds"][key];
  if (!v.is_number()) throw UsageError("config /thresholds/" + key + ": expected a number");
  return v.get<double>();
}

AnalysisResult analyze(const ScenarioConfig& config, const RunManifest& primary, const ScenarioOptions& options) {
  AnalysisResult out;
  if (!config.document.contains("analysis")) return out;
  out.kind = param<std::string>(config, "kind");
  ScenarioOptions opt = options;
  if (opt.out) opt.out = *opt.out / "analysis";
  if (out.kind == "allocation") allocation(config, primary, out);
  else if (out.kind == "mismatch") mismatch(config, primary, out);
  else if (out.kind == "sweep_monotone") sweep_monotone(config, opt, out);
  else if (out.kind == "penalty_compare") penalty_compare(config, opt, out);
  else if (out.kind == "governance") governance(config, primary, opt, out);
  else if (out.kind == "coupling_cost") coupling_cost(config, opt, out);
  else if (out.kind == "scaling") scaling(config, opt, out);
  else if (out.kind == "correlation") correlation(config, primary, out);
  else throw UsageError("config /analysis/kind: unknown analysis '" + out.kind + "'");
  return out;
}

}  // namespace jagged::harness
