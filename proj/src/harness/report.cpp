#include "jagged/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "jagged/errors.hpp"
#include "jagged/serialize.hpp"

namespace jagged::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string fixed(double x, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string short_num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<Series>& series) {
  constexpr double w = 640, h = 400, left = 70, right = 150, top = 40, bottom = 50;
  const double pw = w - left - right;
  const double ph = h - top - bottom;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (const Series& s : series) {
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    n = std::max(n, s.values.size());
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (hi - lo < 1e-300) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double span = static_cast<double>(std::max<std::size_t>(n, 2) - 1);
  auto sx = [&](double i) { return left + pw * i / span; };
  auto sy = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const double y = sy(v);
    o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << fixed(y, 2) << "\" y2=\"" << fixed(y, 2)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y + 4, 2) << "\" text-anchor=\"end\">" << short_num(v)
      << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double i = span * k / 4.0;
    o << "<text x=\"" << fixed(sx(i), 2) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
      << short_num(std::round(i)) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
    << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].values.size(); ++i) {
      if (i) o << ' ';
      o << fixed(sx(static_cast<double>(i)), 2) << ',' << fixed(sy(series[s].values[i]), 2);
    }
    o << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\"" << ly - 4 << "\" y2=\""
      << ly - 4 << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << escape(series[s].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<Series> cumulative_share_series(const Trace& trace) {
  const std::size_t m = trace.capability_count();
  std::vector<Series> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i].label = "Ebar " + trace.names[i];
  Vector w = Vector::zeros(m);
  double budget = 0.0;
  for (const StepRecord& s : trace.steps) {
    const double mass = s.eta * s.applied_norm;
    budget += mass;
    w.axpy(mass, s.applied_shares());
    for (std::size_t i = 0; i < m; ++i) {
      out[i].values.push_back(budget > 1e-15 ? w[i] / budget : 1.0 / static_cast<double>(m));
    }
  }
  return out;
}

std::vector<Series> gain_series(const Trace& trace) {
  const std::size_t m = trace.capability_count();
  std::vector<Series> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i].label = "G " + trace.names[i];
  const Vector& start = trace.capability_values_at(0);
  for (std::size_t t = 0; t <= trace.horizon(); ++t) {
    const Vector& c = trace.capability_values_at(t);
    for (std::size_t i = 0; i < m; ++i) out[i].values.push_back(c[i] - start[i]);
  }
  return out;
}

std::vector<Series> jaggedness_series(const Trace& trace) {
  Series j{"J", {}};
  const Vector& start = trace.capability_values_at(0);
  for (std::size_t t = 0; t <= trace.horizon(); ++t) {
    j.values.push_back(jaggedness(trace.capability_values_at(t) - start));
  }
  return {j};
}

std::vector<fs::path> emit_report(const RunManifest& manifest, const fs::path& dir) {
  if (manifest.runs.empty()) throw UsageError("emit_report: empty ensemble");
  const fs::path out = dir / "report";
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  json runs = json::array();
  std::ostringstream csv;
  const RunRecord* first = nullptr;
  std::size_t m = 0;
  for (const RunRecord& r : manifest.runs) {
    if (!r.diverged) {
      first = first ? first : &r;
      m = r.trace.capability_count();
    }
  }
  csv << "run,seed,diverged,B_T,J";
  for (std::size_t i = 1; i <= m; ++i) csv << ",Ebar_" << i;
  for (std::size_t i = 1; i <= m; ++i) csv << ",G_" << i;
  csv << ",bounds_satisfied\n";
  for (const RunRecord& r : manifest.runs) {
    bool ok = true;
    for (const BoundReport& b : r.verification.reports) ok = ok && (!b.applicable || b.satisfied);
    json entry = {{"run", r.index}, {"seed", r.seed}, {"diverged", r.diverged}};
    csv << r.index << ',' << r.seed << ',' << (r.diverged ? 1 : 0);
    if (r.diverged) {
      entry["error"] = r.error;
      csv << ",,";
      for (std::size_t i = 0; i < 2 * m; ++i) csv << ',';
      csv << ",\n";
    } else {
      entry["summary"] = summary_to_json(r.summary);
      entry["bounds"] = verification_to_json(r.verification);
      csv << ',' << format_real(r.summary.budget) << ',' << format_real(r.summary.jaggedness);
      for (double x : r.summary.cumulative_shares) csv << ',' << format_real(x);
      for (double x : r.summary.gains) csv << ',' << format_real(x);
      csv << ',' << (ok ? 1 : 0) << '\n';
    }
    runs.push_back(std::move(entry));
  }
  const json summary = {{"name", manifest.name},
                        {"config_hash", manifest.config_hash},
                        {"bounds_satisfied", manifest.bounds_satisfied(false)},
                        {"any_diverged", manifest.any_diverged()},
                        {"runs", std::move(runs)}};
  std::vector<fs::path> written{out / "summary.json", out / "runs.csv"};
  write_text(written[0], summary.dump(2) + "\n");
  write_text(written[1], csv.str());
  if (first != nullptr) {
    const std::string stem = manifest.name + " (seed " + std::to_string(first->seed) + ")";
    written.push_back(out / "shares.svg");
    write_text(written.back(), line_chart_svg("Cumulative energy share, " + stem, "step t",
                                              cumulative_share_series(first->trace)));
    written.push_back(out / "gains.svg");
    write_text(written.back(), line_chart_svg("Capability gain, " + stem, "step t", gain_series(first->trace)));
    written.push_back(out / "jaggedness.svg");
    write_text(written.back(), line_chart_svg("Jaggedness J(t), " + stem, "step t",
                                              jaggedness_series(first->trace)));
  }
  return written;
}

}  // namespace jagged::harness
