#include "jagged/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "jagged/errors.hpp"
#include "jagged/serialize.hpp"

#ifndef JAGGED_PRESET_DIR
#define JAGGED_PRESET_DIR "presets"
#endif

namespace jagged::harness {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw UsageError("config " + (path.empty() ? std::string("/") : path) + ": " + what);
}

const json& field(const json& node, const std::string& path, const char* key) {
  if (!node.is_object()) fail(path, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) fail(path + "/" + key, "required field missing");
  return *it;
}

double number(const json& node, const std::string& path) {
  if (!node.is_number()) fail(path, "expected a number");
  const double x = node.get<double>();
  if (!std::isfinite(x)) fail(path, "expected a finite number");
  return x;
}

double number_or(const json& node, const std::string& path, const char* key, double fallback) {
  return node.contains(key) ? number(node[key], path + "/" + key) : fallback;
}

std::int64_t integer(const json& node, const std::string& path) {
  if (!node.is_number_integer()) fail(path, "expected an integer");
  return node.get<std::int64_t>();
}

Vector vector_at(const json& node, const std::string& path) {
  try {
    return vector_from_json(node);
  } catch (const UsageError& e) {
    fail(path, e.what());
  }
}

Matrix matrix_at(const json& node, const std::string& path) {
  try {
    return matrix_from_json(node);
  } catch (const UsageError& e) {
    fail(path, e.what());
  }
}

// An integer, or [lo, hi] drawn uniformly (inclusive).
std::int64_t integer_or_range(const json& node, const std::string& path, SeededRng& rng,
                              std::int64_t cap = INT64_MAX) {
  if (node.is_array()) {
    if (node.size() != 2) fail(path, "a range must have two entries");
    const std::int64_t lo = integer(node[0], path + "/0");
    const std::int64_t hi = std::min(integer(node[1], path + "/1"), cap);
    if (lo > hi) fail(path, "empty range");
    return rng.uniform_int(lo, hi);
  }
  return std::min(integer(node, path), cap);
}

// A number, or [lo, hi] drawn uniformly.
double real_or_range(const json& node, const std::string& path, SeededRng& rng) {
  if (node.is_array()) {
    if (node.size() != 2) fail(path, "a range must have two entries");
    return rng.uniform(number(node[0], path + "/0"), number(node[1], path + "/1"));
  }
  return number(node, path);
}

std::shared_ptr<const QuadraticObjective> quadratic_at(const json& node, const std::string& path) {
  Matrix a = matrix_at(field(node, path, "A"), path + "/A");
  Vector b = vector_at(field(node, path, "b"), path + "/b");
  try {
    return std::make_shared<QuadraticObjective>(std::move(a), std::move(b));
  } catch (const UsageError& e) {
    fail(path, e.what());
  }
}

struct Draws {
  std::size_t dim = 0;
  std::size_t count = 0;
};

std::string type_of(const json& node, const std::string& path) {
  const json& t = field(node, path, "type");
  if (!t.is_string()) fail(path + "/type", "expected a string");
  return t.get<std::string>();
}

std::size_t declared_dimension(const json& obj, const std::string& path, SeededRng& rng) {
  const std::string type = type_of(obj, path);
  if (type == "quadratic") return matrix_at(field(obj, path, "A"), path + "/A").cols();
  if (type == "mismatch") {
    return matrix_at(field(field(obj, path, "prox"), path + "/prox", "A"), path + "/prox/A").cols();
  }
  if (type == "tanh_regression") return matrix_at(field(obj, path, "X"), path + "/X").cols();
  if (type == "random_diagonal_quadratic" || type == "anisotropic_diagonal") {
    const std::int64_t d = integer_or_range(field(obj, path, "dim"), path + "/dim", rng);
    if (d < 1) fail(path + "/dim", "must be >= 1");
    if (type == "anisotropic_diagonal" && d < 2) fail(path + "/dim", "must be >= 2");
    return static_cast<std::size_t>(d);
  }
  fail(path + "/type", "unknown objective type '" + type + "'");
}

std::shared_ptr<const Objective> build_base(const json& obj, const std::string& path,
                                            std::size_t dim, SeededRng& rng) {
  const std::string type = type_of(obj, path);
  try {
    if (type == "quadratic") return quadratic_at(obj, path);
    if (type == "mismatch") {
      auto prox = quadratic_at(field(obj, path, "prox"), path + "/prox");
      auto st = quadratic_at(field(obj, path, "struct"), path + "/struct");
      const double eps = number(field(obj, path, "epsilon"), path + "/epsilon");
      return std::make_shared<MismatchObjective>(prox, st, eps);
    }
    if (type == "tanh_regression") {
      return std::make_shared<TanhRegressionObjective>(matrix_at(field(obj, path, "X"), path + "/X"),
                                                       vector_at(field(obj, path, "y"), path + "/y"));
    }
    if (type == "random_diagonal_quadratic") {
      const json& spec = field(obj, path, "spectrum");
      if (!spec.is_array() || spec.size() != 2) fail(path + "/spectrum", "expected [lo, hi]");
      const double lo = number(spec[0], path + "/spectrum/0");
      const double hi = number(spec[1], path + "/spectrum/1");
      if (!(lo > 0.0 && hi >= lo)) fail(path + "/spectrum", "need 0 < lo <= hi");
      Vector diag = Vector::zeros(dim);
      for (std::size_t k = 0; k < dim; ++k) diag[k] = std::exp(rng.uniform(std::log(lo), std::log(hi)));
      Vector b = Vector::zeros(dim);
      for (std::size_t k = 0; k < dim; ++k) b[k] = real_or_range(field(obj, path, "b"), path + "/b", rng);
      return std::make_shared<QuadraticObjective>(Matrix::diagonal(diag), b);
    }
    if (type == "anisotropic_diagonal") {
      const double high = number(field(obj, path, "high"), path + "/high");
      const double low = number(field(obj, path, "low"), path + "/low");
      const double b = number_or(obj, path, "b", 1.0);
      Vector diag = Vector::zeros(dim);
      for (std::size_t k = 0; k < dim; ++k) diag[k] = k < dim / 2 ? high : low;
      return std::make_shared<QuadraticObjective>(Matrix::diagonal(diag), Vector::filled(dim, b));
    }
  } catch (const UsageError& e) {
    if (std::string(e.what()).rfind("config ", 0) == 0) throw;
    fail(path, e.what());
  }
  fail(path + "/type", "unknown objective type '" + type + "'");
}

std::shared_ptr<const Capability> explicit_capability(const json& c, const std::string& path) {
  const json& name = field(c, path, "name");
  if (!name.is_string()) fail(path + "/name", "expected a string");
  const std::string type = c.contains("type") ? type_of(c, path) : "linear";
  try {
    if (type == "linear") {
      return std::make_shared<LinearCapability>(name.get<std::string>(),
                                                vector_at(field(c, path, "direction"), path + "/direction"));
    }
    if (type == "quadratic") {
      return std::make_shared<QuadraticCapability>(name.get<std::string>(),
                                                   matrix_at(field(c, path, "Q"), path + "/Q"),
                                                   vector_at(field(c, path, "q"), path + "/q"));
    }
  } catch (const UsageError& e) {
    if (std::string(e.what()).rfind("config ", 0) == 0) throw;
    fail(path, e.what());
  }
  fail(path + "/type", "unknown capability type '" + type + "'");
}

std::size_t declared_count(const json& caps, const std::string& path, std::size_t dim, SeededRng& rng) {
  if (caps.is_array()) return caps.size();
  const std::string type = type_of(caps, path);
  if (type == "random_positive") {
    const std::int64_t m = integer_or_range(field(caps, path, "count"), path + "/count", rng,
                                            static_cast<std::int64_t>(dim));
    if (m < 1) fail(path + "/count", "must be >= 1");
    return static_cast<std::size_t>(m);
  }
  if (type == "axis_groups") {
    const std::int64_t m = integer(field(caps, path, "count"), path + "/count");
    if (m < 1 || static_cast<std::size_t>(m) > dim) fail(path + "/count", "must lie in [1, dim]");
    return static_cast<std::size_t>(m);
  }
  if (type == "half_blocks" || type == "coupled_pair") return 2;
  fail(path + "/type", "unknown capability family '" + type + "'");
}

std::shared_ptr<const CapabilitySet> build_capabilities(const json& caps, const std::string& path,
                                                        std::size_t dim, std::size_t count,
                                                        SeededRng& rng) {
  std::vector<std::shared_ptr<const Capability>> members;
  if (caps.is_array()) {
    for (std::size_t i = 0; i < caps.size(); ++i) {
      members.push_back(explicit_capability(caps[i], path + "/" + std::to_string(i)));
    }
  } else {
    const std::string type = type_of(caps, path);
    auto name = [](std::size_t i) { return "C" + std::to_string(i + 1); };
    if (type == "random_positive") {
      const std::string kind = caps.value("kind", std::string("linear"));
      if (kind != "linear" && kind != "quadratic") fail(path + "/kind", "expected linear or quadratic");
      for (std::size_t i = 0; i < count; ++i) {
        Vector u = gaussian_vector(rng, dim);
        for (std::size_t k = 0; k < dim; ++k) u[k] = std::abs(u[k]) + 1e-12;
        u *= 1.0 / norm(u);
        if (kind == "linear") {
          members.push_back(std::make_shared<LinearCapability>(name(i), u));
        } else {
          Vector q = Vector::zeros(dim);
          for (std::size_t k = 0; k < dim; ++k) q[k] = rng.uniform();
          members.push_back(std::make_shared<QuadraticCapability>(name(i), Matrix::diagonal(q), u));
        }
      }
    } else if (type == "axis_groups") {
      for (std::size_t i = 0; i < count; ++i) {
        Vector u = Vector::zeros(dim);
        for (std::size_t k = i; k < dim; k += count) u[k] = 1.0;
        members.push_back(std::make_shared<LinearCapability>(name(i), u));
      }
    } else if (type == "half_blocks") {
      if (dim < 2) fail(path, "half_blocks needs dim >= 2");
      Vector head = Vector::zeros(dim);
      Vector tail = Vector::zeros(dim);
      for (std::size_t k = 0; k < dim; ++k) (k < dim / 2 ? head : tail)[k] = 1.0;
      members.push_back(std::make_shared<LinearCapability>("head", head));
      members.push_back(std::make_shared<LinearCapability>("tail", tail));
    } else if (type == "coupled_pair") {
      if (dim != 2) fail(path, "coupled_pair needs dim = 2");
      const double kappa = number(field(caps, path, "kappa"), path + "/kappa");
      if (!(kappa > -1.0 && kappa < 1.0)) fail(path + "/kappa", "must lie in (-1, 1)");
      members.push_back(std::make_shared<LinearCapability>("u", Vector{1, 0}));
      members.push_back(std::make_shared<LinearCapability>("w", Vector{kappa, std::sqrt(1 - kappa * kappa)}));
    }
  }
  try {
    auto set = std::make_shared<const CapabilitySet>(std::move(members));
    if (set->dimension() != dim) fail(path, "capability dimension differs from the objective's");
    return set;
  } catch (const UsageError& e) {
    if (std::string(e.what()).rfind("config ", 0) == 0) throw;
    fail(path, e.what());
  }
}

Vector aux_direction(const json& node, const std::string& path, const CapabilitySet& caps) {
  if (node.is_string()) {
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (caps[i].name() == node.get<std::string>()) {
        const LinearCapability* lin = caps[i].as_linear();
        if (lin == nullptr) fail(path, "referenced capability is not linear");
        return lin->direction();
      }
    }
    fail(path, "no capability named '" + node.get<std::string>() + "'");
  }
  return vector_at(node, path);
}

}  // namespace

ScenarioConfig parse_config(const json& document) {
  if (!document.is_object()) fail("", "expected a JSON object");
  const std::int64_t schema = integer(field(document, "", "schema"), "/schema");
  if (schema != kSchemaVersion) fail("/schema", "unsupported schema version " + std::to_string(schema));
  ScenarioConfig cfg;
  const json& name = field(document, "", "name");
  if (!name.is_string() || name.get<std::string>().empty()) fail("/name", "expected a non-empty string");
  cfg.name = name.get<std::string>();
  cfg.description = document.value("description", std::string());
  if (document.contains("ensemble")) {
    const std::int64_t n = integer(document["ensemble"], "/ensemble");
    if (n < 1) fail("/ensemble", "must be >= 1");
    cfg.ensemble = static_cast<std::size_t>(n);
  }
  if (document.contains("seed")) {
    if (!document["seed"].is_number_unsigned() && !(document["seed"].is_number_integer() && document["seed"].get<std::int64_t>() >= 0)) {
      fail("/seed", "expected a non-negative integer");
    }
    cfg.base_seed = document["seed"].get<std::uint64_t>();
  }
  cfg.output_dir = document.value("output_dir", "out/" + cfg.name);
  field(document, "", "objective");
  field(document, "", "capabilities");
  field(document, "", "trainer");
  if (document.contains("thresholds") && !document["thresholds"].is_object()) {
    fail("/thresholds", "expected an object");
  }
  if (document.contains("analysis") && !document["analysis"].is_object()) {
    fail("/analysis", "expected an object");
  }
  cfg.document = document;
  // Resolving seed 0 surfaces structural errors before any run starts.
  build_run(document, cfg.base_seed);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

RunSetup build_run(const json& doc, std::uint64_t seed) {
  SeededRng rng(seed);
  const json& obj = field(doc, "", "objective");
  const json& caps = field(doc, "", "capabilities");
  const json& tr = field(doc, "", "trainer");

  Draws draws;
  draws.dim = declared_dimension(obj, "/objective", rng);
  draws.count = declared_count(caps, "/capabilities", draws.dim, rng);
  const std::int64_t horizon = integer_or_range(field(tr, "/trainer", "horizon"), "/trainer/horizon", rng);
  if (horizon < 1 || static_cast<std::size_t>(horizon) > TrainerConfig::kMaxHorizon) {
    fail("/trainer/horizon", "must lie in [1, 10^7]");
  }

  RunSetup setup;
  auto base = build_base(obj, "/objective", draws.dim, rng);
  setup.capabilities = build_capabilities(caps, "/capabilities", draws.dim, draws.count, rng);
  setup.quadratic_base = std::dynamic_pointer_cast<const QuadraticObjective>(base);
  if (const auto* mix = base->as_mismatch()) setup.verify.mismatch_epsilon = mix->epsilon();

  std::vector<AuxiliaryObjective> aux;
  if (doc.contains("interventions")) {
    const json& iv = doc["interventions"];
    if (!iv.is_object()) fail("/interventions", "expected an object");
    if (iv.contains("variance")) {
      const json& v = iv["variance"];
      const double lambda = number(field(v, "/interventions/variance", "lambda"), "/interventions/variance/lambda");
      const double eps = number_or(v, "/interventions/variance", "smoothing", VarianceRegularizer::kDefaultSmoothing);
      try {
        setup.variance = std::make_shared<VarianceRegularizer>(lambda, setup.capabilities, eps);
      } catch (const UsageError& e) {
        fail("/interventions/variance", e.what());
      }
      if (!setup.quadratic_base || !setup.capabilities->all_linear()) {
        throw CapabilityError(
            "config /interventions/variance: the variance penalty needs a quadratic loss and linear capabilities");
      }
    }
    if (iv.contains("aux")) {
      if (!iv["aux"].is_array()) fail("/interventions/aux", "expected an array");
      for (std::size_t k = 0; k < iv["aux"].size(); ++k) {
        const std::string p = "/interventions/aux/" + std::to_string(k);
        const json& a = iv["aux"][k];
        const Vector v = aux_direction(field(a, p, "direction"), p + "/direction", *setup.capabilities);
        try {
          aux.emplace_back(v, number(field(a, p, "target"), p + "/target"),
                           number(field(a, p, "weight"), p + "/weight"));
        } catch (const UsageError& e) {
          if (std::string(e.what()).rfind("config ", 0) == 0) throw;
          fail(p, e.what());
        }
      }
    }
    if (iv.contains("governance")) {
      const json& g = iv["governance"];
      const std::string p = "/interventions/governance";
      const std::size_t m = setup.capabilities->size();
      const Vector hi = g.contains("rho_max") ? vector_at(g["rho_max"], p + "/rho_max") : Vector::filled(m, 1.0);
      Vector lo = Vector::filled(m, 0.0);
      if (g.contains("rho_min")) lo = vector_at(g["rho_min"], p + "/rho_min");
      const std::int64_t iters = g.contains("max_iterations")
                                     ? integer(g["max_iterations"], p + "/max_iterations")
                                     : static_cast<std::int64_t>(GovernancePolicy::kDefaultMaxIterations);
      if (hi.size() != m || lo.size() != m) fail(p, "caps and floors need one entry per capability");
      if (iters < 1) fail(p + "/max_iterations", "must be >= 1");
      try {
        setup.trainer.governance.emplace(hi, lo, static_cast<std::size_t>(iters));
      } catch (const UsageError& e) {
        fail(p, e.what());
      }
    }
  }
  if (setup.variance || !aux.empty()) {
    setup.objective = std::make_shared<CompositeObjective>(base, setup.variance, std::move(aux));
  } else {
    setup.objective = base;
  }

  setup.trainer.horizon = static_cast<std::size_t>(horizon);
  const json& eta = field(tr, "/trainer", "eta");
  if (eta.is_string()) {
    if (eta.get<std::string>() != "auto") fail("/trainer/eta", "expected a number or \"auto\"");
    setup.trainer.eta.eta0 = default_step_size(*setup.objective);
  } else {
    setup.trainer.eta.eta0 = number(eta, "/trainer/eta");
  }
  setup.trainer.eta.decay = number_or(tr, "/trainer", "decay", 1.0);
  if (tr.contains("record_coupling_every")) {
    const std::int64_t k = integer(tr["record_coupling_every"], "/trainer/record_coupling_every");
    if (k < 0) fail("/trainer/record_coupling_every", "must be >= 0");
    setup.trainer.record_coupling_every = static_cast<std::size_t>(k);
  }
  setup.trainer.seed = seed;
  try {
    setup.trainer.validate();
  } catch (const UsageError& e) {
    fail("/trainer", e.what());
  }

  if (doc.contains("theta0")) {
    setup.theta0 = vector_at(doc["theta0"], "/theta0");
    if (setup.theta0.size() != draws.dim) fail("/theta0", "dimension differs from the objective's");
  } else {
    setup.theta0 = Vector::zeros(draws.dim);
  }
  if (doc.contains("verify") && doc["verify"].contains("neglected")) {
    const std::int64_t idx = integer(doc["verify"]["neglected"], "/verify/neglected");
    if (idx < 0 || static_cast<std::size_t>(idx) >= setup.capabilities->size()) {
      fail("/verify/neglected", "capability index out of range");
    }
    setup.verify.neglected = static_cast<std::size_t>(idx);
  }
  return setup;
}

std::string config_hash(const json& document) {
  const std::string text = document.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json with_override(json document, const std::string& pointer, const json& value) {
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(pointer);
  } catch (const json::exception& e) {
    throw UsageError("invalid parameter path '" + pointer + "': " + e.what());
  }
  if (ptr.empty()) throw UsageError("parameter path must not be the document root");
  if (!document.contains(ptr.parent_pointer())) {
    throw UsageError("parameter path '" + pointer + "' has no parent in the config");
  }
  document[ptr] = value;
  return document;
}

std::filesystem::path preset_directory() {
  if (const char* env = std::getenv("JAGGED_PRESET_DIR")) return env;
  return JAGGED_PRESET_DIR;
}

ScenarioConfig resolve_config(const std::string& name_or_path) {
  const std::filesystem::path direct(name_or_path);
  if (std::filesystem::exists(direct) && std::filesystem::is_regular_file(direct)) return load_config(direct);
  const std::filesystem::path preset = preset_directory() / (name_or_path + ".json");
  if (std::filesystem::exists(preset)) return load_config(preset);
  throw UsageError("no config file or preset named '" + name_or_path + "'");
}

}  // namespace jagged::harness
