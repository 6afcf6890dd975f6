#include "scenario_io.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace hkcs {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Reading helpers. Every failure names the JSON path of the offending field.

std::string join(const std::string& path, const std::string& key) { return path + "." + key; }
std::string index(const std::string& path, std::size_t k) { return path + "[" + std::to_string(k) + "]"; }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  expect_object(j, path);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) throw SchemaError(join(path, item.key()), "unknown key");
  }
}

const json* field(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& required(const json& j, const std::string& path, const char* key) {
  const json* f = field(j, key);
  if (!f) throw SchemaError(join(path, key), "required field is missing");
  return *f;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw SchemaError(path, "expected a finite number");
  return x;
}

long long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<long long>();
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw SchemaError(path, "expected a nonnegative integer");
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw SchemaError(path, "expected true or false");
  return j.get<bool>();
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_number(j[k], index(path, k)));
  return out;
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  const json* f = field(j, key);
  return f ? as_number(*f, join(path, key)) : fallback;
}

// Factory errors are reported at the path of the object being built.
template <class F>
auto at_path(const std::string& path, F&& build) -> decltype(build()) {
  try {
    return build();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::InvalidMatrix) throw SchemaError(path, e.what());
    throw;
  }
}

ModelOrder parse_order(const json& j, const std::string& path) {
  const std::string s = as_string(j, path);
  if (s == "first") return ModelOrder::First;
  if (s == "second") return ModelOrder::Second;
  throw SchemaError(path, "expected \"first\" or \"second\"");
}

TopologyConfig parse_topology(const json& j, const std::string& path) {
  expect_object(j, path);
  TopologyConfig t;
  const std::string family = as_string(required(j, path, "family"), join(path, "family"));
  if (family == "complete") {
    allow_keys(j, path, {"family"});
    t.family = TopologyConfig::Family::Complete;
  } else if (family == "ring") {
    allow_keys(j, path, {"family"});
    t.family = TopologyConfig::Family::Ring;
  } else if (family == "random") {
    allow_keys(j, path, {"family", "seed", "edge_prob"});
    t.family = TopologyConfig::Family::Random;
    if (const json* f = field(j, "seed")) t.seed = as_unsigned(*f, join(path, "seed"));
    t.edge_prob = number_or(j, path, "edge_prob", 0.5);
    if (!(t.edge_prob > 0.0 && t.edge_prob <= 1.0)) throw SchemaError(join(path, "edge_prob"), "must lie in (0, 1]");
  } else if (family == "matrix") {
    allow_keys(j, path, {"family", "chi"});
    t.family = TopologyConfig::Family::Matrix;
    const json& chi = required(j, path, "chi");
    const std::string cpath = join(path, "chi");
    if (!chi.is_array()) throw SchemaError(cpath, "expected an array of rows");
    for (std::size_t r = 0; r < chi.size(); ++r) {
      if (!chi[r].is_array()) throw SchemaError(index(cpath, r), "expected an array of 0/1 entries");
      std::vector<int> row;
      for (std::size_t c = 0; c < chi[r].size(); ++c)
        row.push_back(static_cast<int>(as_integer(chi[r][c], index(index(cpath, r), c))));
      t.chi.push_back(std::move(row));
    }
  } else {
    throw SchemaError(join(path, "family"), "expected complete, ring, random or matrix");
  }
  return t;
}

DelaySpec parse_delay(const json& j, const std::string& path, double tau_max) {
  expect_object(j, path);
  const std::string kind = as_string(required(j, path, "kind"), join(path, "kind"));
  if (kind == "constant") {
    allow_keys(j, path, {"kind", "value"});
    const double value = as_number(required(j, path, "value"), join(path, "value"));
    return at_path(path, [&] { return DelaySpec::constant(value, tau_max); });
  }
  if (kind == "sinusoid") {
    allow_keys(j, path, {"kind", "base", "amplitude", "omega", "phase"});
    const double base = as_number(required(j, path, "base"), join(path, "base"));
    const double amp = as_number(required(j, path, "amplitude"), join(path, "amplitude"));
    const double omega = as_number(required(j, path, "omega"), join(path, "omega"));
    const double phase = number_or(j, path, "phase", 0.0);
    return at_path(path, [&] { return DelaySpec::sinusoid(base, amp, omega, phase, tau_max); });
  }
  throw SchemaError(join(path, "kind"), "expected constant or sinusoid");
}

WeightSchedule parse_schedule(const json& j, const std::string& path) {
  expect_object(j, path);
  const std::string kind = as_string(required(j, path, "kind"), join(path, "kind"));
  if (kind == "constant") {
    allow_keys(j, path, {"kind", "value"});
    const double value = as_number(required(j, path, "value"), join(path, "value"));
    return at_path(path, [&] { return WeightSchedule::constant(value); });
  }
  if (kind == "blink") {
    allow_keys(j, path, {"kind", "on", "period", "offset"});
    const double on = as_number(required(j, path, "on"), join(path, "on"));
    const double period = as_number(required(j, path, "period"), join(path, "period"));
    const double offset = number_or(j, path, "offset", 0.0);
    return at_path(path, [&] { return WeightSchedule::blink(on, period, offset); });
  }
  if (kind == "piecewise") {
    allow_keys(j, path, {"kind", "breakpoints", "values", "periodic", "terminal"});
    auto breakpoints = as_numbers(required(j, path, "breakpoints"), join(path, "breakpoints"));
    auto values = as_numbers(required(j, path, "values"), join(path, "values"));
    bool periodic = false;
    if (const json* f = field(j, "periodic")) periodic = as_bool(*f, join(path, "periodic"));
    std::optional<double> terminal;
    if (const json* f = field(j, "terminal"); f && !f->is_null()) terminal = as_number(*f, join(path, "terminal"));
    return at_path(path, [&] { return WeightSchedule::piecewise(breakpoints, values, periodic, terminal); });
  }
  throw SchemaError(join(path, "kind"), "expected constant, blink or piecewise");
}

InfluenceFunction parse_influence(const json& j, const std::string& path) {
  expect_object(j, path);
  const std::string family = as_string(required(j, path, "family"), join(path, "family"));
  if (family == "constant") {
    allow_keys(j, path, {"family", "k0"});
    const double k0 = number_or(j, path, "k0", 1.0);
    return at_path(path, [&] { return InfluenceFunction::constant(k0); });
  }
  if (family == "radial_rational") {
    allow_keys(j, path, {"family", "k0", "beta"});
    const double k0 = number_or(j, path, "k0", 1.0);
    const double beta = as_number(required(j, path, "beta"), join(path, "beta"));
    return at_path(path, [&] { return InfluenceFunction::radial_rational(k0, beta); });
  }
  if (family == "radial_exponential") {
    allow_keys(j, path, {"family", "k0", "lambda"});
    const double k0 = number_or(j, path, "k0", 1.0);
    const double lambda = as_number(required(j, path, "lambda"), join(path, "lambda"));
    return at_path(path, [&] { return InfluenceFunction::radial_exponential(k0, lambda); });
  }
  if (family == "table") {
    allow_keys(j, path, {"family", "radii", "values"});
    auto radii = as_numbers(required(j, path, "radii"), join(path, "radii"));
    auto values = as_numbers(required(j, path, "values"), join(path, "values"));
    return at_path(path, [&] { return InfluenceFunction::table(radii, values); });
  }
  throw SchemaError(join(path, "family"), "expected constant, radial_rational, radial_exponential or table");
}

std::vector<double> parse_point(const json& j, const std::string& path, int dim) {
  auto p = as_numbers(j, path);
  if (static_cast<int>(p.size()) != dim)
    throw SchemaError(path, "expected " + std::to_string(dim) + " components");
  return p;
}

History parse_history(const json& j, const std::string& path, int dim, double tau) {
  expect_object(j, path);
  const std::string kind = as_string(required(j, path, "kind"), join(path, "kind"));
  if (kind == "constant") {
    allow_keys(j, path, {"kind", "point"});
    auto p = parse_point(required(j, path, "point"), join(path, "point"), dim);
    return at_path(path, [&] { return History::constant(p, tau); });
  }
  if (kind == "linear") {
    allow_keys(j, path, {"kind", "start", "end"});
    auto a = parse_point(required(j, path, "start"), join(path, "start"), dim);
    auto b = parse_point(required(j, path, "end"), join(path, "end"), dim);
    return at_path(path, [&] { return History::linear(a, b, tau); });
  }
  if (kind == "sampled") {
    allow_keys(j, path, {"kind", "times", "values"});
    auto times = as_numbers(required(j, path, "times"), join(path, "times"));
    const json& vals = required(j, path, "values");
    const std::string vpath = join(path, "values");
    if (!vals.is_array()) throw SchemaError(vpath, "expected an array of points");
    std::vector<std::vector<double>> values;
    for (std::size_t k = 0; k < vals.size(); ++k) values.push_back(parse_point(vals[k], index(vpath, k), dim));
    return at_path(path, [&] { return History::sampled(times, values, tau); });
  }
  throw SchemaError(join(path, "kind"), "expected constant, linear or sampled");
}

HistoryConfig parse_histories(const json& j, const std::string& path, const ScenarioConfig& c) {
  expect_object(j, path);
  HistoryConfig h;
  const std::string kind = as_string(required(j, path, "kind"), join(path, "kind"));
  if (kind == "explicit") {
    allow_keys(j, path, {"kind", "agents"});
    h.kind = HistoryConfig::Kind::Explicit;
    const json& agents = required(j, path, "agents");
    const std::string apath = join(path, "agents");
    if (!agents.is_array()) throw SchemaError(apath, "expected an array with one entry per agent");
    if (static_cast<int>(agents.size()) != c.agents)
      throw SchemaError(apath, "expected " + std::to_string(c.agents) + " entries, found " + std::to_string(agents.size()));
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const std::string p = index(apath, k);
      allow_keys(agents[k], p, {"position", "velocity"});
      h.positions.push_back(parse_history(required(agents[k], p, "position"), join(p, "position"), c.dim, c.tau_max));
      const json* v = field(agents[k], "velocity");
      if (c.order == ModelOrder::Second) {
        if (!v) throw SchemaError(join(p, "velocity"), "required for second-order models");
        h.velocities.push_back(parse_history(*v, join(p, "velocity"), c.dim, c.tau_max));
      } else if (v) {
        throw SchemaError(join(p, "velocity"), "only second-order models carry velocity histories");
      }
    }
  } else if (kind == "random_box") {
    allow_keys(j, path, {"kind", "low", "high", "velocity_low", "velocity_high", "shape", "seed"});
    h.kind = HistoryConfig::Kind::RandomBox;
    h.low = number_or(j, path, "low", -1.0);
    h.high = number_or(j, path, "high", 1.0);
    h.velocity_low = number_or(j, path, "velocity_low", -1.0);
    h.velocity_high = number_or(j, path, "velocity_high", 1.0);
    if (h.low > h.high) throw SchemaError(join(path, "high"), "must be >= low");
    if (h.velocity_low > h.velocity_high) throw SchemaError(join(path, "velocity_high"), "must be >= velocity_low");
    if (const json* f = field(j, "shape")) {
      const std::string shape = as_string(*f, join(path, "shape"));
      if (shape == "constant") h.shape = HistoryConfig::Shape::Constant;
      else if (shape == "linear") h.shape = HistoryConfig::Shape::Linear;
      else throw SchemaError(join(path, "shape"), "expected constant or linear");
    }
    if (const json* f = field(j, "seed")) h.seed = as_unsigned(*f, join(path, "seed"));
  } else {
    throw SchemaError(join(path, "kind"), "expected explicit or random_box");
  }
  return h;
}

Digraph build_graph(const ScenarioConfig& c) {
  switch (c.topology.family) {
    case TopologyConfig::Family::Complete: return Digraph::complete(c.agents);
    case TopologyConfig::Family::Ring: return Digraph::ring(c.agents);
    case TopologyConfig::Family::Random: return Digraph::random(c.agents, c.topology.seed, c.topology.edge_prob);
    case TopologyConfig::Family::Matrix: return Digraph::from_matrix(c.topology.chi);
  }
  throw Error(ErrorKind::Config, "unknown topology family");
}

std::pair<int, int> parse_pair(const json& j, const std::string& path, int agents) {
  const int i = static_cast<int>(as_integer(required(j, path, "i"), join(path, "i")));
  const int k = static_cast<int>(as_integer(required(j, path, "j"), join(path, "j")));
  if (i < 0 || i >= agents) throw SchemaError(join(path, "i"), "agent index out of range");
  if (k < 0 || k >= agents) throw SchemaError(join(path, "j"), "agent index out of range");
  if (i == k) throw SchemaError(path, "overrides need i != j");
  return {i, k};
}

// ---------------------------------------------------------------------------
// Writing helpers

ojson write_delay(const DelaySpec& d) {
  ojson j;
  if (d.kind() == DelaySpec::Kind::Constant) {
    j["kind"] = "constant";
    j["value"] = d.base();
  } else {
    j["kind"] = "sinusoid";
    j["base"] = d.base();
    j["amplitude"] = d.amplitude();
    j["omega"] = d.omega();
    j["phase"] = d.phase();
  }
  return j;
}

ojson write_schedule(const WeightSchedule& w) {
  ojson j;
  if (w.periodic() && w.values().size() == 1 && w.breakpoints() == std::vector<double>{0.0, 1.0}) {
    j["kind"] = "constant";
    j["value"] = w.values().front();
    return j;
  }
  j["kind"] = "piecewise";
  j["breakpoints"] = w.breakpoints();
  j["values"] = w.values();
  j["periodic"] = w.periodic();
  if (w.terminal()) j["terminal"] = *w.terminal();
  return j;
}

ojson write_influence(const InfluenceFunction& f) {
  ojson j;
  switch (f.family()) {
    case InfluenceFunction::Family::Constant:
      j["family"] = "constant";
      j["k0"] = f.k0();
      break;
    case InfluenceFunction::Family::RadialRational:
      j["family"] = "radial_rational";
      j["k0"] = f.k0();
      j["beta"] = f.beta();
      break;
    case InfluenceFunction::Family::RadialExponential:
      j["family"] = "radial_exponential";
      j["k0"] = f.k0();
      j["lambda"] = f.lambda();
      break;
    case InfluenceFunction::Family::Table:
      j["family"] = "table";
      j["radii"] = f.radii();
      j["values"] = f.samples();
      break;
  }
  return j;
}

ojson write_history(const History& h) {
  ojson j;
  switch (h.kind()) {
    case History::Kind::Constant:
      j["kind"] = "constant";
      j["point"] = h.values().front();
      break;
    case History::Kind::Linear:
      j["kind"] = "linear";
      j["start"] = h.values().front();
      j["end"] = h.values().back();
      break;
    case History::Kind::Sampled:
      j["kind"] = "sampled";
      j["times"] = h.times();
      j["values"] = h.values();
      break;
  }
  return j;
}

std::string hex(const unsigned char* data, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(digits[data[k] >> 4]);
    out.push_back(digits[data[k] & 15]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ScenarioConfig parse_config(const std::string& text, ParseMode mode) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("not a valid JSON document: ") + e.what());
  }
  const std::string root = "$";
  allow_keys(doc, root,
             {"schema_version", "order", "n_agents", "dimension", "topology", "tau_max", "delay", "weights", "pe",
              "influence", "histories", "integrator", "analysis", "seed"});

  ScenarioConfig c;
  c.schema_version = static_cast<int>(as_integer(required(doc, root, "schema_version"), "$.schema_version"));
  if (c.schema_version != 1) throw SchemaError("$.schema_version", "only schema_version 1 is supported");
  if (const json* f = field(doc, "order")) c.order = parse_order(*f, "$.order");
  const long long agents = as_integer(required(doc, root, "n_agents"), "$.n_agents");
  if (agents < 2 || agents > 100000) throw SchemaError("$.n_agents", "must be at least 2");
  c.agents = static_cast<int>(agents);
  if (const json* f = field(doc, "dimension")) {
    const long long d = as_integer(*f, "$.dimension");
    if (d < 1 || d > 1000) throw SchemaError("$.dimension", "must be a positive integer");
    c.dim = static_cast<int>(d);
  }
  if (const json* f = field(doc, "seed")) c.seed = as_unsigned(*f, "$.seed");
  if (const json* f = field(doc, "topology")) c.topology = parse_topology(*f, "$.topology");
  if (c.topology.family == TopologyConfig::Family::Matrix && static_cast<int>(c.topology.chi.size()) != c.agents)
    throw SchemaError("$.topology.chi", "matrix size must equal n_agents");
  const Digraph graph = at_path("$.topology", [&] { return build_graph(c); });

  c.tau_max = number_or(doc, root, "tau_max", 0.0);
  if (c.tau_max < 0.0) throw SchemaError("$.tau_max", "must be nonnegative");
  c.delay_default = DelaySpec::constant(0.0, c.tau_max);
  if (const json* f = field(doc, "delay")) {
    allow_keys(*f, "$.delay", {"default", "overrides"});
    if (const json* d = field(*f, "default")) c.delay_default = parse_delay(*d, "$.delay.default", c.tau_max);
    if (const json* o = field(*f, "overrides")) {
      if (!o->is_array()) throw SchemaError("$.delay.overrides", "expected an array");
      for (std::size_t k = 0; k < o->size(); ++k) {
        const std::string p = index("$.delay.overrides", k);
        allow_keys((*o)[k], p, {"i", "j", "spec"});
        auto [i, j] = parse_pair((*o)[k], p, c.agents);
        c.delay_overrides.push_back({i, j, parse_delay(required((*o)[k], p, "spec"), join(p, "spec"), c.tau_max)});
      }
    }
  }
  if (const json* f = field(doc, "weights")) {
    allow_keys(*f, "$.weights", {"default", "overrides"});
    if (const json* d = field(*f, "default")) c.weight_default = parse_schedule(*d, "$.weights.default");
    if (const json* o = field(*f, "overrides")) {
      if (!o->is_array()) throw SchemaError("$.weights.overrides", "expected an array");
      for (std::size_t k = 0; k < o->size(); ++k) {
        const std::string p = index("$.weights.overrides", k);
        allow_keys((*o)[k], p, {"i", "j", "schedule"});
        auto [i, j] = parse_pair((*o)[k], p, c.agents);
        if (!graph.adjacent(i, j)) throw SchemaError(p, "pair (" + std::to_string(i) + "," + std::to_string(j) + ") is not an arc of the digraph");
        c.weight_overrides.push_back({i, j, parse_schedule(required((*o)[k], p, "schedule"), join(p, "schedule"))});
      }
    }
  }
  if (const json* f = field(doc, "pe"); f && !f->is_null()) {
    allow_keys(*f, "$.pe", {"T", "alpha_tilde"});
    PeDeclaration pe;
    pe.T = as_number(required(*f, "$.pe", "T"), "$.pe.T");
    pe.alpha_tilde = as_number(required(*f, "$.pe", "alpha_tilde"), "$.pe.alpha_tilde");
    if (!(pe.T > 0.0)) throw SchemaError("$.pe.T", "must be positive");
    if (!(pe.alpha_tilde > 0.0)) throw SchemaError("$.pe.alpha_tilde", "must be positive");
    c.pe = pe;
  }
  if (const json* f = field(doc, "influence")) c.influence = parse_influence(*f, "$.influence");
  if (const json* f = field(doc, "histories")) {
    c.histories = parse_histories(*f, "$.histories", c);
  } else {
    c.histories.seed = c.seed;
  }

  c.step = default_step(c.tau_max);
  if (const json* f = field(doc, "integrator")) {
    allow_keys(*f, "$.integrator", {"step", "horizon"});
    c.step = number_or(*f, "$.integrator", "step", c.step);
    c.horizon = number_or(*f, "$.integrator", "horizon", c.horizon);
    if (!(c.step > 0.0)) throw SchemaError("$.integrator.step", "must be positive");
    if (c.horizon < 0.0) throw SchemaError("$.integrator.horizon", "must be nonnegative");
    if (c.horizon / c.step > 5e7) throw SchemaError("$.integrator.step", "more than 5e7 steps requested");
  }
  if (const json* f = field(doc, "analysis")) {
    allow_keys(*f, "$.analysis", {"directions", "n_max", "tolerance", "lemma_tolerance"});
    if (const json* d = field(*f, "directions")) {
      const long long n = as_integer(*d, "$.analysis.directions");
      if (n < 1 || n > 4096) throw SchemaError("$.analysis.directions", "must lie in [1, 4096]");
      c.analysis.directions = static_cast<int>(n);
    }
    if (const json* d = field(*f, "n_max"); d && !d->is_null()) {
      const long long n = as_integer(*d, "$.analysis.n_max");
      if (n < 0) throw SchemaError("$.analysis.n_max", "must be nonnegative");
      c.analysis.n_max = static_cast<int>(n);
    }
    c.analysis.tolerance = number_or(*f, "$.analysis", "tolerance", c.analysis.tolerance);
    c.analysis.lemma_tolerance = number_or(*f, "$.analysis", "lemma_tolerance", c.analysis.lemma_tolerance);
    if (c.analysis.tolerance < 0.0) throw SchemaError("$.analysis.tolerance", "must be nonnegative");
    if (c.analysis.lemma_tolerance < 0.0) throw SchemaError("$.analysis.lemma_tolerance", "must be nonnegative");
  }

  // Remaining cross-field consistency (schedule coverage, history domains).
  at_path("$", [&] {
    build_scenario(c).validate();
    return 0;
  });
  if (mode == ParseMode::Verify) check_hypotheses(c);
  return c;
}

ScenarioConfig load_config(const std::string& path, ParseMode mode) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("cannot read config ") + e.what());
  }
  return parse_config(text, mode);
}

void check_hypotheses(const ScenarioConfig& c) {
  const Scenario s = build_scenario(c);
  if (!strongly_connected(s.graph))
    throw Error(ErrorKind::Hypothesis, "the interaction digraph must be strongly connected");
  if (!c.pe) throw Error(ErrorKind::Hypothesis, "a PE declaration (T, alpha_tilde) is required");
  const auto& f = c.influence;
  bool positive = f.k0() > 0.0;
  if (f.family() == InfluenceFunction::Family::Table)
    for (double v : f.samples()) positive = positive && v > 0.0;
  if (!positive) throw Error(ErrorKind::Hypothesis, "influence function parameters must be positive");
  if (c.horizon < c.pe->T)
    throw Error(ErrorKind::Hypothesis, "horizon is shorter than the PE window T; PE cannot be checked");
  try {
    verify_pe(s.graph, s.weights, c.pe->T, c.pe->alpha_tilde, c.horizon);
  } catch (const PeViolationError& e) {
    throw Error(ErrorKind::Hypothesis, std::string("persistence of excitation fails: ") + e.what());
  }
  const double P = *s.interval_length();
  if (c.horizon < P)
    throw Error(ErrorKind::Hypothesis, "horizon " + format_double(c.horizon) +
                                           " is shorter than gamma (T + tau) + tau = " + format_double(P));
}

std::string serialize_config(const ScenarioConfig& c) {
  ojson j;
  j["schema_version"] = c.schema_version;
  j["order"] = to_string(c.order);
  j["n_agents"] = c.agents;
  j["dimension"] = c.dim;
  ojson topo;
  switch (c.topology.family) {
    case TopologyConfig::Family::Complete: topo["family"] = "complete"; break;
    case TopologyConfig::Family::Ring: topo["family"] = "ring"; break;
    case TopologyConfig::Family::Random:
      topo["family"] = "random";
      topo["seed"] = c.topology.seed;
      topo["edge_prob"] = c.topology.edge_prob;
      break;
    case TopologyConfig::Family::Matrix:
      topo["family"] = "matrix";
      topo["chi"] = c.topology.chi;
      break;
  }
  j["topology"] = topo;
  j["tau_max"] = c.tau_max;
  ojson delay;
  delay["default"] = write_delay(c.delay_default);
  delay["overrides"] = ojson::array();
  for (const auto& o : c.delay_overrides) delay["overrides"].push_back({{"i", o.i}, {"j", o.j}, {"spec", write_delay(o.spec)}});
  j["delay"] = delay;
  ojson weights;
  weights["default"] = write_schedule(c.weight_default);
  weights["overrides"] = ojson::array();
  for (const auto& o : c.weight_overrides)
    weights["overrides"].push_back({{"i", o.i}, {"j", o.j}, {"schedule", write_schedule(o.schedule)}});
  j["weights"] = weights;
  if (c.pe) j["pe"] = {{"T", c.pe->T}, {"alpha_tilde", c.pe->alpha_tilde}};
  j["influence"] = write_influence(c.influence);
  ojson hist;
  if (c.histories.kind == HistoryConfig::Kind::Explicit) {
    hist["kind"] = "explicit";
    hist["agents"] = ojson::array();
    for (std::size_t i = 0; i < c.histories.positions.size(); ++i) {
      ojson a;
      a["position"] = write_history(c.histories.positions[i]);
      if (c.order == ModelOrder::Second) a["velocity"] = write_history(c.histories.velocities[i]);
      hist["agents"].push_back(a);
    }
  } else {
    hist["kind"] = "random_box";
    hist["low"] = c.histories.low;
    hist["high"] = c.histories.high;
    hist["velocity_low"] = c.histories.velocity_low;
    hist["velocity_high"] = c.histories.velocity_high;
    hist["shape"] = c.histories.shape == HistoryConfig::Shape::Constant ? "constant" : "linear";
    hist["seed"] = c.histories.seed;
  }
  j["histories"] = hist;
  j["integrator"] = {{"step", c.step}, {"horizon", c.horizon}};
  ojson analysis;
  analysis["directions"] = c.analysis.directions;
  analysis["n_max"] = c.analysis.n_max ? ojson(*c.analysis.n_max) : ojson(nullptr);
  analysis["tolerance"] = c.analysis.tolerance;
  analysis["lemma_tolerance"] = c.analysis.lemma_tolerance;
  j["analysis"] = analysis;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

Scenario build_scenario(const ScenarioConfig& c) {
  Scenario s;
  s.order = c.order;
  s.graph = build_graph(c);
  if (s.graph.size() != c.agents) throw Error(ErrorKind::Config, "digraph size differs from n_agents");
  s.dim = c.dim;
  s.tau = c.tau_max;
  const std::size_t pairs = static_cast<std::size_t>(c.agents) * c.agents;
  s.delays.assign(pairs, c.delay_default);
  for (const auto& o : c.delay_overrides) s.delays[static_cast<std::size_t>(o.i) * c.agents + o.j] = o.spec;
  s.weights.assign(pairs, c.weight_default);
  for (const auto& o : c.weight_overrides) s.weights[static_cast<std::size_t>(o.i) * c.agents + o.j] = o.schedule;
  s.influence = c.influence;
  if (c.histories.kind == HistoryConfig::Kind::Explicit) {
    s.positions = c.histories.positions;
    s.velocities = c.histories.velocities;
  } else {
    std::mt19937_64 rng(c.histories.seed);
    auto draw = [&](double lo, double hi) {
      std::uniform_real_distribution<double> u(lo, hi);
      std::vector<double> p(c.dim);
      for (double& x : p) x = lo == hi ? lo : u(rng);
      return p;
    };
    auto make = [&](double lo, double hi) {
      if (c.histories.shape == HistoryConfig::Shape::Linear && c.tau_max > 0.0) {
        auto a = draw(lo, hi);
        auto b = draw(lo, hi);
        return History::linear(a, b, c.tau_max);
      }
      return History::constant(draw(lo, hi), c.tau_max);
    };
    for (int i = 0; i < c.agents; ++i) s.positions.push_back(make(c.histories.low, c.histories.high));
    if (c.order == ModelOrder::Second)
      for (int i = 0; i < c.agents; ++i) s.velocities.push_back(make(c.histories.velocity_low, c.histories.velocity_high));
  }
  s.horizon = c.horizon;
  s.step = c.step;
  s.pe = c.pe;
  s.analysis = c.analysis;
  s.seed = c.seed;
  return s;
}

std::string config_hash(const ScenarioConfig& c) {
  const std::string text = serialize_config(c);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Io, "SHA-256 computation failed");
  return hex(digest, len);
}

// ---------------------------------------------------------------------------
// Number formatting

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Trajectory CSV

namespace {

std::string csv_header(ModelOrder order, int dim) {
  std::string h = "t,agent";
  for (int c = 0; c < dim; ++c) h += ",component_" + std::to_string(c);
  if (order == ModelOrder::Second)
    for (int c = 0; c < dim; ++c) h += ",v_component_" + std::to_string(c);
  return h;
}

double parse_number(std::string_view field, std::size_t line) {
  double x = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(x))
    throw Error(ErrorKind::Format, "line " + std::to_string(line) + ": malformed number '" + std::string(field) + "'");
  return x;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
  const int n = traj.agents();
  const int d = traj.dim();
  const bool second = traj.order() == ModelOrder::Second;
  std::string out = csv_header(traj.order(), d) + "\n";
  std::vector<double> x(d), v(d);
  auto row = [&](const std::string& t, int i, const double* xs, const double* vs) {
    out += t;
    out += ',';
    out += std::to_string(i);
    for (int c = 0; c < d; ++c) {
      out += ',';
      out += format_double(xs[c]);
    }
    if (second)
      for (int c = 0; c < d; ++c) {
        out += ',';
        out += format_double(vs[c]);
      }
    out += '\n';
  };
  for (double t : traj.history_grid()) {
    const std::string ts = format_double(t);
    for (int i = 0; i < n; ++i) {
      traj.position(i, t, x);
      if (second) traj.velocity(i, t, v);
      row(ts, i, x.data(), v.data());
    }
  }
  const std::size_t half = static_cast<std::size_t>(n) * d;
  for (std::size_t k = 0; k < traj.nodes().size(); ++k) {
    const std::string ts = format_double(traj.nodes()[k]);
    auto state = traj.node_state(k);
    for (int i = 0; i < n; ++i)
      row(ts, i, state.data() + static_cast<std::size_t>(i) * d,
          second ? state.data() + half + static_cast<std::size_t>(i) * d : nullptr);
  }
  return out;
}

void write_trajectory(const Trajectory& traj, const std::string& path) { write_text_file(path, trajectory_csv(traj)); }

Trajectory parse_trajectory(const std::string& text, const Scenario& s) {
  const int n = s.agents();
  const int d = s.dim;
  const bool second = s.order == ModelOrder::Second;
  const std::size_t columns = 2 + static_cast<std::size_t>(d) * (second ? 2 : 1);
  const std::size_t half = static_cast<std::size_t>(n) * d;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw Error(ErrorKind::Format, "line 1: missing header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header(s.order, d))
    throw Error(ErrorKind::Format, "line 1: expected header '" + csv_header(s.order, d) + "'");

  std::vector<double> nodes, states;
  std::vector<double> block(second ? 2 * half : half);
  std::vector<double> expected(d);
  int next_agent = 0;
  double block_time = 0.0;
  double last_time = -std::numeric_limits<double>::infinity();
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields.clear();
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (fields.size() != columns)
      throw Error(ErrorKind::Format, where + "expected " + std::to_string(columns) + " fields, found " + std::to_string(fields.size()));
    const double t = parse_number(fields[0], lineno);
    int agent = -1;
    auto res = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), agent);
    if (res.ec != std::errc() || res.ptr != fields[1].data() + fields[1].size())
      throw Error(ErrorKind::Format, where + "malformed agent index");
    if (agent != next_agent)
      throw Error(ErrorKind::Format, where + "expected agent " + std::to_string(next_agent) + ", found " + std::to_string(agent));
    if (agent == 0) {
      if (!(t > last_time)) throw Error(ErrorKind::Format, where + "times must be strictly increasing");
      block_time = t;
    } else if (t != block_time) {
      throw Error(ErrorKind::Format, where + "all agents of one time must share the same time stamp");
    }
    for (int c = 0; c < d; ++c) block[static_cast<std::size_t>(agent) * d + c] = parse_number(fields[2 + c], lineno);
    if (second)
      for (int c = 0; c < d; ++c)
        block[half + static_cast<std::size_t>(agent) * d + c] = parse_number(fields[2 + d + c], lineno);

    if (t < 0.0) {
      if (t < -s.tau - 1e-9 * std::max(1.0, s.tau)) throw Error(ErrorKind::Format, where + "time precedes -tau_max");
      auto check = [&](const History& h, const double* got, const char* what) {
        h.eval(std::max(t, -s.tau), expected);
        for (int c = 0; c < d; ++c)
          if (std::abs(expected[c] - got[c]) > 1e-9 * std::max(1.0, std::abs(expected[c])))
            throw Error(ErrorKind::Format, where + what + " history row disagrees with the scenario");
      };
      check(s.positions[agent], block.data() + static_cast<std::size_t>(agent) * d, "position");
      if (second) check(s.velocities[agent], block.data() + half + static_cast<std::size_t>(agent) * d, "velocity");
    }
    next_agent = (agent + 1) % n;
    if (next_agent == 0) {
      last_time = t;
      if (t >= 0.0) {
        if (nodes.empty() && t != 0.0) throw Error(ErrorKind::Format, where + "the first nonnegative time must be 0");
        nodes.push_back(t);
        states.insert(states.end(), block.begin(), block.end());
      }
    }
  }
  if (next_agent != 0) throw Error(ErrorKind::Format, "line " + std::to_string(lineno) + ": incomplete final time block");
  if (nodes.empty()) throw Error(ErrorKind::Format, "line " + std::to_string(lineno) + ": no rows at t >= 0");
  return rebuild(s, std::move(nodes), std::move(states));
}

Trajectory read_trajectory(const std::string& path, const Scenario& s) { return parse_trajectory(read_text_file(path), s); }

// ---------------------------------------------------------------------------
// Reports and files

std::string report_json(const BoundReport& report, const std::string& config_sha256) {
  ojson j;
  j["schema_version"] = 1;
  j["tool_version"] = HKCS_VERSION;
  j["config_sha256"] = config_sha256;
  j["order"] = to_string(report.order);
  j["passed"] = report.passed();
  j["failures"] = report.failures();
  j["checks"] = ojson::array();
  for (const auto& r : report.checks) {
    ojson c;
    c["id"] = r.id;
    c["description"] = r.description;
    c["status"] = to_string(r.status);
    c["pass"] = r.status == CheckStatus::Pass;
    c["margin"] = std::isnan(r.margin) ? ojson(nullptr) : ojson(r.margin);
    c["tolerance"] = r.tolerance;
    if (!r.note.empty()) c["note"] = r.note;
    j["checks"].push_back(c);
  }
  ojson constants = ojson::object();
  for (const auto& [name, value] : report.constants)
    constants[name] = std::isfinite(value) ? ojson(value) : ojson(nullptr);
  j["constants"] = constants;
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

void write_report(const BoundReport& report, const std::string& config_sha256, const std::string& path) {
  write_text_file(path, report_json(report, config_sha256));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, path + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, path + ": " + std::strerror(errno));
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, path + ": " + std::strerror(errno));
}

}  // namespace hkcs
