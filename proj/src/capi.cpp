#include "hkcs/hkcs.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "pipeline.hpp"

using namespace hkcs;

struct hkcs_scenario {
  Prepared prepared;
};

struct hkcs_trajectory {
  Trajectory traj;
};

struct hkcs_report {
  Verification verification;
  std::string hash;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_kind;

void clear_error() {
  last_error.clear();
  last_kind.clear();
}

hkcs_status fail(hkcs_status status, const char* kind, const std::string& message) {
  last_kind = kind;
  last_error = message;
  return status;
}

template <class F>
hkcs_status guarded(F&& f) {
  clear_error();
  try {
    return f();
  } catch (const Error& e) {
    return fail(static_cast<hkcs_status>(exit_code(e.kind())), to_string(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(HKCS_RUNTIME_ERROR, "OutOfMemory", "out of memory");
  } catch (const std::exception& e) {
    return fail(HKCS_RUNTIME_ERROR, "Internal", e.what());
  }
}

hkcs_status null_argument(const char* name) {
  return fail(HKCS_INVALID_ARGUMENT, "InvalidArgument", std::string(name) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Command-line overrides are applied to the document so the written config
// and its hash reflect them.
std::string apply_options(const std::string& text, const hkcs_options* options) {
  if (!options || (!options->override_seed && !options->override_tolerance)) return text;
  nlohmann::ordered_json doc = nlohmann::ordered_json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return text;
  if (options->override_seed) doc["seed"] = options->seed;
  if (options->override_tolerance) {
    if (!doc.contains("analysis") || !doc["analysis"].is_object()) doc["analysis"] = nlohmann::ordered_json::object();
    doc["analysis"]["tolerance"] = options->tolerance;
  }
  return doc.dump();
}

hkcs_status make_scenario(const std::string& text, const hkcs_options* options, hkcs_scenario** out) {
  const ParseMode mode = options && options->check_hypotheses ? ParseMode::Verify : ParseMode::Run;
  auto s = std::make_unique<hkcs_scenario>();
  s->prepared = prepare(parse_config(apply_options(text, options), mode));
  *out = s.release();
  return HKCS_OK;
}

hkcs_status outcome_to(const Outcome& o, char** text) {
  *text = copy_string(o.text);
  return static_cast<hkcs_status>(o.exit_code);
}

}  // namespace

extern "C" {

const char* hkcs_version(void) { return HKCS_VERSION; }

const char* hkcs_last_error(void) { return last_error.c_str(); }

const char* hkcs_last_error_kind(void) { return last_kind.c_str(); }

void hkcs_string_free(char* s) { std::free(s); }

hkcs_status hkcs_scenario_load(const char* path, const hkcs_options* options, hkcs_scenario** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    std::string text;
    try {
      text = read_text_file(path);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, e.what());
    }
    return make_scenario(text, options, out);
  });
}

hkcs_status hkcs_scenario_parse(const char* json, const hkcs_options* options, hkcs_scenario** out) {
  if (!json) return null_argument("json");
  if (!out) return null_argument("out");
  return guarded([&] { return make_scenario(json, options, out); });
}

void hkcs_scenario_free(hkcs_scenario* s) { delete s; }

size_t hkcs_scenario_warning_count(const hkcs_scenario* s) { return s ? s->prepared.warnings.size() : 0; }

const char* hkcs_scenario_warning(const hkcs_scenario* s, size_t i) {
  if (!s || i >= s->prepared.warnings.size()) return nullptr;
  return s->prepared.warnings[i].c_str();
}

const char* hkcs_scenario_hash(const hkcs_scenario* s) { return s ? s->prepared.hash.c_str() : nullptr; }

int hkcs_scenario_order(const hkcs_scenario* s) {
  if (!s) return 0;
  return s->prepared.scenario.order == ModelOrder::First ? 1 : 2;
}

hkcs_status hkcs_scenario_interval_length(const hkcs_scenario* s, double* out) {
  if (!s) return null_argument("scenario");
  if (!out) return null_argument("out");
  clear_error();
  const auto P = s->prepared.scenario.interval_length();
  if (!P) return fail(HKCS_CONFIG_ERROR, "Hypothesis", "interval length needs a PE declaration and a strongly connected digraph");
  *out = *P;
  return HKCS_OK;
}

hkcs_status hkcs_simulate(const hkcs_scenario* s, hkcs_trajectory** out) {
  if (!s) return null_argument("scenario");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new hkcs_trajectory{integrate(s->prepared.scenario)};
    return HKCS_OK;
  });
}

hkcs_status hkcs_trajectory_read(const hkcs_scenario* s, const char* path, hkcs_trajectory** out) {
  if (!s) return null_argument("scenario");
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new hkcs_trajectory{read_trajectory(path, s->prepared.scenario)};
    return HKCS_OK;
  });
}

hkcs_status hkcs_trajectory_write(const hkcs_trajectory* t, const char* path) {
  if (!t) return null_argument("trajectory");
  if (!path) return null_argument("path");
  return guarded([&] {
    write_trajectory(t->traj, path);
    return HKCS_OK;
  });
}

void hkcs_trajectory_free(hkcs_trajectory* t) { delete t; }

size_t hkcs_trajectory_node_count(const hkcs_trajectory* t) { return t ? t->traj.nodes().size() : 0; }

double hkcs_trajectory_horizon(const hkcs_trajectory* t) { return t ? t->traj.horizon() : std::nan(""); }

hkcs_status hkcs_trajectory_diameter(const hkcs_trajectory* t, double time, double* position_diameter,
                                     double* velocity_diameter) {
  if (!t) return null_argument("trajectory");
  if (!position_diameter) return null_argument("position_diameter");
  return guarded([&] {
    if (t->traj.order() == ModelOrder::First) {
      *position_diameter = diameter(t->traj, time);
      if (velocity_diameter) *velocity_diameter = std::nan("");
    } else {
      const auto d = diameters_xv(t->traj, time);
      *position_diameter = d.x;
      if (velocity_diameter) *velocity_diameter = d.v;
    }
    return HKCS_OK;
  });
}

hkcs_status hkcs_verify(const hkcs_scenario* s, const hkcs_trajectory* t, hkcs_report** out) {
  if (!s) return null_argument("scenario");
  if (!t) return null_argument("trajectory");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new hkcs_report{verify_trajectory(s->prepared, t->traj), s->prepared.hash};
    return HKCS_OK;
  });
}

int hkcs_report_passed(const hkcs_report* r) { return r && r->verification.exit_code() == 0 ? 1 : 0; }

int hkcs_report_degenerate(const hkcs_report* r) { return r && r->verification.degenerate ? 1 : 0; }

size_t hkcs_report_check_count(const hkcs_report* r) { return r ? r->verification.report.checks.size() : 0; }

hkcs_status hkcs_report_check(const hkcs_report* r, size_t i, hkcs_check* out) {
  if (!r) return null_argument("report");
  if (!out) return null_argument("out");
  clear_error();
  const auto& checks = r->verification.report.checks;
  if (i >= checks.size()) return fail(HKCS_INVALID_ARGUMENT, "InvalidArgument", "check index out of range");
  const CheckRecord& c = checks[i];
  out->id = c.id.c_str();
  out->description = c.description.c_str();
  out->status = to_string(c.status);
  out->margin = c.margin;
  out->tolerance = c.tolerance;
  out->note = c.note.c_str();
  return HKCS_OK;
}

hkcs_status hkcs_report_write(const hkcs_report* r, const char* path) {
  if (!r) return null_argument("report");
  if (!path) return null_argument("path");
  return guarded([&] {
    write_report(r->verification.report, r->hash, path);
    return HKCS_OK;
  });
}

void hkcs_report_free(hkcs_report* r) { delete r; }

hkcs_status hkcs_bounds(const hkcs_scenario* s, const hkcs_trajectory* t, char** text) {
  if (!s) return null_argument("scenario");
  if (!text) return null_argument("text");
  return guarded([&] { return outcome_to(bounds(s->prepared, t ? &t->traj : nullptr), text); });
}

hkcs_status hkcs_run_bundle(const hkcs_scenario* s, const char* dir, int verify, char** summary) {
  if (!s) return null_argument("scenario");
  if (!dir) return null_argument("dir");
  if (!summary) return null_argument("summary");
  return guarded([&] { return outcome_to(run_bundle(s->prepared, dir, verify != 0), summary); });
}

hkcs_status hkcs_sweep(const hkcs_scenario* s, const char* grid, const char* dir, unsigned threads, char** csv) {
  if (!s) return null_argument("scenario");
  if (!grid) return null_argument("grid");
  if (!dir) return null_argument("dir");
  if (!csv) return null_argument("csv");
  return guarded([&] { return outcome_to(sweep(s->prepared, grid, dir, threads), csv); });
}

hkcs_status hkcs_bundle_summary(const char* dir, char** text) {
  if (!dir) return null_argument("dir");
  if (!text) return null_argument("text");
  return guarded([&] { return outcome_to(bundle_summary(dir), text); });
}

}  // extern "C"
