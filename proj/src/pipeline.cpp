#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "errors.hpp"
#include "generators.hpp"

namespace hkcs {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string fmt12(double x) {
  if (std::isnan(x)) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string line(const std::string& name, double value) {
  std::string s = name;
  if (s.size() < 14) s.resize(14, ' ');
  return s + " " + fmt12(value) + "\n";
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, dir + ": " + ec.message());
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Diameters at the interval endpoints n P, or at five evenly spaced times
// when no interval length is defined.
std::string diameter_summary(const Scenario& s, const Trajectory& traj) {
  std::vector<double> times;
  const double H = traj.horizon();
  if (auto P = s.interval_length(); P && *P > 0.0) {
    for (int n = 0; n * *P <= H * (1.0 + 1e-12) && n <= 1000; ++n) times.push_back(n * *P);
  } else {
    for (int k = 0; k <= 4; ++k) times.push_back(H * k / 4.0);
  }
  std::ostringstream out;
  if (traj.order() == ModelOrder::First) {
    out << "t d(t)\n";
    for (double t : times) out << fmt12(t) << " " << fmt12(diameter(traj, std::min(t, H))) << "\n";
  } else {
    out << "t d_X(t) d_V(t)\n";
    for (double t : times) {
      const auto dxv = diameters_xv(traj, std::min(t, H));
      out << fmt12(t) << " " << fmt12(dxv.x) << " " << fmt12(dxv.v) << "\n";
    }
  }
  return out.str();
}

std::string checks_summary(const Verification& v) {
  std::ostringstream out;
  for (const auto& r : v.report.checks) {
    std::string id = r.id;
    if (id.size() < 30) id.resize(30, ' ');
    out << id << " " << to_string(r.status) << "  margin " << fmt12(r.margin) << "  tolerance " << fmt12(r.tolerance)
        << "\n";
  }
  for (const auto& n : v.report.notes) out << "note: " << n << "\n";
  if (v.degenerate) out << "no certified decay rate: contraction factor outside (0, 1)\n";
  out << (v.exit_code() == 0 ? "PASS" : "FAIL") << " (" << v.report.failures() << " failed of " << v.report.checks.size()
      << " checks)\n";
  return out.str();
}

struct BundleResult {
  Outcome outcome;
  std::optional<Verification> verification;
};

BundleResult write_bundle(const Prepared& p, const std::string& dir, bool verify) {
  make_dir(dir);
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();
  const Trajectory traj = integrate(p.scenario);
  BundleResult result;
  write_text_file((fs::path(dir) / "config.json").string(), serialize_config(p.config));
  write_trajectory(traj, (fs::path(dir) / "trajectory.csv").string());
  if (verify) {
    result.verification = verify_trajectory(p, traj);
    write_report(result.verification->report, p.hash, (fs::path(dir) / "report.json").string());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  ojson run;
  run["tool_version"] = HKCS_VERSION;
  run["config_sha256"] = p.hash;
  run["order"] = to_string(p.scenario.order);
  run["config"] = "config.json";
  run["trajectory"] = "trajectory.csv";
  run["report"] = verify ? ojson("report.json") : ojson(nullptr);
  run["grid_nodes"] = traj.nodes().size();
  run["history_samples"] = traj.history_grid().size();
  run["horizon"] = traj.horizon();
  run["extrapolated_lookups"] = traj.extrapolated_lookups();
  run["notes"] = ojson::array();
  if (traj.extrapolated_lookups() > 0)
    run["notes"].push_back(
        "some delayed lookups fell inside the step being computed and used the previous step's extrapolated "
        "interpolant; local accuracy is reduced there");
  for (const auto& w : p.warnings) run["notes"].push_back(w);
  write_text_file((fs::path(dir) / "run.json").string(), run.dump(2) + "\n");

  ojson timing;
  timing["started_utc"] = started_utc;
  timing["elapsed_seconds"] = elapsed;
  write_text_file((fs::path(dir) / "timing.json").string(), timing.dump(2) + "\n");

  std::string text = diameter_summary(p.scenario, traj);
  if (result.verification) {
    text += checks_summary(*result.verification);
    result.outcome.exit_code = result.verification->exit_code();
  }
  result.outcome.text = text;
  return result;
}

double number_from(const std::vector<std::pair<std::string, double>>& constants, const std::string& key) {
  for (const auto& [k, v] : constants)
    if (k == key) return v;
  return std::nan("");
}

History retau(const History& h, double tau) {
  switch (h.kind()) {
    case History::Kind::Constant: return History::constant(h.values().front(), tau);
    case History::Kind::Linear:
      if (tau == 0.0) return History::constant(h.values().back(), tau);
      return History::linear(h.values().front(), h.values().back(), tau);
    case History::Kind::Sampled: {
      if (tau == 0.0) return History::constant(h.values().back(), tau);
      std::vector<double> times = h.times();
      const double old = h.tau();
      for (double& t : times) t = t * tau / old;
      times.front() = -tau;
      times.back() = 0.0;
      return History::sampled(times, h.values(), tau);
    }
  }
  return h;
}

}  // namespace

Prepared prepare(ScenarioConfig config) {
  Prepared p;
  p.scenario = build_scenario(config);
  p.scenario.validate();
  p.warnings = scenario_warnings(config, p.scenario);
  p.hash = config_hash(config);
  p.config = std::move(config);
  return p;
}

std::vector<std::string> scenario_warnings(const ScenarioConfig& config, const Scenario& s) {
  std::vector<std::string> out;
  const bool connected = strongly_connected(s.graph);
  if (!connected) out.push_back("the interaction digraph is not strongly connected; no convergence certificate applies");
  if (config.pe && config.pe->alpha_tilde * s.influence.sup_norm() > 1.0)
    out.push_back("alpha_tilde * K = " + fmt12(config.pe->alpha_tilde * s.influence.sup_norm()) +
                  " exceeds 1: the normalisation alpha_tilde K <= 1 assumed by the contraction estimates is violated");
  if (s.order == ModelOrder::Second && connected) {
    const int gamma = depth(s.graph);
    const DivergenceClass dc = s.influence.divergence_class(gamma);
    if (dc != DivergenceClass::Diverges)
      out.push_back(std::string("divergence condition on min psi^gamma ") +
                    (dc == DivergenceClass::Converges ? "fails" : "cannot be established") +
                    " for this influence function (gamma = " + std::to_string(gamma) +
                    "); the flocking theorem does not apply, checks still run");
  }
  return out;
}

Verification verify_trajectory(const Prepared& p, const Trajectory& traj) {
  const Scenario& s = p.scenario;
  const auto dirs = directions(s.dim, s.analysis.directions, p.config.seed);
  Verification v;
  if (s.order == ModelOrder::First) {
    const auto c = first_order_constants(s);
    v.report = check_first_order(s, traj, c, dirs);
    v.degenerate = !c.rate;
    v.certified_rate = c.rate;
  } else {
    const auto c = second_order_constants(s, &traj);
    v.report = check_second_order(s, traj, c, dirs);
    v.degenerate = !c.mu;
    v.certified_rate = c.mu;
    const DivergenceClass dc = s.influence.divergence_class(c.depth);
    v.report.notes.push_back(std::string("divergence condition: ") + to_string(dc) +
                             (dc == DivergenceClass::Diverges ? "; flocking theorem applicable"
                                                              : "; flocking theorem not applicable"));
  }
  for (const auto& w : p.warnings) v.report.notes.push_back(w);
  return v;
}

Outcome run_bundle(const Prepared& p, const std::string& dir, bool verify) {
  return write_bundle(p, dir, verify).outcome;
}

Outcome bounds(const Prepared& p, const Trajectory* traj) {
  const Scenario& s = p.scenario;
  Outcome out;
  std::string text;
  if (s.order == ModelOrder::First) {
    const auto c = first_order_constants(s);
    text += line("N", c.agents) + line("gamma", c.depth) + line("T", c.T) + line("alpha_tilde", c.alpha_tilde) +
            line("tau", c.tau) + line("P", c.period) + line("K", c.K) + line("C0", c.c0) + line("psi0", c.psi0) +
            line("Gamma", c.Gamma) + line("C", c.rate ? *c.rate : std::nan(""));
    if (!c.rate) {
      text += "Gamma is outside (0, 1): no contraction certified\n";
      out.exit_code = 4;
    }
  } else {
    const auto c = second_order_constants(s, traj);
    text += line("N", c.agents) + line("gamma", c.depth) + line("T", c.T) + line("alpha_tilde", c.alpha_tilde) +
            line("tau", c.tau) + line("P", c.period) + line("K_tilde", c.K_tilde) + line("C0V", c.c0v) +
            line("M0X", c.m0x) + line("C_star", c.c_star);
    if (c.empirical) {
      text += line("sup_dX", c.sup_dx) + line("d_star", c.d_star) + line("phi_hat", c.phi_hat) +
              line("mu", c.mu ? *c.mu : std::nan(""));
      for (std::size_t n = 0; n < c.Gamma.size(); ++n) text += line("Gamma_" + std::to_string(n + 1), c.Gamma[n]);
      if (!c.mu) {
        text += "C* phi_hat^gamma is outside (0, 1): no contraction certified\n";
        out.exit_code = 4;
      }
    } else {
      text += "phi_hat, mu and Gamma_{n+1} depend on the trajectory; pass --trajectory to compute them\n";
    }
  }
  out.text = text;
  return out;
}

std::vector<GridAxis> parse_grid(const std::string& spec) {
  static const std::vector<std::string> known{"tau", "T", "duty", "beta", "N"};
  std::vector<GridAxis> axes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "grid: expected name=values in '" + item + "'");
    const std::string name = item.substr(0, eq);
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw Error(ErrorKind::Config, "grid: unknown parameter '" + name + "' (expected tau, T, duty, beta or N)");
    for (const auto& a : axes)
      if (a.first == name) throw Error(ErrorKind::Config, "grid: parameter '" + name + "' given twice");
    std::vector<double> values;
    std::stringstream vs(item.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "grid: '" + v + "' is not a number");
      }
    }
    if (values.empty()) throw Error(ErrorKind::Config, "grid: parameter '" + name + "' has no values");
    axes.emplace_back(name, std::move(values));
  }
  if (axes.empty()) throw Error(ErrorKind::Config, "grid: no parameters given");
  return axes;
}

ScenarioConfig apply_cell(const ScenarioConfig& base, const std::vector<std::pair<std::string, double>>& cell) {
  ScenarioConfig c = base;
  std::optional<double> tau, T, duty, beta, agents;
  for (const auto& [name, value] : cell) {
    if (name == "tau") tau = value;
    else if (name == "T") T = value;
    else if (name == "duty") duty = value;
    else if (name == "beta") beta = value;
    else if (name == "N") agents = value;
  }
  if (agents) {
    if (*agents < 2 || *agents != std::floor(*agents)) throw Error(ErrorKind::Config, "grid: N must be an integer >= 2");
    if (c.topology.family == TopologyConfig::Family::Matrix)
      throw Error(ErrorKind::Config, "grid: varying N needs a complete, ring or random topology");
    if (c.histories.kind != HistoryConfig::Kind::RandomBox)
      throw Error(ErrorKind::Config, "grid: varying N needs random_box histories");
    c.agents = static_cast<int>(*agents);
    c.delay_overrides.clear();
    c.weight_overrides.clear();
  }
  if (tau) {
    if (*tau < 0.0) throw Error(ErrorKind::Config, "grid: tau must be nonnegative");
    const bool default_step_used = c.step == default_step(c.tau_max);
    c.tau_max = *tau;
    c.delay_default = DelaySpec::constant(*tau, *tau);
    c.delay_overrides.clear();
    for (auto& h : c.histories.positions) h = retau(h, *tau);
    for (auto& h : c.histories.velocities) h = retau(h, *tau);
    if (default_step_used) c.step = default_step(*tau);
  }
  if (T) {
    if (!(*T > 0.0)) throw Error(ErrorKind::Config, "grid: T must be positive");
    if (!c.pe) c.pe = PeDeclaration{};
    c.pe->T = *T;
  }
  if (duty) {
    if (!(*duty > 0.0 && *duty <= 1.0)) throw Error(ErrorKind::Config, "grid: duty must lie in (0, 1]");
    if (!c.pe) c.pe = PeDeclaration{};
    c.weight_default = WeightSchedule::blink(*duty * c.pe->T, c.pe->T);
    c.weight_overrides.clear();
  }
  if (beta) {
    if (c.influence.family() != InfluenceFunction::Family::RadialRational)
      throw Error(ErrorKind::Config, "grid: beta needs a radial_rational influence function");
    c.influence = InfluenceFunction::radial_rational(c.influence.k0(), *beta);
  }
  Scenario s = build_scenario(c);
  if (T || duty) {
    const double alpha = certified_alpha(s, c.pe->T);
    if (!(alpha > 0.0)) throw Error(ErrorKind::Config, "grid: the schedules certify no positive alpha_tilde");
    c.pe->alpha_tilde = alpha;
    s.pe = c.pe;
  }
  if (auto P = s.interval_length(); P && c.horizon < 2.0 * *P) c.horizon = 2.0 * *P;
  return c;
}

Outcome sweep(const Prepared& p, const std::string& grid, const std::string& dir, unsigned threads) {
  const auto axes = parse_grid(grid);
  std::size_t cells = 1;
  for (const auto& a : axes) {
    cells *= a.second.size();
    if (cells > 10000) throw Error(ErrorKind::Config, "grid: more than 10000 cells");
  }
  make_dir(dir);

  struct Row {
    std::vector<std::pair<std::string, double>> params;
    std::string status = "error";
    int exit_code = 3;
    double period = std::nan("");
    double certified = std::nan("");
    double empirical = std::nan("");
    double gamma = std::nan("");
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::string message;
  };
  std::vector<Row> rows(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    std::size_t rest = k;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& values = axes[a].second;
      rows[k].params.insert(rows[k].params.begin(), {axes[a].first, values[rest % values.size()]});
      rest /= values.size();
    }
  }

  auto run_cell = [&](std::size_t k) {
    Row& row = rows[k];
    char name[32];
    std::snprintf(name, sizeof name, "cell_%04zu", k);
    try {
      ScenarioConfig cfg = apply_cell(p.config, row.params);
      cfg = parse_config(serialize_config(cfg), ParseMode::Verify);
      const Prepared cp = prepare(cfg);
      const BundleResult r = write_bundle(cp, (fs::path(dir) / name).string(), true);
      const Verification& v = *r.verification;
      row.exit_code = v.exit_code();
      row.status = row.exit_code == 0 ? "pass" : "fail";
      row.period = number_from(v.report.constants, "P");
      row.certified = v.certified_rate ? *v.certified_rate : std::nan("");
      row.empirical = number_from(v.report.constants, "fitted_rate");
      row.gamma = cp.scenario.order == ModelOrder::First ? number_from(v.report.constants, "Gamma")
                                                          : number_from(v.report.constants, "Gamma_1");
      for (const auto& c : v.report.checks) {
        if (c.status == CheckStatus::Pass) ++row.passed;
        if (c.status == CheckStatus::Fail) ++row.failed;
      }
    } catch (const Error& e) {
      row.exit_code = exit_code(e.kind());
      row.message = e.what();
    } catch (const std::exception& e) {
      row.message = e.what();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells; k = next++) run_cell(k);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto csv_field = [](std::string s) {
    for (char& ch : s)
      if (ch == ',' || ch == '\n') ch = ';';
    return s;
  };
  std::string csv = "cell";
  for (const auto& a : axes) csv += "," + a.first;
  csv += ",status,exit_code,P,certified_rate,empirical_rate,contraction_factor,checks_passed,checks_failed,message\n";
  Outcome out;
  std::size_t bad = 0;
  for (std::size_t k = 0; k < cells; ++k) {
    const Row& r = rows[k];
    csv += std::to_string(k);
    for (const auto& [name, value] : r.params) csv += "," + format_double(value);
    csv += "," + r.status + "," + std::to_string(r.exit_code) + "," + fmt12(r.period) + "," + fmt12(r.certified) + "," +
           fmt12(r.empirical) + "," + fmt12(r.gamma) + "," + std::to_string(r.passed) + "," + std::to_string(r.failed) +
           "," + csv_field(r.message) + "\n";
    if (r.exit_code != 0) ++bad;
  }
  write_text_file((fs::path(dir) / "sweep.csv").string(), csv);
  out.text = csv;
  out.exit_code = bad == 0 ? 0 : 4;
  return out;
}

Outcome bundle_summary(const std::string& dir) {
  const auto run_path = fs::path(dir) / "run.json";
  const auto report_path = fs::path(dir) / "report.json";
  nlohmann::json run;
  try {
    run = nlohmann::json::parse(read_text_file(run_path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, run_path.string() + ": " + e.what());
  }
  std::ostringstream text;
  text << "bundle          " << dir << "\n";
  text << "tool_version    " << run.value("tool_version", "?") << "\n";
  text << "config_sha256   " << run.value("config_sha256", "?") << "\n";
  text << "order           " << run.value("order", "?") << "\n";
  text << "grid_nodes      " << run.value("grid_nodes", 0) << "\n";
  text << "extrapolations  " << run.value("extrapolated_lookups", 0) << "\n";
  Outcome out;
  std::error_code ec;
  if (fs::exists(report_path, ec)) {
    nlohmann::json report;
    try {
      report = nlohmann::json::parse(read_text_file(report_path.string()));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Format, report_path.string() + ": " + e.what());
    }
    if (report.value("config_sha256", "") != run.value("config_sha256", ""))
      text << "warning: report and run metadata reference different configs\n";
    for (const auto& c : report["checks"]) {
      std::string id = c.value("id", "?");
      if (id.size() < 30) id.resize(30, ' ');
      const auto& m = c["margin"];
      text << id << " " << c.value("status", "?") << "  margin " << (m.is_number() ? fmt12(m.get<double>()) : "null")
           << "\n";
    }
    const bool passed = report.value("passed", false);
    text << (passed ? "PASS" : "FAIL") << " (" << report.value("failures", 0) << " failed)\n";
    out.exit_code = passed ? 0 : 4;
  } else {
    text << "no report.json (run bundle without verification)\n";
  }
  out.text = text.str();
  return out;
}

}  // namespace hkcs
