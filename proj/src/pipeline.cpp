// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/pipeline.hpp"

#include "segflow/continuation.hpp"
#include "segflow/diagnostics.hpp"
#include "segflow/functional.hpp"
#include "segflow/io.hpp"
#include "segflow/optimizer.hpp"
#include "segflow/oracle.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

namespace segflow {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Heat benchmark used to calibrate the oracle and the weak-form tolerance.
constexpr int kHeatNx = 63;
constexpr double kHeatDtau = 1e-3;

std::string num(double v) { return format_number(v); }
std::string flag(bool v) { return v ? "1" : "0"; }

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string stage_name(double eps, double beta) {
  return "minimize(ε=" + short_num(eps) + ", β=" + short_num(beta) + ")";
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi == 0.0) return 1.0;
  return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

// Writes files below the output directory; a no-op when none is set.
class Output {
 public:
  explicit Output(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }
  bool enabled() const { return !dir_.empty(); }
  std::string path(const std::string& rel) const {
    const fs::path p = fs::path(dir_) / rel;
    fs::create_directories(p.parent_path());
    return p.string();
  }
  void csv(const std::string& rel, const Table& t) const {
    if (enabled()) write_csv(path(rel), t);
  }
  void field(const std::string& rel, const SpatialGrid& space, const StateField& f) const {
    if (enabled()) write_field_csv(path(rel), space, f);
  }
  void text(const std::string& rel, const std::string& s) const {
    if (enabled()) write_text(path(rel), s);
  }

 private:
  std::string dir_;
};

class Checks {
 public:
  explicit Checks(const std::vector<std::string>& gates) : gates_(gates) {}

  void add(const std::string& name, bool pass, const std::string& detail) {
    CheckResult c;
    c.name = name;
    c.pass = pass;
    c.gated = gates_.empty() || std::find(gates_.begin(), gates_.end(), name) != gates_.end();
    c.detail = detail;
    list.push_back(std::move(c));
  }

  std::vector<CheckResult> list;

 private:
  std::vector<std::string> gates_;
};

// Per-rung diagnostics shared by run, minimize and check.
struct RungRow {
  double eps = 0.0, beta = 0.0;
  double J = 0.0, J_competitor = 0.0;
  int iters = 0;
  double pg_norm = 0.0;
  bool converged = false;
  Overlap ov;
  double distance_prev = 0.0;
  SliceEstimateReport est;
  double energy_residual = 0.0;
  UniformEstimateReport uni;
};

RungRow diagnose(const RunConfig& cfg, const Scenario& sc, double eps, double beta, const StateField& field,
                 const EnergyTrace& trace) {
  RungRow r;
  r.eps = eps;
  r.beta = beta;
  r.J = trace.J;
  r.J_competitor = competitor_value(sc.grid, cfg.system, sc.data, eps, beta);
  r.ov = overlap(sc.grid, cfg.system, field);
  r.est = slice_estimates(trace, sc.grid, eps, potential_bound(cfg.system), sc.grid.space.measure(), r.J_competitor);
  r.energy_residual = energy_identity_residual(trace, sc.grid).relative;
  r.uni = check_uniform_estimates(sc.grid, cfg.system, field, eps, beta, cfg.diagnostics.window_tau,
                                  cfg.diagnostics.window_T);
  return r;
}

const std::vector<std::string>& rung_header() {
  static const std::vector<std::string> h{
      "eps",       "beta",        "J",          "J_over_eps", "J_competitor",   "lower",      "iters",
      "pg_norm",   "converged",   "overlap",    "overlap_sup", "beta_overlap",  "distance_prev",
      "E_min",     "E_max",       "I_integral", "I_bound",    "level_ok",       "E_bound_ok", "I_integral_ok",
      "energy_residual", "window_max", "kinetic", "sup_norm"};
  return h;
}

std::vector<std::string> rung_cells(const RungRow& r) {
  return {num(r.eps),          num(r.beta),           num(r.J),
          num(r.J / r.eps),    num(r.J_competitor),   num(r.est.lower),
          std::to_string(r.iters), num(r.pg_norm),    flag(r.converged),
          num(r.ov.integral),  num(r.ov.sup),         num(r.beta * r.ov.integral),
          num(r.distance_prev), num(r.est.E_min),     num(r.est.E_max),
          num(r.est.I_integral), num(r.est.I_bound),  flag(r.est.level_ok),
          flag(r.est.E_bound_ok), flag(r.est.I_integral_ok), num(r.energy_residual),
          num(r.uni.window_max), num(r.uni.kinetic),  num(r.uni.sup_norm)};
}

Json rung_json(const RungRow& r) {
  Json j;
  j["eps"] = r.eps;
  j["beta"] = r.beta;
  j["J"] = r.J;
  j["J_over_eps"] = r.J / r.eps;
  j["J_competitor"] = r.J_competitor;
  j["lower"] = r.est.lower;
  j["iters"] = r.iters;
  j["pg_norm"] = r.pg_norm;
  j["converged"] = r.converged;
  j["overlap"] = r.ov.integral;
  j["overlap_sup"] = r.ov.sup;
  j["beta_overlap"] = r.beta * r.ov.integral;
  j["distance_prev"] = r.distance_prev;
  j["E_min"] = r.est.E_min;
  j["E_max"] = r.est.E_max;
  j["I_integral"] = r.est.I_integral;
  j["I_bound"] = r.est.I_bound;
  j["level_ok"] = r.est.level_ok;
  j["E_bound_ok"] = r.est.E_bound_ok;
  j["I_integral_ok"] = r.est.I_integral_ok;
  j["energy_residual"] = r.energy_residual;
  j["window_max"] = r.uni.window_max;
  j["kinetic"] = r.uni.kinetic;
  j["sup_norm"] = r.uni.sup_norm;
  return j;
}

Table uniform_windows_table(const std::vector<RungRow>& rows) {
  Table t{{"eps", "beta", "tau", "T", "value"}, {}};
  for (const RungRow& r : rows)
    for (const EstimateWindow& w : r.uni.windows)
      t.rows.push_back({num(r.eps), num(r.beta), num(w.tau), num(w.T), num(w.value)});
  return t;
}

Table uniform_table(const std::vector<RungRow>& rows) {
  Table t{{"eps", "beta", "window_max", "kinetic", "sup_norm"}, {}};
  for (const RungRow& r : rows)
    t.rows.push_back({num(r.eps), num(r.beta), num(r.uni.window_max), num(r.uni.kinetic), num(r.uni.sup_norm)});
  return t;
}

Table trace_table(const EnergyTrace& tr) {
  Table t{{"t", "I", "R", "E"}, {}};
  for (Index j = 0; j < tr.t.size(); ++j) {
    const bool cell = j < tr.I.size();
    t.rows.push_back({num(tr.t[j]), cell ? num(tr.I[j]) : "", cell ? num(tr.R[j]) : "", num(tr.E[j])});
  }
  return t;
}

Table log_table(const std::vector<IterationRecord>& log) {
  Table t{{"iter", "J", "grad_norm", "step"}, {}};
  for (const IterationRecord& r : log)
    t.rows.push_back({std::to_string(r.iter), num(r.J), num(r.grad_norm), num(r.step)});
  return t;
}

struct InequalitySet {
  std::string set;
  double eps = 0.0;
  double eps_term = 0.0;
  InequalityReport rep;
};

const std::vector<std::string>& inequality_header() {
  static const std::vector<std::string> h{"set",        "eps",       "eps_term", "worst_ratio", "worst_excess",
                                          "worst_tol",  "entries",   "skipped",  "pass"};
  return h;
}

std::vector<std::string> inequality_cells(const InequalitySet& s) {
  return {s.set,
          num(s.eps),
          num(s.eps_term),
          num(s.rep.worst_ratio),
          num(s.rep.worst_excess),
          num(s.rep.worst_tol),
          std::to_string(s.rep.residuals.size()),
          std::to_string(s.rep.skipped),
          flag(s.rep.pass)};
}

Json inequality_json(const InequalitySet& s) {
  Json j;
  j["set"] = s.set;
  j["eps"] = s.eps;
  j["eps_term"] = s.eps_term;
  j["worst_ratio"] = s.rep.worst_ratio;
  j["worst_excess"] = s.rep.worst_excess;
  j["worst_tol"] = s.rep.worst_tol;
  j["entries"] = s.rep.residuals.size();
  j["skipped"] = s.rep.skipped;
  j["pass"] = s.rep.pass;
  j["warnings"] = s.rep.warnings;
  return j;
}

void add_residual_rows(Table& t, const InequalitySet& s, const TestFunctionLattice& lattice) {
  for (const BumpResidual& r : s.rep.residuals) {
    const Bump& b = lattice.bumps[static_cast<std::size_t>(r.bump)];
    t.rows.push_back({s.set, num(s.eps), std::to_string(r.species), std::to_string(r.bump), num(b.cx), num(b.cy),
                      num(b.ct), num(b.rx), num(b.ry), num(b.rt), num(r.A), num(r.B), num(r.tol)});
  }
}

Table residual_table() {
  return {{"set", "eps", "species", "bump", "cx", "cy", "ct", "rx", "ry", "rt", "A", "B", "tol"}, {}};
}

Json checks_json(const std::vector<CheckResult>& checks) {
  Json arr = Json::array();
  for (const CheckResult& c : checks) {
    Json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["gated"] = c.gated;
    j["detail"] = c.detail;
    arr.push_back(std::move(j));
  }
  return arr;
}

Table verdict_table(const std::vector<CheckResult>& checks) {
  Table t{{"check", "pass", "gated", "detail"}, {}};
  for (const CheckResult& c : checks) {
    std::string d = c.detail;
    std::replace(d.begin(), d.end(), ',', ';');
    t.rows.push_back({c.name, flag(c.pass), flag(c.gated), d});
  }
  return t;
}

Json header_json(const RunConfig& cfg, const std::string& command) {
  Json j;
  j["scenario"] = cfg.name;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["k"] = cfg.system.k;
  Json g;
  g["dim"] = cfg.grid.dim;
  g["nx"] = cfg.grid.nx;
  g["ny"] = cfg.grid.ny;
  g["nt"] = cfg.grid.nt;
  g["T_r"] = cfg.grid.T_r;
  j["grid"] = g;
  return j;
}

// Sets the exit code from gated checks and writes summary.json + verdicts.csv.
RunReport finish(const Output& out, Json summary, Checks checks, std::string failed_stage) {
  RunReport rep;
  rep.checks = std::move(checks.list);
  rep.failed_stage = std::move(failed_stage);
  rep.exit_code = rep.failed_stage.empty() && rep.failures().empty() ? kExitPass : kExitNumerical;
  summary["checks"] = checks_json(rep.checks);
  summary["failed_checks"] = rep.failures();
  if (!rep.failed_stage.empty()) summary["failed_stage"] = rep.failed_stage;
  summary["exit_code"] = rep.exit_code;
  out.text("summary.json", summary.dump(2) + "\n");
  out.csv("verdicts.csv", verdict_table(rep.checks));
  return rep;
}

void say(const RunOptions& opt, const std::string& line) {
  if (opt.progress) *opt.progress << line << std::endl;
}

std::string describe_rung(const RungSummary& r) {
  std::ostringstream s;
  s << stage_name(r.eps, r.beta) << ": J=" << r.J << " iters=" << r.iters << " pg=" << r.pg_norm
    << (r.converged ? "" : " NOT CONVERGED");
  return s.str();
}

ConfigError field_error(const std::string& field, const std::string& message) {
  return ConfigError(field, field + ": " + message);
}

Eigen::MatrixXd boundary_profile(const RunConfig& cfg, const SpatialGrid& space) {
  if (cfg.boundary.csv.empty())
    return preset_profile(space, parse_profile_preset(cfg.boundary.preset), cfg.system.k);
  Table t;
  try {
    t = read_csv(cfg.boundary.csv);
  } catch (const IoError& e) {
    throw field_error("boundary.csv", e.what());
  }
  const int k = cfg.system.k;
  if (static_cast<Index>(t.rows.size()) != space.size())
    throw field_error("boundary.csv", cfg.boundary.csv + ": expected " + std::to_string(space.size()) +
                                          " rows (one per grid node), got " + std::to_string(t.rows.size()));
  Eigen::MatrixXd v0(space.size(), k);
  try {
    for (Index s = 0; s < space.size(); ++s) {
      const auto row = static_cast<std::size_t>(s);
      const double tol = 1e-9 * std::max(space.Lx, space.Ly);
      if (std::abs(t.number(row, "x") - space.coords(s, 0)) > tol ||
          (space.dim == 2 && std::abs(t.number(row, "y") - space.coords(s, 1)) > tol))
        throw field_error("boundary.csv", cfg.boundary.csv + ": row " + std::to_string(s + 2) +
                                              " does not match the grid node coordinates");
      for (int c = 0; c < k; ++c) v0(s, c) = t.number(row, "v_" + std::to_string(c + 1));
    }
  } catch (const IoError& e) {
    throw field_error("boundary.csv", cfg.boundary.csv + ": " + e.what());
  }
  return v0;
}

}  // namespace

std::vector<std::string> RunReport::failures() const {
  std::vector<std::string> out;
  for (const CheckResult& c : checks)
    if (c.gated && !c.pass) out.push_back(c.name);
  return out;
}

Scenario build_scenario(const RunConfig& cfg) {
  const GridConfig& g = cfg.grid;
  Scenario sc;
  sc.grid = build_grid(g.dim, g.nx, g.ny, g.Lx, g.Ly, g.nt, g.T_r, g.tail_tol);
  sc.data = make_boundary_data(sc.grid.space, boundary_profile(cfg, sc.grid.space), cfg.boundary.mode);
  const ValidationReport rep = validate_boundary(sc.data, cfg.system);
  if (!rep.ok()) throw ConfigError(rep.violations.front().field, rep.summary());
  return sc;
}

RunReport cmd_run(const RunConfig& cfg, const RunOptions& opt) {
  const Scenario sc = build_scenario(cfg);
  const SpatialGrid& space = sc.grid.space;
  const SystemSpec& spec = cfg.system;
  const DiagnosticsConfig& dc = cfg.diagnostics;
  const Output out(opt.out_dir);
  out.text("config.resolved.cfg", render_config(cfg));
  Json summary = header_json(cfg, "run");
  Checks checks(dc.gates);
  if (sc.grid.tail_warning) say(opt, "warning: tail mass beyond T_r exceeds grid.tail_tol");

  const DoubleLimitResult dl =
      run_eps_ladder(cfg.ladder, spec, sc.data, sc.grid, cfg.optimizer,
                     [&](const RungSummary& r) { say(opt, describe_rung(r)); }, opt.log_iters);

  // Per-rung diagnostics and artefacts.
  std::vector<RungRow> rows;
  Table ladder{rung_header(), {}};
  Json rungs = Json::array();
  std::string failed_stage;
  for (std::size_t i = 0; i < dl.ladders.size(); ++i) {
    const BetaLadderResult& bl = dl.ladders[i];
    for (std::size_t n = 0; n < bl.results.size(); ++n) {
      const OptimizeResult& res = bl.results[n];
      RungRow r = diagnose(cfg, sc, bl.eps, bl.rungs[n].beta, res.field, res.trace);
      r.iters = res.iters;
      r.pg_norm = res.pg_norm;
      r.converged = res.converged;
      r.distance_prev = bl.rungs[n].distance_prev;
      if (!r.converged && failed_stage.empty()) failed_stage = stage_name(r.eps, r.beta);
      ladder.rows.push_back(rung_cells(r));
      rungs.push_back(rung_json(r));
      const std::string tag = "e" + std::to_string(i) + "_b" + std::to_string(n);
      out.csv("traces/trace_" + tag + ".csv", trace_table(res.trace));
      if (opt.log_iters) out.csv("logs/iters_" + tag + ".csv", log_table(res.log));
      rows.push_back(std::move(r));
    }
    out.field("fields/u_e" + std::to_string(i) + "_top.csv", space, bl.results.back().field);
    out.field("fields/v_eps_e" + std::to_string(i) + ".csv", space, bl.v_eps);
  }
  out.csv("ladder.csv", ladder);
  out.csv("uniform_estimates.csv", uniform_table(rows));
  out.csv("uniform_windows.csv", uniform_windows_table(rows));
  summary["rungs"] = rungs;

  checks.add("convergence", failed_stage.empty(),
             failed_stage.empty() ? "every rung reached optimizer.grad_tol" : failed_stage + " did not converge");
  if (!failed_stage.empty()) {
    say(opt, "stage failed: " + failed_stage);
    return finish(out, std::move(summary), std::move(checks), failed_stage);
  }

  // Level estimate per rung and |J|/eps across the eps ladder for every beta.
  {
    bool rungs_ok = true;
    for (const RungRow& r : rows) rungs_ok = rungs_ok && r.est.level_ok;
    Table t{{"beta", "eps", "J", "J_over_eps", "lower", "upper", "within", "ratio"}, {}};
    Json arr = Json::array();
    double worst = 0.0;
    bool ladders_ok = true;
    for (std::size_t n = 0; n < cfg.ladder.betas.size(); ++n) {
      std::vector<double> eps, J, Jc;
      for (const BetaLadderResult& bl : dl.ladders) {
        const RungRow& r = rows[static_cast<std::size_t>(&bl - dl.ladders.data()) * cfg.ladder.betas.size() + n];
        eps.push_back(r.eps);
        J.push_back(r.J);
        Jc.push_back(r.J_competitor);
      }
      const LevelEstimateReport lr = check_level_estimate_across_ladder(eps, J, Jc, potential_bound(spec),
                                                                        space.measure());
      ladders_ok = ladders_ok && lr.pass;
      worst = std::max(worst, lr.ratio);
      for (const LevelRow& row : lr.rows) {
        t.rows.push_back({num(cfg.ladder.betas[n]), num(row.eps), num(row.J), num(row.J_over_eps), num(row.lower),
                          num(row.upper), flag(row.within), num(lr.ratio)});
        Json j;
        j["beta"] = cfg.ladder.betas[n];
        j["eps"] = row.eps;
        j["J"] = row.J;
        j["J_over_eps"] = row.J_over_eps;
        j["lower"] = row.lower;
        j["upper"] = row.upper;
        j["within"] = row.within;
        j["ratio"] = lr.ratio;
        arr.push_back(std::move(j));
      }
    }
    out.csv("level_estimate.csv", t);
    summary["level_estimate"] = arr;
    checks.add("level_estimate", rungs_ok && ladders_ok,
               "max |J|/eps spread " + short_num(worst) + " (limit 4); per-rung bounds " + (rungs_ok ? "hold" : "violated"));
  }

  {
    bool ok = true;
    double worst = 0.0;
    for (const RungRow& r : rows) {
      ok = ok && r.energy_residual <= dc.energy_tol;
      worst = std::max(worst, r.energy_residual);
    }
    checks.add("energy_identity", ok, "worst relative residual " + short_num(worst) + " (limit " + short_num(dc.energy_tol) + ")");
  }

  {
    bool ok = true;
    for (const RungRow& r : rows) ok = ok && r.est.E_bound_ok && r.est.I_integral_ok;
    checks.add("estimate_bounds", ok, ok ? "energy and kinetic-integral bounds hold at every rung"
                                         : "a rung violates the energy or kinetic-integral bound");
  }

  {
    std::vector<double> win, kin;
    bool sup_ok = true;
    for (const RungRow& r : rows) {
      win.push_back(r.uni.window_max);
      kin.push_back(r.uni.kinetic);
      sup_ok = sup_ok && r.uni.sup_ok;
    }
    const double ws = spread(win), ks = spread(kin);
    Json j;
    j["window_spread"] = ws;
    j["kinetic_spread"] = ks;
    j["sup_ok"] = sup_ok;
    j["limit"] = dc.uniformity_ratio;
    summary["uniform_estimates"] = j;
    checks.add("uniform_estimates", sup_ok && ws <= dc.uniformity_ratio && ks <= dc.uniformity_ratio,
               "window spread " + short_num(ws) + ", kinetic spread " + short_num(ks) + " (limit " +
                   short_num(dc.uniformity_ratio) + "), sup norm " + (sup_ok ? "<= 1" : "> 1"));
  }

  // Overlap decay along each beta ladder.
  {
    Table t{{"eps", "beta", "overlap", "overlap_sup", "beta_overlap", "ratio_to_first"}, {}};
    Json arr = Json::array();
    bool ok = true;
    double worst = 0.0;
    for (const BetaLadderResult& bl : dl.ladders) {
      const double first = bl.rungs.front().beta_overlap;
      for (const RungSummary& r : bl.rungs) {
        const double ratio = first > 0.0 ? r.beta_overlap / first : 0.0;
        t.rows.push_back({num(r.eps), num(r.beta), num(r.overlap), num(r.overlap_sup), num(r.beta_overlap), num(ratio)});
        Json j;
        j["eps"] = r.eps;
        j["beta"] = r.beta;
        j["overlap"] = r.overlap;
        j["overlap_sup"] = r.overlap_sup;
        j["beta_overlap"] = r.beta_overlap;
        j["ratio_to_first"] = ratio;
        arr.push_back(std::move(j));
      }
      if (bl.rungs.size() > 1) {
        const double ratio = first > 0.0 ? bl.rungs.back().beta_overlap / first : 0.0;
        worst = std::max(worst, ratio);
        ok = ok && ratio <= dc.overlap_decay;
      }
    }
    out.csv("overlap_decay.csv", t);
    summary["overlap_decay"] = arr;
    checks.add("overlap_decay", ok, "worst top/bottom beta*overlap ratio " + short_num(worst) + " (limit " +
                                        short_num(dc.overlap_decay) + ")");
  }

  // Hard-segregated limits per eps.
  {
    Table t{{"eps", "J_top", "J_eps", "overlap", "overlap_sup"}, {}};
    Json arr = Json::array();
    bool ok = true;
    for (const BetaLadderResult& bl : dl.ladders) {
      const Overlap ov = overlap(sc.grid, spec, bl.v_eps);
      ok = ok && ov.integral == 0.0 && ov.sup == 0.0;
      t.rows.push_back({num(bl.eps), num(bl.rungs.back().J), num(bl.J_eps), num(ov.integral), num(ov.sup)});
      Json j;
      j["eps"] = bl.eps;
      j["J_top"] = bl.rungs.back().J;
      j["J_eps"] = bl.J_eps;
      j["overlap"] = ov.integral;
      j["overlap_sup"] = ov.sup;
      arr.push_back(std::move(j));
    }
    out.csv("v_eps.csv", t);
    summary["v_eps"] = arr;
    checks.add("segregation", ok, ok ? "every v_eps has zero overlap" : "a hard-segregated v_eps overlaps");
  }

  // v_eps inherits the beta = 0 estimates, and J at the top rung approaches J(v_eps).
  {
    bool est_ok = true, fun_ok = true;
    double worst_rel = 0.0;
    std::string est_fail;
    for (const BetaLadderResult& bl : dl.ladders) {
      const EnergyTrace tr = eval_J(sc.grid, spec, bl.v_eps, bl.eps, 0.0);
      const SliceEstimateReport est = slice_estimates(tr, sc.grid, bl.eps, potential_bound(spec), space.measure(),
                                                      competitor_value(sc.grid, spec, sc.data, bl.eps, 0.0));
      const UniformEstimateReport uni = check_uniform_estimates(sc.grid, spec, bl.v_eps, bl.eps, 0.0,
                                                                dc.window_tau, dc.window_T);
      est_ok = est_ok && est.ok() && uni.sup_ok;
      if (!est.level_ok) est_fail += " level(eps=" + short_num(bl.eps) + ")";
      if (!est.E_bound_ok) est_fail += " energy(eps=" + short_num(bl.eps) + ")";
      if (!est.I_integral_ok) est_fail += " kinetic(eps=" + short_num(bl.eps) + ")";
      if (!uni.sup_ok) est_fail += " sup(eps=" + short_num(bl.eps) + ")";
      const double top = bl.rungs.back().J;
      const double rel = std::abs(top - bl.J_eps) / std::max(std::abs(bl.J_eps), 1e-300);
      worst_rel = std::max(worst_rel, rel);
      fun_ok = fun_ok && rel <= 0.02;
    }
    checks.add("limit_estimates", est_ok, est_ok ? "every v_eps satisfies the beta = 0 estimates"
                                                 : "violated:" + est_fail);
    checks.add("limit_functional", fun_ok,
               "worst |J_top - J(v_eps)| / |J(v_eps)| " + short_num(worst_rel) + " (limit 0.02)");
  }

  // Weak inequalities in original time on the common tau grid.
  const Vector& tau = dl.tau;
  const TestFunctionLattice lattice = make_lattice(space, comparison_horizon(cfg.ladder, sc.grid), dc.lattice);
  std::vector<InequalitySet> sets;
  for (const BetaLadderResult& bl : dl.ladders) {
    const StateField orig = to_original_time(sc.grid, bl.v_eps, bl.eps, tau);
    sets.push_back({"v_eps", bl.eps, bl.eps, check_weak_inequalities(space, spec, orig, tau, bl.eps, lattice, dc.c_w)});
  }
  {
    const StateField w = to_original_time(sc.grid, dl.w, dl.w_eps, tau);
    out.field("fields/w_original.csv", space, w);
    sets.push_back({"w", dl.w_eps, 0.0, check_weak_inequalities(space, spec, w, tau, 0.0, lattice, dc.c_w)});
    bool ok = true;
    double worst = 0.0;
    for (const InequalitySet& s : sets) {
      ok = ok && s.rep.pass;
      worst = std::max(worst, s.rep.worst_ratio);
    }
    checks.add("weak_inequalities", ok,
               "worst residual/tolerance " + short_num(worst) + " over " + std::to_string(lattice.bumps.size()) +
                   " bumps (c_w " + short_num(dc.c_w) + ")");
  }

  // Cauchy behaviour of v_eps along the eps ladder.
  {
    Table t{{"eps_from", "eps_to", "distance"}, {}};
    bool ok = true;
    for (std::size_t i = 0; i < dl.cauchy.size(); ++i) {
      t.rows.push_back({num(cfg.ladder.epsilons[i]), num(cfg.ladder.epsilons[i + 1]), num(dl.cauchy[i])});
      if (i > 0) ok = ok && dl.cauchy[i] <= dc.cauchy_slack * dl.cauchy[i - 1];
    }
    out.csv("cauchy.csv", t);
    const bool settled = !dl.cauchy.empty() && dl.cauchy.back() <= cfg.ladder.cauchy_tol;
    Json j;
    j["distances"] = dl.cauchy;
    j["settled"] = settled;
    summary["cauchy"] = j;
    std::string d = "distances";
    for (double c : dl.cauchy) d += " " + short_num(c);
    d += settled ? "; last below ladder.cauchy_tol" : "; last above ladder.cauchy_tol";
    checks.add("cauchy", ok, d);
  }

  // Parabolic oracle.
  if (cfg.oracle.enabled) {
    const HeatCalibration cal = calibrate_heat(kHeatNx, kHeatDtau, cfg.oracle.theta, tau, dc.lattice, dc.c_w);
    out.csv("oracle_calibration.csv",
            {{"tau_end", "error_coarse", "error_fine", "ratio", "weak_ratio", "pass"},
             {{num(cal.tau_end), num(cal.error_coarse), num(cal.error_fine), num(cal.ratio), num(cal.weak_ratio),
               flag(cal.pass)}}});
    Json jc;
    jc["error_coarse"] = cal.error_coarse;
    jc["error_fine"] = cal.error_fine;
    jc["ratio"] = cal.ratio;
    jc["weak_ratio"] = cal.weak_ratio;
    summary["oracle_calibration"] = jc;
    checks.add("oracle_calibration", cal.pass,
               "heat error " + short_num(cal.error_coarse) + ", refinement ratio " + short_num(cal.ratio) +
                   ", weak residual/tolerance " + short_num(cal.weak_ratio));

    const double horizon = tau[tau.size() - 1];
    const int steps = static_cast<int>(std::ceil(horizon / cfg.oracle.dtau - 1e-9));
    ParabolicOptions po;
    po.theta = cfg.oracle.theta;
    const ParabolicRun run = step_parabolic(space, spec, sc.data, cfg.oracle.beta, horizon / steps, steps, po);
    out.field("fields/oracle_original.csv", space, sample_run(run, tau));
    std::vector<DiscrepancyRow> drows;
    std::string stage;
    for (const BetaLadderResult& bl : dl.ladders) {
      const auto it = std::find(cfg.ladder.betas.begin(), cfg.ladder.betas.end(), cfg.oracle.beta);
      if (it != cfg.ladder.betas.end()) {
        drows.push_back(compare_with_minimizer(sc.grid, bl.results[static_cast<std::size_t>(it - cfg.ladder.betas.begin())].field,
                                               bl.eps, run, tau));
      } else {
        const OptimizeResult r = minimize(bl.eps, cfg.oracle.beta, spec, sc.data, sc.grid, cfg.optimizer);
        if (!r.converged && stage.empty()) stage = stage_name(bl.eps, cfg.oracle.beta);
        drows.push_back(compare_with_minimizer(sc.grid, r.field, bl.eps, run, tau));
      }
    }
    Table t{{"eps", "total"}, {}};
    for (int c = 0; c < spec.k; ++c) t.header.push_back("component_" + std::to_string(c));
    Json arr = Json::array();
    for (const DiscrepancyRow& d : drows) {
      std::vector<std::string> cells{num(d.eps), num(d.total)};
      for (double p : d.per_component) cells.push_back(num(p));
      t.rows.push_back(std::move(cells));
      Json j;
      j["eps"] = d.eps;
      j["total"] = d.total;
      j["per_component"] = d.per_component;
      arr.push_back(std::move(j));
    }
    out.csv("discrepancy.csv", t);
    summary["discrepancy"] = arr;
    std::string d = "discrepancies";
    for (const DiscrepancyRow& r : drows) d += " " + short_num(r.total);
    if (!stage.empty()) d += "; " + stage + " did not converge";
    checks.add("oracle_discrepancy", stage.empty() && discrepancy_decreasing(drows, cfg.oracle.discrepancy_slack), d);
  }

  // Elliptic pipeline.
  if (cfg.elliptic.enabled) {
    const BoundaryData ddata = make_boundary_data(space, sc.data.v0, BcMode::dirichlet_only);
    const EllipticEquivalenceReport eq = check_elliptic_equivalence(spec, ddata, cfg.elliptic.eps, cfg.elliptic.beta,
                                                                    sc.grid, cfg.optimizer, cfg.elliptic.tol);
    out.csv("elliptic_equivalence.csv",
            {{"eps", "beta", "temporal_variation", "mean_vs_elliptic", "tol", "converged", "pass"},
             {{num(cfg.elliptic.eps), num(cfg.elliptic.beta), num(eq.temporal_variation), num(eq.mean_vs_elliptic),
               num(eq.tol), flag(eq.converged), flag(eq.pass)}}});
    Json je;
    je["temporal_variation"] = eq.temporal_variation;
    je["mean_vs_elliptic"] = eq.mean_vs_elliptic;
    je["converged"] = eq.converged;
    checks.add("elliptic_equivalence", eq.pass,
               "temporal variation " + short_num(eq.temporal_variation) + ", distance to elliptic minimiser " +
                   short_num(eq.mean_vs_elliptic) + " (limit " + short_num(cfg.elliptic.tol) + ")" +
                   (eq.converged ? "" : "; a minimisation did not converge"));

    const EllipticLadderReport el =
        run_elliptic_ladder(space, spec, ddata, cfg.elliptic.betas, cfg.optimizer, dc.lattice, dc.c_w);
    Table t{{"beta", "energy", "overlap", "iters", "converged"}, {}};
    bool conv = true;
    for (const EllipticRung& r : el.rungs) {
      t.rows.push_back({num(r.beta), num(r.energy), num(r.overlap), std::to_string(r.iters), flag(r.converged)});
      conv = conv && r.converged;
    }
    out.csv("elliptic_ladder.csv", t);
    out.field("fields/elliptic_limit.csv", space, el.limit);
    sets.push_back({"elliptic_limit", 0.0, 0.0, el.inequalities});
    je["overlap_ratio"] = el.overlap_ratio;
    je["stationary_worst_ratio"] = el.inequalities.worst_ratio;
    summary["elliptic"] = je;
    checks.add("elliptic_ladder", el.pass && conv,
               "overlap ratio " + short_num(el.overlap_ratio) + " (limit 0.01), stationary residual/tolerance " +
                   short_num(el.inequalities.worst_ratio) + (conv ? "" : "; a rung did not converge"));
  }

  {
    Table t{inequality_header(), {}};
    Table r = residual_table();
    Json arr = Json::array();
    const TestFunctionLattice stationary = make_lattice(space, 0.0, dc.lattice);
    for (const InequalitySet& s : sets) {
      t.rows.push_back(inequality_cells(s));
      arr.push_back(inequality_json(s));
      add_residual_rows(r, s, s.set == "elliptic_limit" ? stationary : lattice);
    }
    out.csv("inequalities.csv", t);
    out.csv("inequality_residuals.csv", r);
    summary["inequalities"] = arr;
  }

  return finish(out, std::move(summary), std::move(checks), "");
}

RunReport cmd_minimize(const RunConfig& cfg, double eps, double beta, const RunOptions& opt) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps", "eps must lie in (0,1)");
  if (!(beta >= 0.0)) throw ConfigError("beta", "beta must be >= 0");
  const Scenario sc = build_scenario(cfg);
  const Output out(opt.out_dir);
  out.text("config.resolved.cfg", render_config(cfg));
  Json summary = header_json(cfg, "minimize");
  Checks checks(cfg.diagnostics.gates);

  const OptimizeResult res = minimize(eps, beta, cfg.system, sc.data, sc.grid, cfg.optimizer, opt.log_iters);
  RungRow r = diagnose(cfg, sc, eps, beta, res.field, res.trace);
  r.iters = res.iters;
  r.pg_norm = res.pg_norm;
  r.converged = res.converged;
  say(opt, stage_name(eps, beta) + ": J=" + short_num(r.J) + " iters=" + std::to_string(r.iters) +
               (r.converged ? "" : " NOT CONVERGED"));

  out.csv("ladder.csv", {rung_header(), {rung_cells(r)}});
  out.csv("uniform_estimates.csv", uniform_table({r}));
  out.csv("uniform_windows.csv", uniform_windows_table({r}));
  out.csv("traces/trace.csv", trace_table(res.trace));
  if (opt.log_iters) out.csv("logs/iters.csv", log_table(res.log));
  out.field("fields/u.csv", sc.grid.space, res.field);
  summary["rungs"] = Json::array({rung_json(r)});

  const std::string stage = r.converged ? "" : stage_name(eps, beta);
  checks.add("convergence", r.converged, r.converged ? "reached optimizer.grad_tol" : stage + " did not converge");
  if (r.converged) {
    checks.add("level_estimate", r.est.level_ok, "J/eps " + short_num(r.J / eps));
    checks.add("energy_identity", r.energy_residual <= cfg.diagnostics.energy_tol,
               "relative residual " + short_num(r.energy_residual));
    checks.add("estimate_bounds", r.est.E_bound_ok && r.est.I_integral_ok, "energy and kinetic-integral bounds");
    checks.add("uniform_estimates", r.uni.sup_ok, "sup norm " + short_num(r.uni.sup_norm));
  }
  return finish(out, std::move(summary), std::move(checks), stage);
}

RunReport cmd_oracle(const RunConfig& cfg, double beta, const RunOptions& opt) {
  if (!(beta >= 0.0)) throw ConfigError("beta", "beta must be >= 0");
  const Scenario sc = build_scenario(cfg);
  const Output out(opt.out_dir);
  out.text("config.resolved.cfg", render_config(cfg));
  Json summary = header_json(cfg, "oracle");
  Checks checks(cfg.diagnostics.gates);

  const Vector tau = comparison_tau_grid(cfg.ladder, sc.grid);
  const HeatCalibration cal =
      calibrate_heat(kHeatNx, kHeatDtau, cfg.oracle.theta, tau, cfg.diagnostics.lattice, cfg.diagnostics.c_w);
  out.csv("oracle_calibration.csv",
          {{"tau_end", "error_coarse", "error_fine", "ratio", "weak_ratio", "pass"},
           {{num(cal.tau_end), num(cal.error_coarse), num(cal.error_fine), num(cal.ratio), num(cal.weak_ratio),
             flag(cal.pass)}}});
  Json jc;
  jc["error_coarse"] = cal.error_coarse;
  jc["error_fine"] = cal.error_fine;
  jc["ratio"] = cal.ratio;
  jc["weak_ratio"] = cal.weak_ratio;
  summary["oracle_calibration"] = jc;
  checks.add("oracle_calibration", cal.pass,
             "heat error " + short_num(cal.error_coarse) + ", refinement ratio " + short_num(cal.ratio));

  const double horizon = tau[tau.size() - 1];
  const int steps = static_cast<int>(std::ceil(horizon / cfg.oracle.dtau - 1e-9));
  ParabolicOptions po;
  po.theta = cfg.oracle.theta;
  const ParabolicRun run = step_parabolic(sc.grid.space, cfg.system, sc.data, beta, horizon / steps, steps, po);
  const StateField sampled = sample_run(run, tau);
  out.field("fields/oracle_original.csv", sc.grid.space, sampled);
  Table t{{"tau"}, {}};
  for (Index n = 0; n < tau.size(); ++n) t.rows.push_back({num(tau[n])});
  out.csv("oracle_tau.csv", t);
  say(opt, "oracle: " + std::to_string(steps) + " steps to tau=" + short_num(horizon));
  return finish(out, std::move(summary), std::move(checks), "");
}

RunReport cmd_elliptic(const RunConfig& cfg, const RunOptions& opt) {
  const Scenario sc = build_scenario(cfg);
  const Output out(opt.out_dir);
  out.text("config.resolved.cfg", render_config(cfg));
  Json summary = header_json(cfg, "elliptic");
  Checks checks(cfg.diagnostics.gates);
  const SpatialGrid& space = sc.grid.space;
  const BoundaryData ddata = make_boundary_data(space, sc.data.v0, BcMode::dirichlet_only);

  const EllipticEquivalenceReport eq = check_elliptic_equivalence(cfg.system, ddata, cfg.elliptic.eps, cfg.elliptic.beta,
                                                                  sc.grid, cfg.optimizer, cfg.elliptic.tol);
  out.csv("elliptic_equivalence.csv",
          {{"eps", "beta", "temporal_variation", "mean_vs_elliptic", "tol", "converged", "pass"},
           {{num(cfg.elliptic.eps), num(cfg.elliptic.beta), num(eq.temporal_variation), num(eq.mean_vs_elliptic),
             num(eq.tol), flag(eq.converged), flag(eq.pass)}}});
  out.field("fields/elliptic_w.csv", space, eq.elliptic.w);
  checks.add("elliptic_equivalence", eq.pass,
             "temporal variation " + short_num(eq.temporal_variation) + ", distance to elliptic minimiser " +
                 short_num(eq.mean_vs_elliptic));

  const EllipticLadderReport el = run_elliptic_ladder(space, cfg.system, ddata, cfg.elliptic.betas, cfg.optimizer,
                                                      cfg.diagnostics.lattice, cfg.diagnostics.c_w);
  Table t{{"beta", "energy", "overlap", "iters", "converged"}, {}};
  bool conv = true;
  for (const EllipticRung& r : el.rungs) {
    t.rows.push_back({num(r.beta), num(r.energy), num(r.overlap), std::to_string(r.iters), flag(r.converged)});
    conv = conv && r.converged;
  }
  out.csv("elliptic_ladder.csv", t);
  out.field("fields/elliptic_limit.csv", space, el.limit);
  const InequalitySet set{"elliptic_limit", 0.0, 0.0, el.inequalities};
  out.csv("inequalities.csv", {inequality_header(), {inequality_cells(set)}});
  Table r = residual_table();
  add_residual_rows(r, set, make_lattice(space, 0.0, cfg.diagnostics.lattice));
  out.csv("inequality_residuals.csv", r);

  Json je;
  je["temporal_variation"] = eq.temporal_variation;
  je["mean_vs_elliptic"] = eq.mean_vs_elliptic;
  je["converged"] = eq.converged;
  je["overlap_ratio"] = el.overlap_ratio;
  je["stationary_worst_ratio"] = el.inequalities.worst_ratio;
  summary["elliptic"] = je;
  summary["inequalities"] = Json::array({inequality_json(set)});
  checks.add("elliptic_ladder", el.pass && conv,
             "overlap ratio " + short_num(el.overlap_ratio) + ", stationary residual/tolerance " +
                 short_num(el.inequalities.worst_ratio));
  return finish(out, std::move(summary), std::move(checks), "");
}

RunReport cmd_check(const RunConfig& cfg, const std::string& field_csv, double eps, double beta,
                    const RunOptions& opt) {
  const Scenario sc = build_scenario(cfg);
  const SpatialGrid& space = sc.grid.space;
  const StateField field = read_field_csv(field_csv, space);
  if (field.k != cfg.system.k)
    throw IoError(field_csv + ": field has " + std::to_string(field.k) + " components, config has " +
                  std::to_string(cfg.system.k));
  const Output out(opt.out_dir);
  Json summary = header_json(cfg, "check");
  Checks checks(cfg.diagnostics.gates);
  const DiagnosticsConfig& dc = cfg.diagnostics;

  if (field.nt == 1) {
    const InequalitySet set{"stationary", 0.0, 0.0,
                            check_stationary_inequalities(space, cfg.system, hard_segregation(field),
                                                          make_lattice(space, 0.0, dc.lattice), dc.c_w)};
    out.csv("inequalities.csv", {inequality_header(), {inequality_cells(set)}});
    summary["inequalities"] = Json::array({inequality_json(set)});
    summary["energy"] = elliptic_energy(space, cfg.system, field, beta);
    checks.add("weak_inequalities", set.rep.pass, "stationary residual/tolerance " + short_num(set.rep.worst_ratio));
    return finish(out, std::move(summary), std::move(checks), "");
  }
  if (field.nt != sc.grid.nt)
    throw IoError(field_csv + ": expected " + std::to_string(sc.grid.nt) + " time levels or 1, got " +
                  std::to_string(field.nt));
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps", "eps must lie in (0,1)");

  const EnergyTrace trace = eval_J(sc.grid, cfg.system, field, eps, beta);
  const RungRow r = diagnose(cfg, sc, eps, beta, field, trace);
  out.csv("ladder.csv", {rung_header(), {rung_cells(r)}});
  out.csv("uniform_estimates.csv", uniform_table({r}));
  summary["rungs"] = Json::array({rung_json(r)});

  const Vector tau = comparison_tau_grid(cfg.ladder, sc.grid);
  const double horizon = std::min(tau[tau.size() - 1], 0.5 * eps * sc.grid.T_r);
  const Vector t = Vector::LinSpaced(tau.size(), 0.0, horizon);
  const TestFunctionLattice lattice = make_lattice(space, horizon, dc.lattice);
  const InequalitySet set{"field", eps, eps,
                          check_weak_inequalities(space, cfg.system,
                                                  to_original_time(sc.grid, hard_segregation(field), eps, t), t, eps,
                                                  lattice, dc.c_w)};
  out.csv("inequalities.csv", {inequality_header(), {inequality_cells(set)}});
  summary["inequalities"] = Json::array({inequality_json(set)});

  checks.add("level_estimate", r.est.level_ok, "J/eps " + short_num(r.J / eps));
  checks.add("energy_identity", r.energy_residual <= dc.energy_tol, "relative residual " + short_num(r.energy_residual));
  checks.add("estimate_bounds", r.est.E_bound_ok && r.est.I_integral_ok, "energy and kinetic-integral bounds");
  checks.add("uniform_estimates", r.uni.sup_ok, "sup norm " + short_num(r.uni.sup_norm));
  checks.add("weak_inequalities", set.rep.pass, "residual/tolerance " + short_num(set.rep.worst_ratio));
  return finish(out, std::move(summary), std::move(checks), "");
}

const std::vector<std::string>& report_inputs() {
  static const std::vector<std::string> files{"ladder.csv", "uniform_estimates.csv", "overlap_decay.csv",
                                              "inequalities.csv", "discrepancy.csv"};
  return files;
}

int cmd_report(const std::string& dir, std::ostream& out, std::ostream& err) {
  struct Spec {
    std::string name;
    std::string title;
    std::string file;
    std::vector<std::string> columns;
  };
  const std::vector<Spec> specs{
      {"level_estimate", "Level estimate |J|/eps", "ladder.csv", {"eps", "beta", "J", "J_over_eps", "lower", "J_competitor"}},
      {"uniform_constants", "Uniform estimate constants per (eps, beta)", "uniform_estimates.csv",
       {"eps", "beta", "window_max", "kinetic", "sup_norm"}},
      {"overlap_decay", "Overlap decay", "overlap_decay.csv", {"eps", "beta", "beta_overlap", "ratio_to_first"}},
      {"inequality_residuals", "Weak inequality worst residuals", "inequalities.csv",
       {"set", "eps", "worst_ratio", "worst_excess", "worst_tol", "pass"}},
      {"oracle_discrepancy", "Oracle discrepancies", "discrepancy.csv", {"eps", "total"}},
  };
  if (!fs::is_directory(dir)) {
    err << dir << ": not a directory\n";
    return kExitConfig;
  }
  const bool any = std::any_of(specs.begin(), specs.end(),
                               [&](const Spec& s) { return fs::exists(fs::path(dir) / s.file); });
  if (!any) {
    err << dir << ": no report inputs found; expected any of:";
    for (const std::string& f : report_inputs()) err << " " << f;
    err << "\n";
    return kExitConfig;
  }
  for (const Spec& s : specs) {
    const fs::path src = fs::path(dir) / s.file;
    if (!fs::exists(src)) {
      out << "== " << s.title << " ==\n(absent: " << s.file << " not found)\n\n";
      continue;
    }
    Table in;
    Table table{s.columns, {}};
    try {
      in = read_csv(src.string());
      std::vector<std::size_t> idx;
      for (const std::string& c : s.columns) idx.push_back(in.column(c));
      for (std::size_t r = 0; r < in.rows.size(); ++r) {
        std::vector<std::string> row;
        for (std::size_t i : idx) row.push_back(in.rows[r][i]);
        table.rows.push_back(std::move(row));
      }
    } catch (const IoError& e) {
      err << src.string() << ": corrupt input: " << e.what() << "\n";
      return kExitConfig;
    }
    if (table.rows.empty()) {
      err << src.string() << ": corrupt input: no rows\n";
      return kExitConfig;
    }
    write_csv((fs::path(dir) / ("report_" + s.name + ".csv")).string(), table);
    out << "== " << s.title << " ==\n" << format_text_table(table) << "\n";
  }
  return kExitPass;
}

}  // namespace segflow
