// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate on the bundled two-species scenario. Prints one PASS/FAIL
// line per criterion and exits nonzero when any criterion fails.

#include "segflow/config.hpp"
#include "segflow/continuation.hpp"
#include "segflow/diagnostics.hpp"
#include "segflow/functional.hpp"
#include "segflow/oracle.hpp"
#include "segflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace segflow;

namespace {

namespace fs = std::filesystem;

constexpr double kRel = 1.02;  // 2% relative slack on the stated bounds

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi == 0.0) return 1.0;
  return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

struct Gate {
  int failures = 0;
  void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. Analytic gradient against central differences of exact increments.
void gradient(Gate& gate, const Scenario& sc, const RunConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<char> pinned = pinned_mask(sc.grid, cfg.system.k, sc.data);
  std::vector<Index> free;
  for (Index i = 0; i < static_cast<Index>(pinned.size()); ++i)
    if (!pinned[static_cast<std::size_t>(i)]) free.push_back(i);
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  const double h = 1e-6;
  double worst = 0.0;
  int samples = 0;
  const double eps_corners[] = {cfg.ladder.epsilons.front(), cfg.ladder.epsilons.back()};
  const double beta_corners[] = {cfg.ladder.betas.front(), cfg.ladder.betas.back()};
  for (int f = 0; f < 5; ++f) {
    StateField u = make_field(sc.grid, cfg.system.k);
    for (Index i = 0; i < u.values.size(); ++i) u.values[i] = unit(rng);
    project_constraints(sc.grid, sc.data, u);
    for (double eps : eps_corners)
      for (double beta : beta_corners) {
        const Vector g = grad_J(sc.grid, cfg.system, u, eps, beta, pinned);
        for (int n = 0; n < 50; ++n) {
          const Index i = free[pick(rng)];
          Vector lo = u.values, hi = u.values;
          lo[i] -= h;
          hi[i] += h;
          const double fd = functional_difference(sc.grid, cfg.system, {eps, beta}, lo, hi) / (2.0 * h);
          const double scale = std::max({std::abs(g[i]), std::abs(fd), std::numeric_limits<double>::min()});
          worst = std::max(worst, std::abs(g[i] - fd) / scale);
          ++samples;
        }
      }
  }
  gate.report(1, "gradient", worst <= 1e-6,
              "worst relative error " + num(worst) + " over " + std::to_string(samples) + " samples (limit 1e-6)");
}

// 2. Level estimate on the scenario and on its cubic variant.
void level_estimate(Gate& gate, const DoubleLimitResult& dl, const DoubleLimitResult& cubic,
                    const std::vector<double>& betas) {
  bool ok = true;
  double worst_upper = 0.0, worst_lower = 0.0, worst_ratio = 0.0;
  for (const BetaLadderResult& bl : dl.ladders)
    for (const RungSummary& r : bl.rungs) {
      ok = ok && r.J >= 0.0 && r.J <= 4.0 * r.eps * kRel;
      worst_upper = std::max(worst_upper, r.J / (4.0 * r.eps));
    }
  for (std::size_t n = 0; n < betas.size(); ++n) {
    std::vector<double> scaled;
    for (const BetaLadderResult& bl : dl.ladders) scaled.push_back(std::abs(bl.rungs[n].J) / bl.eps);
    worst_ratio = std::max(worst_ratio, spread(scaled));
  }
  ok = ok && worst_ratio <= 4.0;
  for (const BetaLadderResult& bl : cubic.ladders)
    for (const RungSummary& r : bl.rungs) {
      const double lower = -r.eps / 3.0 * kRel;
      ok = ok && r.J >= lower;
      worst_lower = std::min(worst_lower, r.J / (r.eps / 3.0));
    }
  gate.report(2, "level estimate", ok,
              "max J/(4 eps) " + num(worst_upper) + ", max/min |J|/eps " + num(worst_ratio) +
                  ", cubic min J/(eps/3) " + num(worst_lower));
}

// 3 and 4. Energy identity and the derived energy / kinetic bounds per rung.
void energy(Gate& gate, const DoubleLimitResult& dl, const SpaceTimeGrid& grid, double tol) {
  double worst_identity = 0.0, worst_E = 0.0, worst_I = 0.0;
  bool converged = true;
  for (const BetaLadderResult& bl : dl.ladders)
    for (const OptimizeResult& r : bl.results) {
      converged = converged && r.converged;
      worst_identity = std::max(worst_identity, energy_identity_residual(r.trace, grid).relative);
      worst_E = std::max(worst_E, r.trace.E.cwiseAbs().maxCoeff() / (4.0 * bl.eps));
      worst_I = std::max(worst_I, grid.dt * r.trace.I.sum() / (2.0 * bl.eps));
    }
  gate.report(3, "energy identity", converged && worst_identity <= tol,
              "worst relative residual " + num(worst_identity) + " (limit " + num(tol) + ")");
  gate.report(4, "energy and kinetic bounds", worst_E <= kRel && worst_I <= kRel,
              "max |E|/(4 eps) " + num(worst_E) + ", sum dt I/(2 eps) " + num(worst_I) + " (limit 1.02)");
}

// 5. Uniformity of the windowed and kinetic estimates across the ladder product.
void uniformity(Gate& gate, const DoubleLimitResult& dl, const SpaceTimeGrid& grid, const RunConfig& cfg) {
  std::vector<double> win, kin;
  bool sup_ok = true;
  for (const BetaLadderResult& bl : dl.ladders)
    for (std::size_t n = 0; n < bl.results.size(); ++n) {
      const UniformEstimateReport u =
          check_uniform_estimates(grid, cfg.system, bl.results[n].field, bl.eps, bl.rungs[n].beta,
                                  cfg.diagnostics.window_tau, cfg.diagnostics.window_T);
      win.push_back(u.window_max);
      kin.push_back(u.kinetic);
      sup_ok = sup_ok && u.sup_norm <= 1.0;
    }
  const double ws = spread(win), ks = spread(kin);
  gate.report(5, "uniform estimates", sup_ok && ws <= 3.0 && ks <= 3.0,
              "sup norm " + std::string(sup_ok ? "<= 1" : "> 1") + ", window spread " + num(ws) +
                  ", kinetic spread " + num(ks) + " (limit 3) over " + std::to_string(win.size()) + " rungs");
}

// 6. beta * overlap decay and exact segregation of v_eps.
void segregation(Gate& gate, const DoubleLimitResult& dl, const SpaceTimeGrid& grid, const SystemSpec& spec) {
  double worst = 0.0;
  bool exact = true;
  for (const BetaLadderResult& bl : dl.ladders) {
    const double first = bl.rungs.front().beta_overlap;
    const double ratio = first > 0.0 ? bl.rungs.back().beta_overlap / first : 0.0;
    worst = std::max(worst, ratio);
    const Overlap ov = overlap(grid, spec, bl.v_eps);
    exact = exact && ov.integral == 0.0 && ov.sup == 0.0;
  }
  gate.report(6, "segregation", exact && worst <= 1e-2,
              "worst top/bottom beta*overlap " + num(worst) + " (limit 0.01), v_eps overlap " +
                  (exact ? "exactly 0" : "nonzero"));
}

// 7. Weak differential inequalities for every v_eps and for w.
void inequalities(Gate& gate, const DoubleLimitResult& dl, const Scenario& sc, const RunConfig& cfg) {
  const SpatialGrid& space = sc.grid.space;
  const TestFunctionLattice lattice =
      make_lattice(space, comparison_horizon(cfg.ladder, sc.grid), cfg.diagnostics.lattice);
  double worst = 0.0;
  std::string where;
  bool ok = true;
  auto run = [&](const StateField& rescaled, double eps, double eps_term, const std::string& label) {
    const StateField orig = to_original_time(sc.grid, rescaled, eps, dl.tau);
    const InequalityReport r =
        check_weak_inequalities(space, cfg.system, orig, dl.tau, eps_term, lattice, cfg.diagnostics.c_w);
    ok = ok && r.pass;
    if (r.worst_ratio > worst) {
      worst = r.worst_ratio;
      where = label;
    }
  };
  for (const BetaLadderResult& bl : dl.ladders) run(bl.v_eps, bl.eps, bl.eps, "v_eps(eps=" + num(bl.eps) + ")");
  run(dl.w, dl.w_eps, 0.0, "w");
  gate.report(7, "weak inequalities", ok,
              "worst residual/tolerance " + num(worst) + " at " + where + " over " +
                  std::to_string(lattice.bumps.size()) + " bumps (c_w " + num(cfg.diagnostics.c_w) + ")");
}

// 8. Cauchy behaviour of v_eps in original time.
void cauchy(Gate& gate, const DoubleLimitResult& dl) {
  bool ok = !dl.cauchy.empty();
  std::string d = "distances";
  for (std::size_t i = 0; i < dl.cauchy.size(); ++i) {
    d += " " + num(dl.cauchy[i]);
    if (i > 0) ok = ok && dl.cauchy[i] <= 1.1 * dl.cauchy[i - 1];
  }
  gate.report(8, "Cauchy ladder", ok, d + " (each <= 1.1 x previous)");
}

// 9. Heat benchmark of the parabolic stepper.
void heat(Gate& gate, const DoubleLimitResult& dl, const RunConfig& cfg) {
  const HeatCalibration cal = calibrate_heat(63, 1e-3, cfg.oracle.theta, dl.tau, cfg.diagnostics.lattice,
                                             cfg.diagnostics.c_w, 0.1);
  gate.report(9, "heat oracle", cal.error_coarse <= 0.02 && cal.ratio >= 3.0,
              "max-norm error " + num(cal.error_coarse) + " (limit 0.02), refinement ratio " + num(cal.ratio) +
                  " (limit 3), weak residual/tolerance " + num(cal.weak_ratio));
}

// 10. Minimizers approach the parabolic run as eps decreases.
void discrepancy(Gate& gate, const DoubleLimitResult& dl, const Scenario& sc, const RunConfig& cfg) {
  const Vector& tau = dl.tau;
  const double horizon = tau[tau.size() - 1];
  const int steps = static_cast<int>(std::ceil(horizon / cfg.oracle.dtau - 1e-9));
  ParabolicOptions po;
  po.theta = cfg.oracle.theta;
  const double beta = 10.0;
  const ParabolicRun run = step_parabolic(sc.grid.space, cfg.system, sc.data, beta, horizon / steps, steps, po);
  const auto it = std::find(cfg.ladder.betas.begin(), cfg.ladder.betas.end(), beta);
  std::vector<DiscrepancyRow> rows;
  for (const BetaLadderResult& bl : dl.ladders) {
    if (it != cfg.ladder.betas.end()) {
      rows.push_back(compare_with_minimizer(sc.grid, bl.results[static_cast<std::size_t>(it - cfg.ladder.betas.begin())].field,
                                            bl.eps, run, tau));
    } else {
      rows.push_back(compare_with_minimizer(
          sc.grid, minimize(bl.eps, beta, cfg.system, sc.data, sc.grid, cfg.optimizer).field, bl.eps, run, tau));
    }
  }
  std::string d = "L2 discrepancies";
  for (const DiscrepancyRow& r : rows) d += " " + num(r.total);
  gate.report(10, "eps-regularisation", discrepancy_decreasing(rows, 1.1), d + " (each <= 1.1 x previous)");
}

// 11. Elliptic equivalence, elliptic beta ladder and stationary inequalities.
void elliptic(Gate& gate, const Scenario& sc, const RunConfig& cfg) {
  const BoundaryData data = make_boundary_data(sc.grid.space, sc.data.v0, BcMode::dirichlet_only);
  const EllipticEquivalenceReport eq =
      check_elliptic_equivalence(cfg.system, data, 0.1, 100.0, sc.grid, cfg.optimizer, 5e-3);
  const EllipticLadderReport lad = run_elliptic_ladder(sc.grid.space, cfg.system, data, cfg.ladder.betas,
                                                       cfg.optimizer, cfg.diagnostics.lattice, cfg.diagnostics.c_w);
  bool conv = eq.converged;
  for (const EllipticRung& r : lad.rungs) conv = conv && r.converged;
  const bool ok = conv && eq.temporal_variation <= 5e-3 && eq.mean_vs_elliptic <= 5e-3 &&
                  lad.overlap_ratio <= 1e-2 && lad.inequalities.pass;
  gate.report(11, "elliptic equivalence", ok,
              "temporal variation " + num(eq.temporal_variation) + ", distance to elliptic " +
                  num(eq.mean_vs_elliptic) + " (limit 5e-3), overlap ratio " + num(lad.overlap_ratio) +
                  " (limit 0.01), stationary residual/tolerance " + num(lad.inequalities.worst_ratio) +
                  (conv ? "" : ", a minimisation did not converge"));
}

// 12. Two full runs with the same config and seed write identical summaries.
void determinism(Gate& gate, const RunConfig& cfg) {
  const fs::path root = fs::temp_directory_path() / "segflow_acceptance";
  fs::remove_all(root);
  RunOptions a, b;
  a.out_dir = (root / "a").string();
  b.out_dir = (root / "b").string();
  const RunReport ra = cmd_run(cfg, a);
  const RunReport rb = cmd_run(cfg, b);
  const std::string sa = slurp(root / "a" / "summary.json"), sb = slurp(root / "b" / "summary.json");
  const bool ok = !sa.empty() && sa == sb && ra.exit_code == rb.exit_code;
  gate.report(12, "determinism", ok,
              "summary.json " + std::string(sa == sb ? "identical" : "differs") + " (" + std::to_string(sa.size()) +
                  " bytes), exit codes " + std::to_string(ra.exit_code) + "/" + std::to_string(rb.exit_code));
  fs::remove_all(root);
}

}  // namespace

int main() {
  try {
    const RunConfig cfg = load_config(std::string(SEGFLOW_SCENARIO_DIR) + "/s1_two_species.cfg");
    const Scenario sc = build_scenario(cfg);
    Gate gate;

    gradient(gate, sc, cfg);

    const DoubleLimitResult dl = run_eps_ladder(cfg.ladder, cfg.system, sc.data, sc.grid, cfg.optimizer);
    RunConfig cubic_cfg = cfg;
    for (ReactionFamily& rf : cubic_cfg.system.reactions) rf = ReactionFamily{ReactionKind::cubic, 1.0};
    const DoubleLimitResult cubic =
        run_eps_ladder(cubic_cfg.ladder, cubic_cfg.system, sc.data, sc.grid, cubic_cfg.optimizer);

    level_estimate(gate, dl, cubic, cfg.ladder.betas);
    energy(gate, dl, sc.grid, 5e-2);
    uniformity(gate, dl, sc.grid, cfg);
    segregation(gate, dl, sc.grid, cfg.system);
    inequalities(gate, dl, sc, cfg);
    cauchy(gate, dl);
    heat(gate, dl, cfg);
    discrepancy(gate, dl, sc, cfg);
    elliptic(gate, sc, cfg);
    determinism(gate, cfg);

    std::printf("%d of 12 criteria failed\n", gate.failures);
    return gate.failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
}
