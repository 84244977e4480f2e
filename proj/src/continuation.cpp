// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/continuation.hpp"

#include "segflow/functional.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace segflow {

void validate(const LadderSpec& ladder) {
  if (ladder.betas.empty()) throw std::invalid_argument("ladder.betas must not be empty");
  if (ladder.epsilons.empty()) throw std::invalid_argument("ladder.epsilons must not be empty");
  for (std::size_t i = 0; i < ladder.betas.size(); ++i) {
    if (!(ladder.betas[i] > 0.0)) throw std::invalid_argument("ladder.betas must be positive");
    if (i > 0 && !(ladder.betas[i] > ladder.betas[i - 1]))
      throw std::invalid_argument("ladder.betas must be strictly ascending");
  }
  for (std::size_t i = 0; i < ladder.epsilons.size(); ++i) {
    const double e = ladder.epsilons[i];
    if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("ladder.epsilons must lie in (0,1)");
    if (i > 0 && !(e < ladder.epsilons[i - 1]))
      throw std::invalid_argument("ladder.epsilons must be strictly descending");
  }
  if (!(ladder.cauchy_tol > 0.0)) throw std::invalid_argument("ladder.cauchy_tol must be > 0");
}

double comparison_horizon(const LadderSpec& ladder, const SpaceTimeGrid& grid) {
  return 0.5 * ladder.epsilons.back() * grid.T_r;
}

Vector comparison_tau_grid(const LadderSpec& ladder, const SpaceTimeGrid& grid) {
  const double tau_max = comparison_horizon(ladder, grid);
  const double step = ladder.epsilons.back() * grid.dt;
  const Index n = std::max<Index>(1, static_cast<Index>(std::lround(tau_max / step)));
  return Vector::LinSpaced(n + 1, 0.0, tau_max);
}

Overlap overlap(const SpaceTimeGrid& grid, const SystemSpec& spec, const StateField& field) {
  Overlap out;
  for (int j = 0; j < field.nt; ++j) {
    double slice = 0.0;
    for (Index s = 0; s < field.ns; ++s) {
      const double p = pair_penalty(spec, field, j, s);
      slice += grid.space.mass[s] * p;
      out.sup = std::max(out.sup, p);
    }
    out.integral += grid.node_weights[j] * slice;
  }
  return out;
}

StateField hard_segregation(const StateField& field) {
  StateField out(field.k, field.nt, field.ns);
  for (int j = 0; j < field.nt; ++j)
    for (Index s = 0; s < field.ns; ++s) {
      int best = 0;
      for (int c = 1; c < field.k; ++c)
        if (field(c, j, s) > field(best, j, s)) best = c;
      out(best, j, s) = field(best, j, s);
    }
  return out;
}

namespace {

// Value of one component/node at fractional rescaled time t (within [0, T_r]).
struct TimeInterp {
  int j0 = 0;
  double theta = 0.0;
};

TimeInterp locate(const SpaceTimeGrid& grid, double t) {
  const double pos = std::clamp(t / grid.dt, 0.0, static_cast<double>(grid.nt - 1));
  int j0 = static_cast<int>(std::floor(pos));
  if (j0 >= grid.nt - 1) j0 = grid.nt - 2;
  return {j0, pos - j0};
}

StateField sample_at(const SpaceTimeGrid& grid, const StateField& field, const Vector& t) {
  StateField out(field.k, static_cast<int>(t.size()), field.ns);
  for (Index n = 0; n < t.size(); ++n) {
    const TimeInterp ti = locate(grid, t[n]);
    for (int c = 0; c < field.k; ++c)
      out.slice(c, static_cast<int>(n)) =
          (1.0 - ti.theta) * field.slice(c, ti.j0) + ti.theta * field.slice(c, ti.j0 + 1);
  }
  return out;
}

}  // namespace

StateField to_original_time(const SpaceTimeGrid& grid, const StateField& field, double eps,
                            const Vector& tau) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  const double horizon = eps * grid.T_r;
  if (tau.size() > 0 && tau.maxCoeff() > horizon * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "tau_max = " << tau.maxCoeff() << " exceeds the available horizon eps*T_r = " << horizon;
    throw std::invalid_argument(msg.str());
  }
  return sample_at(grid, field, tau / eps);
}

StateField resample_eps(const SpaceTimeGrid& grid, const StateField& field, double eps_from,
                        double eps_to) {
  return sample_at(grid, field, grid.t * (eps_to / eps_from));
}

double original_time_distance(const SpatialGrid& space, const Vector& tau, const StateField& a,
                              const StateField& b) {
  if (a.k != b.k || a.nt != b.nt || a.ns != b.ns || a.nt != tau.size())
    throw std::invalid_argument("original_time_distance: shape mismatch");
  double sum = 0.0;
  for (int n = 0; n < a.nt; ++n) {
    double w = 0.0;
    if (n > 0) w += 0.5 * (tau[n] - tau[n - 1]);
    if (n + 1 < a.nt) w += 0.5 * (tau[n + 1] - tau[n]);
    for (int c = 0; c < a.k; ++c) {
      const Vector d = a.slice(c, n) - b.slice(c, n);
      sum += w * space.mass.dot(d.cwiseProduct(d));
    }
  }
  return std::sqrt(sum);
}

BetaLadderResult run_beta_ladder(double eps, const std::vector<double>& betas,
                                 const SystemSpec& spec, const BoundaryData& data,
                                 const SpaceTimeGrid& grid, const OptimizerConfig& config,
                                 const StateField& init, const RungObserver& observer, bool keep_log) {
  BetaLadderResult out;
  out.eps = eps;
  StateField start = init;
  for (double beta : betas) {
    OptimizeResult r = minimize(eps, beta, spec, data, grid, config, start, keep_log);
    const Overlap ov = overlap(grid, spec, r.field);
    RungSummary rung;
    rung.eps = eps;
    rung.beta = beta;
    rung.J = r.trace.J;
    rung.pg_norm = r.pg_norm;
    rung.iters = r.iters;
    rung.converged = r.converged;
    rung.overlap = ov.integral;
    rung.overlap_sup = ov.sup;
    rung.beta_overlap = beta * ov.integral;
    if (!out.results.empty()) rung.distance_prev = weighted_distance(grid, out.results.back().field, r.field);
    out.all_converged = out.all_converged && r.converged;
    if (observer) observer(rung);
    out.rungs.push_back(rung);
    start = r.field;
    out.results.push_back(std::move(r));
  }
  out.v_eps = hard_segregation(out.results.back().field);
  out.J_eps = functional_value(grid, spec, {eps, 0.0}, out.v_eps);
  return out;
}

DoubleLimitResult run_eps_ladder(const LadderSpec& ladder, const SystemSpec& spec,
                                 const BoundaryData& data, const SpaceTimeGrid& grid,
                                 const OptimizerConfig& config, const RungObserver& observer,
                                 bool keep_log) {
  validate(ladder);
  DoubleLimitResult out;
  out.tau = comparison_tau_grid(ladder, grid);
  StateField start = default_init(grid, data, config.init, config.seed);
  StateField prev_original;
  for (std::size_t i = 0; i < ladder.epsilons.size(); ++i) {
    const double eps = ladder.epsilons[i];
    if (i > 0) start = projected(grid, data, resample_eps(grid, out.ladders.back().v_eps,
                                                          ladder.epsilons[i - 1], eps));
    BetaLadderResult bl = run_beta_ladder(eps, ladder.betas, spec, data, grid, config, start, observer,
                                         keep_log);
    out.all_converged = out.all_converged && bl.all_converged;
    StateField original = to_original_time(grid, bl.v_eps, eps, out.tau);
    if (i > 0) out.cauchy.push_back(original_time_distance(grid.space, out.tau, prev_original, original));
    prev_original = std::move(original);
    out.ladders.push_back(std::move(bl));
  }
  out.w = out.ladders.back().v_eps;
  out.w_eps = ladder.epsilons.back();
  return out;
}

}  // namespace segflow
