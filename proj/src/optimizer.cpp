// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/optimizer.hpp"

#include <random>

namespace segflow {

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::competitor: return "competitor";
    case InitMode::random: return "random";
    case InitMode::zero: return "zero";
  }
  return "?";
}

InitMode parse_init_mode(const std::string& name) {
  if (name == "competitor") return InitMode::competitor;
  if (name == "random") return InitMode::random;
  if (name == "zero") return InitMode::zero;
  throw std::invalid_argument("unknown init mode '" + name + "' (expected competitor|random|zero)");
}

void validate(const OptimizerConfig& cfg) {
  if (cfg.max_iters < 0) throw std::invalid_argument("optimizer.max_iters must be >= 0");
  if (!(cfg.grad_tol > 0.0)) throw std::invalid_argument("optimizer.grad_tol must be > 0");
  if (!(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0))
    throw std::invalid_argument("optimizer.backtrack_factor must lie in (0,1)");
  if (!(cfg.min_step > 0.0)) throw std::invalid_argument("optimizer.min_step must be > 0");
  if (!(cfg.armijo > 0.0 && cfg.armijo < 0.5)) throw std::invalid_argument("optimizer.armijo must lie in (0,0.5)");
}

double hessian_bound(const SpatialGrid& space, const SystemSpec& spec, double eps, double beta,
                     double dt) {
  double spatial = 8.0 / (space.dx * space.dx);
  if (space.dim == 2) spatial += 8.0 / (space.dy * space.dy);
  double row_a = 0.0, slope = 0.0;
  for (int c = 0; c < spec.k; ++c) {
    row_a = std::max(row_a, spec.A.row(c).cwiseAbs().sum());
    slope = std::max(slope, spec.reactions[static_cast<std::size_t>(c)].max_slope());
  }
  double L = eps * (spatial + 6.0 * beta * row_a + 2.0 * slope);
  if (dt > 0.0) L += 8.0 / (dt * dt);
  return L;
}

SpaceTimeProblem::SpaceTimeProblem(const SpaceTimeGrid& grid, const SystemSpec& spec,
                                   const BoundaryData& data, FunctionalParams params)
    : grid_(grid), spec_(spec), params_(params), scratch_(make_field(grid, spec.k)) {
  pinned_ = pinned_mask(grid, spec.k, data);
  metric_.resize(scratch_.values.size());
  for (int c = 0; c < spec.k; ++c)
    for (int j = 0; j < grid.nt; ++j)
      metric_.segment(scratch_.offset(c, j), scratch_.ns) = grid.node_weights[j] * grid.space.mass;
  lipschitz_ = hessian_bound(grid.space, spec, params.eps, params.beta, grid.dt);
}

double SpaceTimeProblem::value_and_gradient(const Vector& x, Vector& g) const {
  scratch_.values = x;
  return functional_value(grid_, spec_, params_, scratch_, &g);
}

double SpaceTimeProblem::difference(const Vector& from, const Vector& to) const {
  return functional_difference(grid_, spec_, params_, from, to);
}

StateField default_init(const SpaceTimeGrid& grid, const BoundaryData& data, InitMode mode,
                        std::uint64_t seed) {
  const int k = data.k();
  StateField u = make_field(grid, k);
  switch (mode) {
    case InitMode::competitor:
      for (int c = 0; c < k; ++c)
        for (int j = 0; j < grid.nt; ++j) u.slice(c, j) = data.v0.col(c);
      break;
    case InitMode::random: {
      // One randomly chosen species per node carries a U(0,1) value.
      std::mt19937_64 rng(seed);
      auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
      for (int j = 0; j < grid.nt; ++j)
        for (Index s = 0; s < u.ns; ++s) {
          const int c = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
          u(c, j, s) = unit();
        }
      break;
    }
    case InitMode::zero:
      break;
  }
  project_constraints(grid, data, u);
  return u;
}

OptimizeResult minimize(double eps, double beta, const SystemSpec& spec, const BoundaryData& data,
                        const SpaceTimeGrid& grid, const OptimizerConfig& config,
                        const StateField& init, bool keep_log) {
  validate(config);
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  StateField start = projected(grid, data, init);
  SpaceTimeProblem problem(grid, spec, data, {eps, beta});
  BoxSolveResult r = projected_bb(problem, start.values, config, keep_log);

  OptimizeResult out;
  out.field = std::move(start);
  out.field.values = std::move(r.x);
  out.trace = eval_J(grid, spec, out.field, eps, beta);
  out.iters = r.iters;
  out.pg_norm = r.pg_norm;
  out.converged = r.converged;
  out.J_history = std::move(r.history);
  out.log = std::move(r.log);
  return out;
}

OptimizeResult minimize(double eps, double beta, const SystemSpec& spec, const BoundaryData& data,
                        const SpaceTimeGrid& grid, const OptimizerConfig& config, bool keep_log) {
  return minimize(eps, beta, spec, data, grid, config,
                  default_init(grid, data, config.init, config.seed), keep_log);
}

double weighted_distance(const SpaceTimeGrid& grid, const StateField& a, const StateField& b) {
  double sum = 0.0;
  for (int c = 0; c < a.k; ++c)
    for (int j = 0; j < a.nt; ++j) {
      const Vector d = a.slice(c, j) - b.slice(c, j);
      sum += grid.node_weights[j] * grid.space.mass.dot(d.cwiseProduct(d));
    }
  return std::sqrt(sum);
}

}  // namespace segflow
