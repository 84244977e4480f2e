// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/functional.hpp"
#include "segflow/grid.hpp"
#include "segflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace segflow {

enum class InitMode { competitor, random, zero };
std::string to_string(InitMode mode);
InitMode parse_init_mode(const std::string& name);

struct OptimizerConfig {
  int max_iters = 50000;
  double grad_tol = 1e-7;         ///< sup-norm of the scaled projected gradient
  double backtrack_factor = 0.5;
  double min_step = 1e-10;
  double armijo = 1e-4;
  std::uint64_t seed = 1;
  InitMode init = InitMode::competitor;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const OptimizerConfig& cfg);

struct IterationRecord {
  int iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct BoxSolveResult {
  Vector x;
  double value = 0.0;
  int iters = 0;
  double pg_norm = 0.0;
  bool converged = false;
  bool stalled = false;
  std::vector<double> history;
  std::vector<IterationRecord> log;
};

/// Projected gradient descent with Barzilai-Borwein steps in the diagonal
/// metric M supplied by the problem, and monotone Armijo backtracking along
/// the projection arc. When backtracking falls below min_step the step 1/L
/// is used, L being the problem's bound on the Hessian in the metric M.
///
/// Problem must provide
///   double value_and_gradient(const Vector& x, Vector& g) const;
///   double difference(const Vector& from, const Vector& to) const;  // f(to) - f(from)
///   const Vector& metric() const;                 // positive diagonal
///   const std::vector<char>& pinned() const;      // 1 = fixed entry
///   double lower() const; double upper() const;   // box on free entries
///   double lipschitz() const;
///
/// Decrease tests use difference() rather than subtracting totals; the
/// recorded values are f(x0) + sum of accepted differences.
///
/// Convergence: max over free entries of |x - P(x - M^{-1} g)| <= grad_tol.
template <class Problem>
BoxSolveResult projected_bb(const Problem& prob, Vector x, const OptimizerConfig& cfg,
                            bool keep_log = false) {
  const Index n = x.size();
  const auto& pinned = prob.pinned();
  const Vector& m = prob.metric();
  const double lo = prob.lower(), hi = prob.upper();
  const double L = prob.lipschitz();

  auto is_free = [&](Index i) { return !pinned[static_cast<std::size_t>(i)]; };
  auto project = [&](Vector& v) {
    for (Index i = 0; i < n; ++i)
      if (is_free(i)) v[i] = std::clamp(v[i], lo, hi);
  };
  auto step_to = [&](const Vector& from, const Vector& g, double alpha, Vector& out) {
    out = from;
    for (Index i = 0; i < n; ++i)
      if (is_free(i)) out[i] = std::clamp(from[i] - alpha * g[i] / m[i], lo, hi);
  };
  auto mask = [&](Vector& g) {
    for (Index i = 0; i < n; ++i)
      if (!is_free(i)) g[i] = 0.0;
  };

  BoxSolveResult res;
  project(x);
  Vector g(n), g_new(n), x_new(n), pg(n);
  double f = prob.value_and_gradient(x, g);
  mask(g);
  res.history.push_back(f);

  double alpha = 1.0 / L;
  double last_step = 0.0;
  for (int iter = 0;; ++iter) {
    step_to(x, g, 1.0, pg);
    const double pg_norm = (x - pg).cwiseAbs().maxCoeff();
    res.iters = iter;
    res.pg_norm = pg_norm;
    if (keep_log) res.log.push_back({iter, f, pg_norm, last_step});
    if (pg_norm <= cfg.grad_tol) {
      res.converged = true;
      break;
    }
    if (iter >= cfg.max_iters) break;

    double a = alpha;
    double df = 0.0;
    bool accepted = false;
    while (a >= cfg.min_step) {
      step_to(x, g, a, x_new);
      df = prob.difference(x, x_new);
      if (df <= cfg.armijo * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      a *= cfg.backtrack_factor;
    }
    if (!accepted) {
      a = 1.0 / L;
      step_to(x, g, a, x_new);
      df = prob.difference(x, x_new);
      if (!(df <= 0.0)) {
        res.stalled = true;
        break;
      }
    }
    prob.value_and_gradient(x_new, g_new);
    mask(g_new);
    const Vector s = x_new - x;
    const double sy = s.dot(g_new - g);
    const double sMs = s.cwiseProduct(m).dot(s);
    alpha = sy > 0.0 ? std::clamp(sMs / sy, 1.0 / L, 1e6 / L) : 1.0 / L;
    last_step = a;
    x.swap(x_new);
    g.swap(g_new);
    // History is J(x0) plus the accumulated decreases, so it is monotone by
    // construction and free of the rounding in the total.
    f += df;
    res.history.push_back(f);
  }
  res.value = f;
  res.x = std::move(x);
  return res;
}

/// The discrete space-time functional restricted to a constraint set.
class SpaceTimeProblem {
 public:
  SpaceTimeProblem(const SpaceTimeGrid& grid, const SystemSpec& spec, const BoundaryData& data,
                   FunctionalParams params);

  double value_and_gradient(const Vector& x, Vector& g) const;
  double difference(const Vector& from, const Vector& to) const;
  const Vector& metric() const { return metric_; }
  const std::vector<char>& pinned() const { return pinned_; }
  double lower() const { return 0.0; }
  double upper() const { return 1.0; }
  double lipschitz() const { return lipschitz_; }

 private:
  const SpaceTimeGrid& grid_;
  const SystemSpec& spec_;
  FunctionalParams params_;
  std::vector<char> pinned_;
  Vector metric_;
  double lipschitz_ = 1.0;
  mutable StateField scratch_;
};

/// Gershgorin bound on the Hessian of the slice energy in the lumped-mass
/// metric (box [0,1]), times eps, plus the kinetic bound 8/dt^2 when dt > 0.
double hessian_bound(const SpatialGrid& space, const SystemSpec& spec, double eps, double beta,
                     double dt);

struct OptimizeResult {
  StateField field;
  EnergyTrace trace;
  int iters = 0;
  double pg_norm = 0.0;
  bool converged = false;
  std::vector<double> J_history;
  std::vector<IterationRecord> log;
};

StateField default_init(const SpaceTimeGrid& grid, const BoundaryData& data, InitMode mode,
                        std::uint64_t seed = 1);

OptimizeResult minimize(double eps, double beta, const SystemSpec& spec, const BoundaryData& data,
                        const SpaceTimeGrid& grid, const OptimizerConfig& config,
                        const StateField& init, bool keep_log = false);

OptimizeResult minimize(double eps, double beta, const SystemSpec& spec, const BoundaryData& data,
                        const SpaceTimeGrid& grid, const OptimizerConfig& config,
                        bool keep_log = false);

/// Weighted L2 distance sqrt(sum_j w_j sum_s m_s sum_c (a - b)^2), w the
/// e^{-t} node weights.
double weighted_distance(const SpaceTimeGrid& grid, const StateField& a, const StateField& b);

}  // namespace segflow
