// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/grid.hpp"
#include "segflow/model.hpp"
#include "segflow/optimizer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace segflow {

struct LadderSpec {
  std::vector<double> betas{10.0, 100.0, 1000.0, 10000.0};
  std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
  double cauchy_tol = 5e-2;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const LadderSpec& ladder);

/// Common original-time window 0.5 * eps_min * T_r.
double comparison_horizon(const LadderSpec& ladder, const SpaceTimeGrid& grid);

/// Uniform original-time grid on [0, tau_max] with step eps_min * dt (rounded
/// so that tau_max is a node).
Vector comparison_tau_grid(const LadderSpec& ladder, const SpaceTimeGrid& grid);

/// Weighted (e^{-t}) integral and nodewise sup of <v^2, A v^2> over the grid.
struct Overlap {
  double integral = 0.0;
  double sup = 0.0;
};
Overlap overlap(const SpaceTimeGrid& grid, const SystemSpec& spec, const StateField& field);

/// Keep the largest component at every node and zero the others; ties go to
/// the lowest index.
StateField hard_segregation(const StateField& field);

/// Linear interpolation of a rescaled-time field at t = tau / eps. The result
/// has one level per entry of tau. Throws if tau exceeds eps * T_r.
StateField to_original_time(const SpaceTimeGrid& grid, const StateField& field, double eps,
                            const Vector& tau);

/// Carries the original-time content of a field computed at eps_from over to
/// the rescaled clock of eps_to: u(t) <- v(t * eps_to / eps_from).
StateField resample_eps(const SpaceTimeGrid& grid, const StateField& field, double eps_from,
                        double eps_to);

/// L2(Omega x (tau_0, tau_end)) distance of two fields sampled on the same
/// uniform tau grid (trapezoid rule in tau, lumped masses in space).
double original_time_distance(const SpatialGrid& space, const Vector& tau, const StateField& a,
                              const StateField& b);

struct RungSummary {
  double eps = 0.0;
  double beta = 0.0;
  double J = 0.0;
  double pg_norm = 0.0;
  int iters = 0;
  bool converged = false;
  double overlap = 0.0;       ///< weighted integral
  double overlap_sup = 0.0;
  double beta_overlap = 0.0;
  double distance_prev = 0.0; ///< weighted L2 to the previous rung (0 on the first)
};

struct BetaLadderResult {
  double eps = 0.0;
  std::vector<RungSummary> rungs;
  std::vector<OptimizeResult> results;
  StateField v_eps;            ///< top rung after hard segregation
  double J_eps = 0.0;          ///< J with beta = 0 of v_eps
  bool all_converged = true;
};

struct DoubleLimitResult {
  std::vector<BetaLadderResult> ladders;
  StateField w;
  double w_eps = 0.0;
  Vector tau;                     ///< common original-time grid
  std::vector<double> cauchy;     ///< distances between consecutive v_eps
  bool all_converged = true;
};

/// Called after every rung; used for progress reporting.
using RungObserver = std::function<void(const RungSummary&)>;

BetaLadderResult run_beta_ladder(double eps, const std::vector<double>& betas,
                                 const SystemSpec& spec, const BoundaryData& data,
                                 const SpaceTimeGrid& grid, const OptimizerConfig& config,
                                 const StateField& init, const RungObserver& observer = {},
                                 bool keep_log = false);

DoubleLimitResult run_eps_ladder(const LadderSpec& ladder, const SystemSpec& spec,
                                 const BoundaryData& data, const SpaceTimeGrid& grid,
                                 const OptimizerConfig& config, const RungObserver& observer = {},
                                 bool keep_log = false);

}  // namespace segflow
