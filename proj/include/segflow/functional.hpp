// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/grid.hpp"
#include "segflow/model.hpp"

#include <cmath>
#include <vector>

namespace segflow {

/// Discrete rescaled functional
///
///   J(u) = sum_j cw_j (I_j + R_j),
///   I_j  = sum_s m_s |u_{j+1} - u_j|^2 / dt^2,
///   R_j  = eps (S_j + S_{j+1}) / 2,
///   S_j  = sum_c [ D(u_c) - 2 sum_s m_s F_c(u_c) ] + beta/2 sum_s m_s <u^2, A u^2>,
///
/// with D the edge-based Dirichlet energy and cw_j the exact cell integrals of
/// e^{-t}. The weight is eps-independent; the original-time functional is J/eps.
struct FunctionalParams {
  double eps = 0.1;
  double beta = 0.0;
};

/// Per-slice quantities. I and R live on cells, E on time nodes.
struct EnergyTrace {
  Vector t;
  Vector I;
  Vector R;
  Vector E;
  double J = 0.0;
  /// eps * S at the last node. E is closed past the horizon by continuing the
  /// last slice constantly in time, which contributes e^{t_j - T_r} * R_end.
  double R_end = 0.0;
};

/// S_j for one time level (no eps factor, no time weight).
double slice_energy(const SpatialGrid& space, const SystemSpec& spec, const StateField& field,
                    int j, double beta);

/// S_j with its gradient; grad is resized to the whole field and is nonzero
/// only on level j.
double slice_energy_gradient(const SpatialGrid& space, const SystemSpec& spec,
                             const StateField& field, int j, double beta, Vector& grad);

/// S_j(to) - S_j(from) in factored form.
double slice_energy_difference(const SpatialGrid& space, const SystemSpec& spec,
                               const StateField& from, const StateField& to, int j, double beta);

/// <u^2, A u^2> at one space-time node (full symmetric sum).
double pair_penalty(const SystemSpec& spec, const StateField& field, int j, Index s);

/// J and, when grad != nullptr, its exact gradient with respect to every
/// nodal value (pinned entries are not masked here).
double functional_value(const SpaceTimeGrid& grid, const SystemSpec& spec,
                        const FunctionalParams& p, const StateField& field,
                        Vector* grad = nullptr);

/// J(to) - J(from) assembled from factored differences of every term, so the
/// rounding error scales with |to - from| instead of with J. Late time slices
/// carry weights near e^{-T_r}; their contribution to a step is otherwise lost.
double functional_difference(const SpaceTimeGrid& grid, const SystemSpec& spec,
                             const FunctionalParams& p, const Vector& from, const Vector& to);

EnergyTrace eval_J(const SpaceTimeGrid& grid, const SystemSpec& spec, const StateField& field,
                   double eps, double beta);

/// dJ/du on free nodes; entries pinned by `pinned` are reported as 0.
Vector grad_J(const SpaceTimeGrid& grid, const SystemSpec& spec, const StateField& field,
              double eps, double beta, const std::vector<char>& pinned);

/// J of the time-constant extension of v0, the canonical upper-bound competitor.
double competitor_value(const SpaceTimeGrid& grid, const SystemSpec& spec,
                        const BoundaryData& data, double eps, double beta);

struct EnergyIdentityResidual {
  Vector residual;        ///< r_j = (E_{j+1} - E_j)/dt + 2 I_j on every cell
  int first_cell = 1;     ///< interior range used for the relative measure
  int last_cell = 0;      ///< inclusive
  double max_abs = 0.0;
  double relative = 0.0;  ///< max_abs / max(1, max_j (I_j + R_j))
};

/// Interior cells exclude the first and the last cell of the horizon.
EnergyIdentityResidual energy_identity_residual(const EnergyTrace& trace, const SpaceTimeGrid& grid);

struct SliceEstimateReport {
  double J = 0.0;
  double J_competitor = 0.0;
  double lower = 0.0;            ///< -eps M |Omega|
  double E_min = 0.0;
  double E_max = 0.0;
  double I_integral = 0.0;       ///< sum_j dt I_j
  double I_bound = 0.0;          ///< (J_competitor + eps M |Omega|) / 2
  bool level_ok = false;
  bool E_bound_ok = false;
  bool I_integral_ok = false;
  bool ok() const { return level_ok && E_bound_ok && I_integral_ok; }
};

/// Level estimate and the two derived bounds with slack 1e-6 + 2% relative.
SliceEstimateReport slice_estimates(const EnergyTrace& trace, const SpaceTimeGrid& grid, double eps,
                                    double M, double measure, double J_competitor);

inline double estimate_slack(double bound) { return 1e-6 + 0.02 * std::abs(bound); }

}  // namespace segflow
