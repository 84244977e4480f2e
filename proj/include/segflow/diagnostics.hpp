// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/functional.hpp"
#include "segflow/grid.hpp"
#include "segflow/model.hpp"
#include "segflow/optimizer.hpp"

#include <string>
#include <vector>

namespace segflow {

/// b(s) = (1 - s^2)^2 for |s| < 1, else 0.
double bump_profile(double s);
double bump_slope(double s);
/// sup |b'| = 8 / (3 sqrt 3).
inline constexpr double kBumpSlopeMax = 1.5396007178390020;

/// Tensor-product bump eta = b((x-cx)/rx) b((y-cy)/ry) b((tau-ct)/rt).
/// In 1-D the y factor is 1; a stationary bump has no time factor (rt = 0).
struct Bump {
  double cx = 0.0, cy = 0.0, ct = 0.0;
  double rx = 1.0, ry = 1.0, rt = 0.0;
  int dim = 1;

  bool stationary() const { return rt == 0.0; }
  double value(double x, double y, double tau) const;
  double dtau(double x, double y, double tau) const;
  double support_measure() const;
  /// ||eta||_inf + ||grad_x eta||_inf + ||d_tau eta||_inf
  double c1_norm() const;
};

struct LatticeSpec {
  int space_centers = 5;           ///< per spatial axis
  int time_centers = 3;
  std::vector<double> scales{1.0, 0.5};
  double fill = 0.9;               ///< radius as a fraction of the centre spacing
};

struct TestFunctionLattice {
  std::vector<Bump> bumps;
};

/// Centres at L (i+1)/(n+1) on each axis, horizon (m+1)/(n_t+1) in time.
/// horizon = 0 gives stationary (space-only) bumps.
TestFunctionLattice make_lattice(const SpatialGrid& space, double horizon, const LatticeSpec& spec);

struct BumpResidual {
  int species = 0;
  int bump = 0;
  double A = 0.0;   ///< must be <= tol
  double B = 0.0;   ///< must be >= -tol
  double tol = 0.0;
};

struct InequalityReport {
  std::vector<BumpResidual> residuals;
  double worst_ratio = 0.0;       ///< max over entries of max(A, -B) / tol
  double worst_excess = 0.0;      ///< max(A, -B) at the worst entry
  double worst_tol = 0.0;         ///< tolerance at the worst entry
  double c_w = 0.5;
  int skipped = 0;
  std::vector<std::string> warnings;
  bool pass = false;              ///< worst_ratio <= 1
};

/// Weak-form pairings of an original-time field on the uniform grid tau:
///   A_i(eta) = int int { eta d_tau v_i + eps_term d_tau v_i d_tau eta + grad v_i . grad eta - f_i(v_i) eta }
///   B_i(eta) = same with v_i -> v_i - sum_{j != i} v_j and f_i -> f_i(v_i) - sum_{j != i} f_j(v_j),
/// the hatted quantities formed from the hard-segregated field. Time terms use
/// forward differences against eta at cell midpoints.
/// tol(eta) = c_w (dx + dtau) |supp eta| ||eta||_C1.
InequalityReport check_weak_inequalities(const SpatialGrid& space, const SystemSpec& spec,
                                         const StateField& field, const Vector& tau,
                                         double eps_term, const TestFunctionLattice& lattice,
                                         double c_w = 0.5);

/// Time-independent specialisation on one spatial slice (field.nt == 1):
/// A_i = int grad w_i . grad eta - f_i(w_i) eta, tol = c_w dx |supp| ||eta||_C1.
InequalityReport check_stationary_inequalities(const SpatialGrid& space, const SystemSpec& spec,
                                               const StateField& field,
                                               const TestFunctionLattice& lattice, double c_w = 0.5);

struct EstimateWindow {
  double tau = 0.0;   ///< original-time start
  double T = 0.0;     ///< original-time length
  double value = 0.0; ///< (1/T) int int { |grad v|^2 + beta <v^2, A v^2> }
};

struct UniformEstimateReport {
  std::vector<EstimateWindow> windows;
  double window_max = 0.0;
  double sup_norm = 0.0;
  double kinetic = 0.0;  ///< int_0^inf int |d_tau v|^2 in original time
  bool sup_ok = false;   ///< sup_norm <= 1
};

/// Windows are given in units of eps: tau = a eps, T = b eps for a in
/// tau_multiples, b in T_multiples. Evaluated on the rescaled field through
/// the exact change of variables tau = eps t.
UniformEstimateReport check_uniform_estimates(const SpaceTimeGrid& grid, const SystemSpec& spec,
                                              const StateField& field, double eps, double beta,
                                              const std::vector<double>& tau_multiples = {0.0, 1.0, 2.0},
                                              const std::vector<double>& T_multiples = {1.0, 2.0, 4.0});

struct EnergyIdentityReport {
  double relative = 0.0;
  double threshold = 5e-2;
  bool reliable = false;  ///< false for non-converged input; pass is then meaningless
  bool pass = false;
};

EnergyIdentityReport check_energy_identity(const OptimizeResult& result, const SpaceTimeGrid& grid,
                                           double threshold = 5e-2);

struct LevelRow {
  double eps = 0.0;
  double J = 0.0;
  double J_over_eps = 0.0;
  double lower = 0.0;   ///< -eps M |Omega|
  double upper = 0.0;   ///< J of the time-constant competitor
  bool within = false;  ///< with slack 1e-6 + 2% relative
};

struct LevelEstimateReport {
  std::vector<LevelRow> rows;
  double ratio = 0.0;   ///< max / min of |J| / eps (1 when all vanish)
  bool bounded = false; ///< ratio <= 4
  bool pass = false;    ///< bounded and every row within
};

LevelEstimateReport check_level_estimate_across_ladder(const std::vector<double>& eps,
                                                       const std::vector<double>& J,
                                                       const std::vector<double>& J_competitor,
                                                       double M, double measure);

}  // namespace segflow
