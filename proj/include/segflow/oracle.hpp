// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/diagnostics.hpp"
#include "segflow/grid.hpp"
#include "segflow/model.hpp"
#include "segflow/optimizer.hpp"

#include <string>
#include <vector>

namespace segflow {

struct ParabolicOptions {
  double theta = 0.5;        ///< implicit weight of diffusion (1 = backward Euler)
  int store_every = 1;       ///< keep every n-th step (the last step is always kept)
  double cg_tol = 1e-12;     ///< relative residual, 2-D only
  int cg_max_iters = 10000;
};

struct ParabolicRun {
  Vector tau;                ///< stored times
  StateField states;         ///< one level per stored time
  double beta = 0.0;
  double dtau = 0.0;
  double theta = 0.5;
  std::string scheme;
};

/// IMEX stepping of the reaction-diffusion system with competition penalty.
/// Per component, with K the edge stiffness and M the lumped mass:
///   (M/dtau + theta K + beta M D^n) v^{n+1} = (M/dtau - (1-theta) K) v^n + M f(v^n),
///   D^n = diag(sum_{j != i} a_ij (v_j^n)^2),
/// restricted to non-Dirichlet nodes, then clipped to [0,1]. Tridiagonal
/// (Thomas) solve in 1-D, conjugate gradients in 2-D.
/// Throws if dtau * max|f'| > 1/2, and std::runtime_error if CG fails.
ParabolicRun step_parabolic(const SpatialGrid& space, const SystemSpec& spec, const BoundaryData& data,
                            double beta, double dtau, int n_steps, const ParabolicOptions& options = {});

/// Linear interpolation of a run at the requested times.
StateField sample_run(const ParabolicRun& run, const Vector& tau);

struct DiscrepancyRow {
  double eps = 0.0;
  std::vector<double> per_component;
  double total = 0.0;
};

/// L2(Omega x window) distance between the minimizer, mapped to original time
/// on tau, and the parabolic run sampled on the same tau.
DiscrepancyRow compare_with_minimizer(const SpaceTimeGrid& grid, const StateField& minimizer, double eps,
                                      const ParabolicRun& run, const Vector& tau);

/// Discrepancy must not grow by more than `slack` from one row to the next.
bool discrepancy_decreasing(const std::vector<DiscrepancyRow>& rows, double slack = 1.1);

struct HeatCalibration {
  double tau_end = 0.1;
  double error_coarse = 0.0;  ///< max-norm error relative to the exact amplitude
  double error_fine = 0.0;    ///< same with halved mesh width and step
  double ratio = 0.0;         ///< error_coarse / error_fine
  double weak_ratio = 0.0;    ///< worst max(|A|, |B|) / tol of the run on the lattice
  bool pass = false;          ///< error_coarse <= 2%, ratio >= 3, weak_ratio <= 1
};

/// k = 1 heat benchmark u = e^{-pi^2 tau} sin(pi x) on (0,1): stepping error
/// at tau_end under one mesh halving, and the weak-form residuals of a run
/// sampled on tau (horizon tau[last]) against the lattice.
HeatCalibration calibrate_heat(int nx, double dtau, double theta, const Vector& tau,
                               const LatticeSpec& lattice, double c_w = 0.5, double tau_end = 0.1);

struct EllipticResult {
  StateField w;              ///< one slice
  double energy = 0.0;
  int iters = 0;
  double pg_norm = 0.0;
  bool converged = false;
};

/// E_beta(w) = sum_c [ D(w_c) - 2 int F_c(w_c) ] + beta/2 int <w^2, A w^2>.
double elliptic_energy(const SpatialGrid& space, const SystemSpec& spec, const StateField& w, double beta);

/// Projected descent for E_beta with w = g0 on the boundary nodes, started
/// from init (default: the v0 profile of data).
EllipticResult minimize_elliptic(const SpatialGrid& space, const SystemSpec& spec, const BoundaryData& data,
                                 double beta, const OptimizerConfig& config, const StateField* init = nullptr);

/// Single slice built from the columns of v0.
StateField slice_from_profile(const Eigen::MatrixXd& v0);

struct EllipticEquivalenceReport {
  double temporal_variation = 0.0;  ///< max_j ||u(t_j) - u_bar||_L2
  double mean_vs_elliptic = 0.0;    ///< ||u_bar - w||_L2
  double tol = 5e-3;
  bool converged = false;
  bool pass = false;
  OptimizeResult spacetime;
  EllipticResult elliptic;
};

/// Space-time minimisation with a free initial slice against the elliptic
/// minimiser. data.mode must be dirichlet_only.
EllipticEquivalenceReport check_elliptic_equivalence(const SystemSpec& spec, const BoundaryData& data,
                                                     double eps, double beta, const SpaceTimeGrid& grid,
                                                     const OptimizerConfig& config, double tol = 5e-3);

struct EllipticRung {
  double beta = 0.0;
  double energy = 0.0;
  double overlap = 0.0;     ///< int <w^2, A w^2>
  int iters = 0;
  bool converged = false;
};

struct EllipticLadderReport {
  std::vector<EllipticRung> rungs;
  StateField limit;           ///< hard-segregated top rung
  double overlap_ratio = 0.0; ///< top / bottom (0 when the bottom overlap vanishes)
  InequalityReport inequalities;
  bool pass = false;          ///< ratio <= 1e-2 and inequalities pass
};

EllipticLadderReport run_elliptic_ladder(const SpatialGrid& space, const SystemSpec& spec,
                                         const BoundaryData& data, const std::vector<double>& betas,
                                         const OptimizerConfig& config, const LatticeSpec& lattice,
                                         double c_w = 0.5);

}  // namespace segflow
