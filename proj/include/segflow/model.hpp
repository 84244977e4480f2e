// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/grid.hpp"

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace segflow {

enum class ReactionKind { zero, cubic };

/// Built-in reaction terms. Both satisfy the standing hypotheses on the
/// potentials: F continuous, F'(0) = 0, F non-decreasing below 0 and
/// non-increasing above 1.
///   zero:  f = 0,                 F = 0
///   cubic: f = lambda s^2 (1-s),  F = lambda (s^3/3 - s^4/4)
struct ReactionFamily {
  ReactionKind kind = ReactionKind::zero;
  double lambda = 1.0;

  template <typename Scalar>
  Scalar f(Scalar s) const {
    if (kind == ReactionKind::zero) return Scalar(0);
    return Scalar(lambda) * s * s * (Scalar(1) - s);
  }

  template <typename Scalar>
  Scalar F(Scalar s) const {
    if (kind == ReactionKind::zero) return Scalar(0);
    const Scalar s3 = s * s * s;
    return Scalar(lambda) * (s3 / Scalar(3) - s3 * s / Scalar(4));
  }

  template <typename Scalar>
  Scalar fprime(Scalar s) const {
    if (kind == ReactionKind::zero) return Scalar(0);
    return Scalar(lambda) * (Scalar(2) * s - Scalar(3) * s * s);
  }

  /// F(a) - F(b) in factored form, accurate when a and b are close.
  double F_difference(double a, double b) const {
    if (kind == ReactionKind::zero) return 0.0;
    return lambda * (a - b) * ((a * a + a * b + b * b) / 3.0 - (a + b) * (a * a + b * b) / 4.0);
  }

  /// max over the real line of F; attained at s = 1 for the cubic family.
  double max_potential() const { return kind == ReactionKind::zero ? 0.0 : lambda / 12.0; }

  /// sup of |f'| over [0,1].
  double max_slope() const { return kind == ReactionKind::zero ? 0.0 : lambda; }
};

std::string to_string(ReactionKind kind);
ReactionKind parse_reaction_kind(const std::string& name);

/// Returns (f(s), F(s)).
std::pair<double, double> eval_reaction(const ReactionFamily& family, double s);

struct SystemSpec {
  int k = 2;
  Eigen::MatrixXd A;                       ///< competition coefficients
  std::vector<ReactionFamily> reactions;   ///< one per species

  /// Canonical matrix with zero diagonal and all off-diagonal entries = a.
  static SystemSpec uniform(int k, double a, ReactionFamily reaction = {});
};

/// M = 2 * sum_i max F_i, the lower-bound constant of the functional.
double potential_bound(const SystemSpec& spec);

struct Violation {
  std::string field;    ///< config-style address, e.g. "system.A[0][0]"
  std::string message;  ///< e.g. "a_11 != 0"
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_system(const SystemSpec& spec);

enum class BcMode {
  dirichlet_and_initial,  ///< initial slice and lateral trace prescribed
  initial_only,           ///< initial slice prescribed, natural lateral condition
  dirichlet_only,         ///< lateral trace prescribed, initial slice free
};

std::string to_string(BcMode mode);
BcMode parse_bc_mode(const std::string& name);
inline bool prescribes_initial(BcMode m) { return m != BcMode::dirichlet_only; }
inline bool prescribes_dirichlet(BcMode m) { return m != BcMode::initial_only; }

/// Initial profile v0 (nodes x k, boundary nodes included) and its trace g0
/// on the boundary nodes. g0 is always read off v0.
struct BoundaryData {
  Eigen::MatrixXd v0;
  Eigen::MatrixXd g0;             ///< boundary_nodes.size() x k
  std::vector<Index> boundary_nodes;
  BcMode mode = BcMode::dirichlet_and_initial;

  int k() const { return static_cast<int>(v0.cols()); }
};

/// Values with |v| < 1e-14 are set to exactly zero before g0 is extracted.
BoundaryData make_boundary_data(const SpatialGrid& space, Eigen::MatrixXd v0, BcMode mode);

/// Throws std::invalid_argument on a component-count mismatch.
ValidationReport validate_boundary(const BoundaryData& data, const SystemSpec& spec);

enum class ProfilePreset { two_ramp, k_blocks, zero };
ProfilePreset parse_profile_preset(const std::string& name);
std::string to_string(ProfilePreset preset);

/// two_ramp (k = 2): (max(1 - 2x/Lx, 0), max(2x/Lx - 1, 0)).
/// k_blocks: (0,Lx) split into k stripes along x, species i carries
///           sin(pi * local coordinate) on stripe i and vanishes elsewhere.
/// zero: identically 0.
Eigen::MatrixXd preset_profile(const SpatialGrid& space, ProfilePreset preset, int k);

}  // namespace segflow
