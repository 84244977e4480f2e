// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace segflow {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One nearest-neighbour pair of spatial nodes. The Dirichlet-type energy of a
/// nodal function u is sum_e coeff_e * (u[b] - u[a])^2, which reproduces the
/// integral of |grad u|^2 for piecewise-linear (1-D) or 5-point (2-D) data.
struct Edge {
  Index a = 0;
  Index b = 0;
  double coeff = 0.0;  ///< measure(dual face) / h^2
  double h = 0.0;      ///< mesh width along the edge
  int axis = 0;
};

/// Tensor-product spatial mesh on (0,Lx) or (0,Lx)x(0,Ly). Nodes include the
/// boundary: 1-D node i sits at x = i*dx, i = 0..nx+1.
struct SpatialGrid {
  int dim = 1;
  int nx = 0;
  int ny = 0;
  double Lx = 1.0;
  double Ly = 1.0;
  double dx = 0.0;
  double dy = 0.0;

  Vector mass;                      ///< lumped (trapezoid) node masses
  std::vector<Edge> edges;          ///< x-edges first, then y-edges
  std::vector<char> boundary;       ///< 1 for nodes on the boundary
  Eigen::MatrixXd coords;           ///< size() x dim

  Index size() const { return mass.size(); }
  Index row_length() const { return nx + 2; }
  Index node(int i, int j = 0) const { return static_cast<Index>(j) * row_length() + i; }
  double measure() const { return dim == 1 ? Lx : Lx * Ly; }
  double min_h() const { return dim == 1 ? dx : std::min(dx, dy); }
};

SpatialGrid make_spatial_grid(int dim, int nx, int ny, double Lx, double Ly);

/// Truncated rescaled space-time mesh. Time nodes t_j = j*dt on [0, T_r];
/// cell j is [t_j, t_{j+1}] and carries the exact integral of e^{-t}.
struct SpaceTimeGrid {
  SpatialGrid space;
  int nt = 0;
  double T_r = 0.0;
  double dt = 0.0;
  Vector t;             ///< nt nodes
  Vector cell_weights;  ///< nt-1 cells, e^{-t_j} - e^{-t_{j+1}}
  Vector node_weights;  ///< nt nodes, (cw_{j-1} + cw_j) / 2
  double tail_mass = 0.0;
  double tail_tol = 1e-8;
  bool tail_warning = false;

  Index cells() const { return nt - 1; }
};

SpaceTimeGrid build_grid(int dim, int nx, int ny, double Lx, double Ly, int nt,
                         double T_r, double tail_tol = 1e-8);

inline SpaceTimeGrid build_grid_1d(int nx, double Lx, int nt, double T_r,
                                   double tail_tol = 1e-8) {
  return build_grid(1, nx, 0, Lx, 0.0, nt, T_r, tail_tol);
}

/// k components x nt time levels x ns spatial nodes, stored flat with the
/// spatial index fastest. Used both for nodal states and for per-cell arrays
/// (then nt counts cells).
struct StateField {
  int k = 0;
  int nt = 0;
  Index ns = 0;
  Vector values;

  StateField() = default;
  StateField(int k_, int nt_, Index ns_, double fill = 0.0)
      : k(k_), nt(nt_), ns(ns_), values(Vector::Constant(Index(k_) * nt_ * ns_, fill)) {}

  Index offset(int c, int j) const { return (Index(c) * nt + j) * ns; }
  Index index(int c, int j, Index s) const { return offset(c, j) + s; }
  double& operator()(int c, int j, Index s) { return values[index(c, j, s)]; }
  double operator()(int c, int j, Index s) const { return values[index(c, j, s)]; }

  auto slice(int c, int j) { return values.segment(offset(c, j), ns); }
  auto slice(int c, int j) const { return values.segment(offset(c, j), ns); }
};

StateField make_field(const SpaceTimeGrid& grid, int k, double fill = 0.0);

/// Forward difference (u_{j+1} - u_j) / dt per cell; result has nt-1 levels.
StateField discrete_time_derivative(const SpaceTimeGrid& grid, const StateField& field);

/// Per-edge difference quotients (u_b - u_a) / h of one component at time level j.
Vector discrete_gradient(const SpatialGrid& space, const StateField& field, int c, int j);

/// sum_e coeff_e (u_b - u_a)^2 for a nodal vector.
double dirichlet_energy(const SpatialGrid& space, const Eigen::Ref<const Vector>& u);

struct BoundaryData;

/// Pins the free/fixed status of every entry of a k-component field.
/// A node is pinned when it lies on the initial slice (initial-value modes)
/// or on the spatial boundary (Dirichlet modes).
std::vector<char> pinned_mask(const SpaceTimeGrid& grid, int k, const BoundaryData& data);

/// Clip to [0,1] componentwise, then re-impose the initial slice and/or the
/// Dirichlet nodes prescribed by data.mode. Idempotent.
void project_constraints(const SpaceTimeGrid& grid, const BoundaryData& data, StateField& field);
StateField projected(const SpaceTimeGrid& grid, const BoundaryData& data, StateField field);

/// Integral of a spatial nodal function using the lumped masses.
inline double integrate(const SpatialGrid& space, const Eigen::Ref<const Vector>& u) {
  return space.mass.dot(u);
}

}  // namespace segflow
