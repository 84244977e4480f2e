// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/grid.hpp"

#include "segflow/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace segflow {

SpatialGrid make_spatial_grid(int dim, int nx, int ny, double Lx, double Ly) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("spatial dimension must be 1 or 2");
  if (nx < 3 || (dim == 2 && ny < 3)) throw std::invalid_argument("need at least 3 interior nodes per axis");
  if (!(Lx > 0.0) || (dim == 2 && !(Ly > 0.0))) throw std::invalid_argument("domain lengths must be > 0");

  SpatialGrid g;
  g.dim = dim;
  g.nx = nx;
  g.ny = dim == 2 ? ny : 0;
  g.Lx = Lx;
  g.Ly = dim == 2 ? Ly : 1.0;
  g.dx = Lx / (nx + 1);
  g.dy = dim == 2 ? Ly / (ny + 1) : 1.0;

  const Index rx = nx + 2;
  const Index ry = dim == 2 ? ny + 2 : 1;
  const Index n = rx * ry;
  g.mass.resize(n);
  g.boundary.assign(static_cast<std::size_t>(n), 0);
  g.coords.resize(n, dim);

  for (Index j = 0; j < ry; ++j) {
    for (Index i = 0; i < rx; ++i) {
      const Index s = j * rx + i;
      const bool bx = (i == 0 || i == rx - 1);
      const bool by = dim == 2 && (j == 0 || j == ry - 1);
      g.boundary[static_cast<std::size_t>(s)] = (bx || by) ? 1 : 0;
      double m = g.dx * (bx ? 0.5 : 1.0);
      if (dim == 2) m *= g.dy * (by ? 0.5 : 1.0);
      g.mass[s] = m;
      g.coords(s, 0) = i * g.dx;
      if (dim == 2) g.coords(s, 1) = j * g.dy;
    }
  }

  // x-edges: dual face has length dy (halved on the y = 0, Ly lines).
  for (Index j = 0; j < ry; ++j) {
    const bool by = dim == 2 && (j == 0 || j == ry - 1);
    const double face = dim == 2 ? g.dy * (by ? 0.5 : 1.0) : 1.0;
    for (Index i = 0; i + 1 < rx; ++i)
      g.edges.push_back({j * rx + i, j * rx + i + 1, face / g.dx, g.dx, 0});
  }
  if (dim == 2) {
    for (Index j = 0; j + 1 < ry; ++j) {
      for (Index i = 0; i < rx; ++i) {
        const bool bx = (i == 0 || i == rx - 1);
        const double face = g.dx * (bx ? 0.5 : 1.0);
        g.edges.push_back({j * rx + i, (j + 1) * rx + i, face / g.dy, g.dy, 1});
      }
    }
  }
  return g;
}

SpaceTimeGrid build_grid(int dim, int nx, int ny, double Lx, double Ly, int nt, double T_r,
                         double tail_tol) {
  if (nt < 3) throw std::invalid_argument("need at least 3 time nodes");
  if (!(T_r > 0.0)) throw std::invalid_argument("time horizon T_r must be > 0");

  SpaceTimeGrid g;
  g.space = make_spatial_grid(dim, nx, ny, Lx, Ly);
  g.nt = nt;
  g.T_r = T_r;
  g.dt = T_r / (nt - 1);
  g.t = Vector::LinSpaced(nt, 0.0, T_r);
  g.cell_weights.resize(nt - 1);
  const double cell_factor = -std::expm1(-g.dt);
  for (int j = 0; j + 1 < nt; ++j) g.cell_weights[j] = std::exp(-g.t[j]) * cell_factor;
  g.node_weights = Vector::Zero(nt);
  for (int j = 0; j + 1 < nt; ++j) {
    g.node_weights[j] += 0.5 * g.cell_weights[j];
    g.node_weights[j + 1] += 0.5 * g.cell_weights[j];
  }
  g.tail_mass = std::exp(-T_r);
  g.tail_tol = tail_tol;
  g.tail_warning = g.tail_mass > tail_tol;
  return g;
}

StateField make_field(const SpaceTimeGrid& grid, int k, double fill) {
  return StateField(k, grid.nt, grid.space.size(), fill);
}

StateField discrete_time_derivative(const SpaceTimeGrid& grid, const StateField& field) {
  StateField out(field.k, field.nt - 1, field.ns);
  for (int c = 0; c < field.k; ++c)
    for (int j = 0; j + 1 < field.nt; ++j)
      out.slice(c, j) = (field.slice(c, j + 1) - field.slice(c, j)) / grid.dt;
  return out;
}

Vector discrete_gradient(const SpatialGrid& space, const StateField& field, int c, int j) {
  const auto u = field.slice(c, j);
  Vector out(static_cast<Index>(space.edges.size()));
  for (std::size_t e = 0; e < space.edges.size(); ++e) {
    const Edge& ed = space.edges[e];
    out[static_cast<Index>(e)] = (u[ed.b] - u[ed.a]) / ed.h;
  }
  return out;
}

double dirichlet_energy(const SpatialGrid& space, const Eigen::Ref<const Vector>& u) {
  double sum = 0.0;
  for (const Edge& e : space.edges) {
    const double d = u[e.b] - u[e.a];
    sum += e.coeff * d * d;
  }
  return sum;
}

std::vector<char> pinned_mask(const SpaceTimeGrid& grid, int k, const BoundaryData& data) {
  const StateField shape = make_field(grid, k);
  std::vector<char> mask(static_cast<std::size_t>(shape.values.size()), 0);
  for (int c = 0; c < k; ++c) {
    for (int j = 0; j < grid.nt; ++j) {
      if (j == 0 && prescribes_initial(data.mode)) {
        for (Index s = 0; s < shape.ns; ++s) mask[static_cast<std::size_t>(shape.index(c, j, s))] = 1;
      } else if (prescribes_dirichlet(data.mode)) {
        for (Index s : data.boundary_nodes) mask[static_cast<std::size_t>(shape.index(c, j, s))] = 1;
      }
    }
  }
  return mask;
}

void project_constraints(const SpaceTimeGrid& grid, const BoundaryData& data, StateField& field) {
  if (field.k != data.k() || field.ns != grid.space.size() || field.nt != grid.nt)
    throw std::invalid_argument("field shape does not match grid/boundary data");
  field.values = field.values.cwiseMax(0.0).cwiseMin(1.0);
  for (int c = 0; c < field.k; ++c) {
    if (prescribes_initial(data.mode)) field.slice(c, 0) = data.v0.col(c);
    if (prescribes_dirichlet(data.mode)) {
      for (int j = 0; j < field.nt; ++j)
        for (std::size_t b = 0; b < data.boundary_nodes.size(); ++b)
          field(c, j, data.boundary_nodes[b]) = data.g0(static_cast<Index>(b), c);
    }
  }
}

StateField projected(const SpaceTimeGrid& grid, const BoundaryData& data, StateField field) {
  project_constraints(grid, data, field);
  return field;
}

}  // namespace segflow
