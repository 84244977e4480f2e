// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/functional.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segflow {

namespace {

void check_shape(const SpaceTimeGrid& grid, const SystemSpec& spec, const StateField& field) {
  if (field.k != spec.k || field.nt != grid.nt || field.ns != grid.space.size())
    throw std::invalid_argument("field shape does not match grid and system");
}

// S_j and, optionally, accumulate scale * dS_j/du into grad.
double slice_terms(const SpatialGrid& space, const SystemSpec& spec, const StateField& field, int j,
                   double beta, Vector* grad, double scale) {
  const int k = field.k;
  double S = 0.0;
  for (int c = 0; c < k; ++c) {
    const Index off = field.offset(c, j);
    const double* u = field.values.data() + off;
    const ReactionFamily& rf = spec.reactions[static_cast<std::size_t>(c)];
    double* g = grad ? grad->data() + off : nullptr;
    for (const Edge& e : space.edges) {
      const double d = u[e.b] - u[e.a];
      S += e.coeff * d * d;
      if (g) {
        const double w = 2.0 * scale * e.coeff * d;
        g[e.b] += w;
        g[e.a] -= w;
      }
    }
    if (rf.kind != ReactionKind::zero) {
      for (Index s = 0; s < field.ns; ++s) {
        S -= 2.0 * space.mass[s] * rf.F(u[s]);
        if (g) g[s] -= 2.0 * scale * space.mass[s] * rf.f(u[s]);
      }
    }
  }
  if (beta != 0.0 && k > 1) {
    const Index stride = Index(field.nt) * field.ns;
    const double* base = field.values.data() + field.offset(0, j);
    double* gbase = grad ? grad->data() + field.offset(0, j) : nullptr;
    for (Index s = 0; s < field.ns; ++s) {
      double pen = 0.0;
      for (int c = 0; c < k; ++c) {
        const double uc = base[c * stride + s];
        double row = 0.0;
        for (int d = 0; d < k; ++d) {
          if (d == c) continue;
          const double ud = base[d * stride + s];
          row += spec.A(c, d) * ud * ud;
        }
        pen += uc * uc * row;
        // d/du_c (beta/2) <u^2,Au^2> = 2 beta u_c sum_d a_cd u_d^2
        if (gbase) gbase[c * stride + s] += scale * space.mass[s] * 2.0 * beta * uc * row;
      }
      S += 0.5 * beta * space.mass[s] * pen;
    }
  }
  return S;
}

}  // namespace

double pair_penalty(const SystemSpec& spec, const StateField& field, int j, Index s) {
  double pen = 0.0;
  for (int c = 0; c < field.k; ++c)
    for (int d = 0; d < field.k; ++d) {
      if (c == d) continue;
      const double uc = field(c, j, s), ud = field(d, j, s);
      pen += spec.A(c, d) * uc * uc * ud * ud;
    }
  return pen;
}

double slice_energy(const SpatialGrid& space, const SystemSpec& spec, const StateField& field, int j,
                    double beta) {
  return slice_terms(space, spec, field, j, beta, nullptr, 0.0);
}

namespace {

double evaluate(const SpaceTimeGrid& grid, const SystemSpec& spec, const FunctionalParams& p,
                const StateField& field, Vector* grad, Vector* S_nodes, Vector* I_cells) {
  check_shape(grid, spec, field);
  if (grad) grad->setZero(field.values.size());
  const SpatialGrid& space = grid.space;
  double J = 0.0;
  for (int j = 0; j < grid.nt; ++j) {
    const double w = p.eps * grid.node_weights[j];
    const double S = slice_terms(space, spec, field, j, p.beta, grad, w);
    if (S_nodes) (*S_nodes)[j] = S;
    J += w * S;
  }
  const double inv_dt2 = 1.0 / (grid.dt * grid.dt);
  for (int j = 0; j + 1 < grid.nt; ++j) {
    const double cw = grid.cell_weights[j];
    double I = 0.0;
    for (int c = 0; c < field.k; ++c) {
      const double* u0 = field.values.data() + field.offset(c, j);
      const double* u1 = field.values.data() + field.offset(c, j + 1);
      double* g0 = grad ? grad->data() + field.offset(c, j) : nullptr;
      double* g1 = grad ? grad->data() + field.offset(c, j + 1) : nullptr;
      for (Index s = 0; s < field.ns; ++s) {
        const double d = u1[s] - u0[s];
        I += space.mass[s] * d * d;
        if (grad) {
          const double gw = 2.0 * cw * space.mass[s] * d * inv_dt2;
          g1[s] += gw;
          g0[s] -= gw;
        }
      }
    }
    I *= inv_dt2;
    if (I_cells) (*I_cells)[j] = I;
    J += cw * I;
  }
  return J;
}

}  // namespace

double functional_value(const SpaceTimeGrid& grid, const SystemSpec& spec, const FunctionalParams& p,
                        const StateField& field, Vector* grad) {
  return evaluate(grid, spec, p, field, grad, nullptr, nullptr);
}

namespace {

// S(a) - S(b) for one time level; component c of each state starts at
// ptr + c * stride.
double slice_difference(const SpatialGrid& space, const SystemSpec& spec, const double* a,
                        const double* b, Index stride, double beta) {
  const int k = spec.k;
  const Index ns = space.size();
  double dS = 0.0;
  for (int c = 0; c < k; ++c) {
    const double* ua = a + c * stride;
    const double* ub = b + c * stride;
    for (const Edge& e : space.edges) {
      const double da = ua[e.b] - ua[e.a];
      const double db = ub[e.b] - ub[e.a];
      const double delta = (ua[e.b] - ub[e.b]) - (ua[e.a] - ub[e.a]);
      dS += e.coeff * delta * (da + db);
    }
    const ReactionFamily& rf = spec.reactions[static_cast<std::size_t>(c)];
    if (rf.kind != ReactionKind::zero)
      for (Index s = 0; s < ns; ++s) dS -= 2.0 * space.mass[s] * rf.F_difference(ua[s], ub[s]);
  }
  if (beta != 0.0 && k > 1) {
    for (Index s = 0; s < ns; ++s) {
      double dpen = 0.0;
      for (int c = 0; c < k; ++c)
        for (int d = 0; d < k; ++d) {
          if (c == d) continue;
          const double ac = a[c * stride + s], bc = b[c * stride + s];
          const double ad = a[d * stride + s], bd = b[d * stride + s];
          // (ac ad)^2 - (bc bd)^2 = (ac ad - bc bd)(ac ad + bc bd)
          const double diff = ac * (ad - bd) + bd * (ac - bc);
          dpen += spec.A(c, d) * diff * (ac * ad + bc * bd);
        }
      dS += 0.5 * beta * space.mass[s] * dpen;
    }
  }
  return dS;
}

}  // namespace

double functional_difference(const SpaceTimeGrid& grid, const SystemSpec& spec,
                             const FunctionalParams& p, const Vector& from, const Vector& to) {
  const SpatialGrid& space = grid.space;
  const int k = spec.k;
  const Index ns = space.size();
  const Index stride = Index(grid.nt) * ns;
  if (from.size() != k * stride || to.size() != k * stride)
    throw std::invalid_argument("field shape does not match grid and system");
  const double* a = to.data();
  const double* b = from.data();

  double total = 0.0;
  for (int j = 0; j < grid.nt; ++j) {
    const Index off = Index(j) * ns;
    total += p.eps * grid.node_weights[j] * slice_difference(space, spec, a + off, b + off, stride, p.beta);
  }

  const double inv_dt2 = 1.0 / (grid.dt * grid.dt);
  for (int j = 0; j + 1 < grid.nt; ++j) {
    double dI = 0.0;
    for (int c = 0; c < k; ++c) {
      const Index o0 = c * stride + Index(j) * ns;
      const Index o1 = o0 + ns;
      for (Index s = 0; s < ns; ++s) {
        const double da = a[o1 + s] - a[o0 + s];
        const double db = b[o1 + s] - b[o0 + s];
        const double delta = (a[o1 + s] - b[o1 + s]) - (a[o0 + s] - b[o0 + s]);
        dI += space.mass[s] * delta * (da + db);
      }
    }
    total += grid.cell_weights[j] * dI * inv_dt2;
  }
  return total;
}

double slice_energy_gradient(const SpatialGrid& space, const SystemSpec& spec, const StateField& field,
                             int j, double beta, Vector& grad) {
  grad.setZero(field.values.size());
  return slice_terms(space, spec, field, j, beta, &grad, 1.0);
}

double slice_energy_difference(const SpatialGrid& space, const SystemSpec& spec, const StateField& from,
                               const StateField& to, int j, double beta) {
  const Index stride = Index(from.nt) * from.ns;
  return slice_difference(space, spec, to.values.data() + to.offset(0, j),
                          from.values.data() + from.offset(0, j), stride, beta);
}

EnergyTrace eval_J(const SpaceTimeGrid& grid, const SystemSpec& spec, const StateField& field,
                   double eps, double beta) {
  Vector S(grid.nt), I(grid.nt - 1);
  evaluate(grid, spec, {eps, beta}, field, nullptr, &S, &I);

  EnergyTrace tr;
  tr.t = grid.t;
  tr.I = I;
  tr.R.resize(grid.nt - 1);
  for (int j = 0; j + 1 < grid.nt; ++j) tr.R[j] = eps * 0.5 * (S[j] + S[j + 1]);
  tr.J = grid.cell_weights.dot(tr.I + tr.R);
  tr.R_end = eps * S[grid.nt - 1];

  // E_j = e^{t_j} [ sum_{m>=j} cw_m (I_m + R_m) + e^{-T_r} R_end ], by backward recursion.
  const double q = std::exp(-grid.dt);
  tr.E.resize(grid.nt);
  tr.E[grid.nt - 1] = tr.R_end;
  for (int j = grid.nt - 2; j >= 0; --j)
    tr.E[j] = (1.0 - q) * (tr.I[j] + tr.R[j]) + q * tr.E[j + 1];
  return tr;
}

Vector grad_J(const SpaceTimeGrid& grid, const SystemSpec& spec, const StateField& field, double eps,
              double beta, const std::vector<char>& pinned) {
  Vector g;
  functional_value(grid, spec, {eps, beta}, field, &g);
  if (!pinned.empty()) {
    if (static_cast<Index>(pinned.size()) != g.size()) throw std::invalid_argument("mask size mismatch");
    for (Index i = 0; i < g.size(); ++i)
      if (pinned[static_cast<std::size_t>(i)]) g[i] = 0.0;
  }
  return g;
}

double competitor_value(const SpaceTimeGrid& grid, const SystemSpec& spec, const BoundaryData& data,
                        double eps, double beta) {
  StateField u = make_field(grid, data.k());
  for (int c = 0; c < data.k(); ++c)
    for (int j = 0; j < grid.nt; ++j) u.slice(c, j) = data.v0.col(c);
  return functional_value(grid, spec, {eps, beta}, u);
}

EnergyIdentityResidual energy_identity_residual(const EnergyTrace& trace, const SpaceTimeGrid& grid) {
  EnergyIdentityResidual out;
  const Index cells = trace.I.size();
  out.residual.resize(cells);
  for (Index j = 0; j < cells; ++j)
    out.residual[j] = (trace.E[j + 1] - trace.E[j]) / grid.dt + 2.0 * trace.I[j];
  out.first_cell = 1;
  out.last_cell = static_cast<int>(cells) - 2;
  for (int j = out.first_cell; j <= out.last_cell; ++j)
    out.max_abs = std::max(out.max_abs, std::abs(out.residual[j]));
  const double scale = std::max(1.0, (trace.I + trace.R).maxCoeff());
  out.relative = out.max_abs / scale;
  return out;
}

SliceEstimateReport slice_estimates(const EnergyTrace& trace, const SpaceTimeGrid& grid, double eps,
                                    double M, double measure, double J_competitor) {
  SliceEstimateReport r;
  r.J = trace.J;
  r.J_competitor = J_competitor;
  r.lower = 0.0 - eps * M * measure;
  r.E_min = trace.E.minCoeff();
  r.E_max = trace.E.maxCoeff();
  r.I_integral = grid.dt * trace.I.sum();
  r.I_bound = 0.5 * (J_competitor + eps * M * measure);
  r.level_ok = r.J >= r.lower - estimate_slack(r.lower) && r.J <= J_competitor + estimate_slack(J_competitor);
  r.E_bound_ok = r.E_min >= r.lower - estimate_slack(r.lower) &&
                 r.E_max <= r.J + estimate_slack(r.J) + grid.tail_mass * std::abs(trace.R_end);
  r.I_integral_ok = r.I_integral <= r.I_bound + estimate_slack(r.I_bound);
  return r;
}

}  // namespace segflow
