// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/diagnostics.hpp"

#include "segflow/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace segflow {

double bump_profile(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return q * q;
}

double bump_slope(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return -4.0 * s * (1.0 - s * s);
}

double Bump::value(double x, double y, double tau) const {
  double v = bump_profile((x - cx) / rx);
  if (dim == 2) v *= bump_profile((y - cy) / ry);
  if (!stationary()) v *= bump_profile((tau - ct) / rt);
  return v;
}

double Bump::dtau(double x, double y, double tau) const {
  if (stationary()) return 0.0;
  double v = bump_profile((x - cx) / rx) * bump_slope((tau - ct) / rt) / rt;
  if (dim == 2) v *= bump_profile((y - cy) / ry);
  return v;
}

double Bump::support_measure() const {
  double m = 2.0 * rx;
  if (dim == 2) m *= 2.0 * ry;
  if (!stationary()) m *= 2.0 * rt;
  return m;
}

double Bump::c1_norm() const {
  double grad2 = 1.0 / (rx * rx);
  if (dim == 2) grad2 += 1.0 / (ry * ry);
  double n = 1.0 + kBumpSlopeMax * std::sqrt(grad2);
  if (!stationary()) n += kBumpSlopeMax / rt;
  return n;
}

TestFunctionLattice make_lattice(const SpatialGrid& space, double horizon, const LatticeSpec& spec) {
  if (spec.space_centers < 1 || spec.time_centers < 1)
    throw std::invalid_argument("lattice needs at least one centre per axis");
  if (!(spec.fill > 0.0 && spec.fill < 1.0)) throw std::invalid_argument("lattice fill must lie in (0,1)");
  TestFunctionLattice lat;
  const int n = spec.space_centers;
  const int ny = space.dim == 2 ? n : 1;
  const int nt = horizon > 0.0 ? spec.time_centers : 1;
  const double hx = space.Lx / (n + 1);
  const double hy = space.Ly / (n + 1);
  const double ht = horizon > 0.0 ? horizon / (nt + 1) : 0.0;
  for (double scale : spec.scales) {
    if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("lattice scales must lie in (0,1]");
    for (int m = 0; m < nt; ++m)
      for (int jy = 0; jy < ny; ++jy)
        for (int ix = 0; ix < n; ++ix) {
          Bump b;
          b.dim = space.dim;
          b.cx = hx * (ix + 1);
          b.rx = spec.fill * hx * scale;
          if (space.dim == 2) {
            b.cy = hy * (jy + 1);
            b.ry = spec.fill * hy * scale;
          }
          if (horizon > 0.0) {
            b.ct = ht * (m + 1);
            b.rt = spec.fill * ht * scale;
          }
          lat.bumps.push_back(b);
        }
  }
  return lat;
}

namespace {

double node_y(const SpatialGrid& space, Index s) { return space.dim == 2 ? space.coords(s, 1) : 0.0; }

bool interior(const SpatialGrid& space, const Bump& b, double tau_lo, double tau_hi) {
  if (b.cx - b.rx <= 0.0 || b.cx + b.rx >= space.Lx) return false;
  if (space.dim == 2 && (b.cy - b.ry <= 0.0 || b.cy + b.ry >= space.Ly)) return false;
  if (!b.stationary() && (b.ct - b.rt <= tau_lo || b.ct + b.rt >= tau_hi)) return false;
  return true;
}

// Hatted components v_i - sum_{j != i} v_j and hatted reactions, from the
// hard-segregated field.
void hatted(const SystemSpec& spec, const StateField& field, StateField& vhat, StateField& fhat) {
  const StateField h = hard_segregation(field);
  vhat = StateField(field.k, field.nt, field.ns);
  fhat = StateField(field.k, field.nt, field.ns);
  for (int n = 0; n < field.nt; ++n)
    for (Index s = 0; s < field.ns; ++s) {
      double vsum = 0.0, fsum = 0.0;
      for (int c = 0; c < field.k; ++c) {
        vsum += h(c, n, s);
        fsum += spec.reactions[static_cast<std::size_t>(c)].f(h(c, n, s));
      }
      for (int c = 0; c < field.k; ++c) {
        const double vc = h(c, n, s);
        const double fc = spec.reactions[static_cast<std::size_t>(c)].f(vc);
        vhat(c, n, s) = 2.0 * vc - vsum;
        fhat(c, n, s) = 2.0 * fc - fsum;
      }
    }
}

StateField reaction_field(const SystemSpec& spec, const StateField& field) {
  StateField out(field.k, field.nt, field.ns);
  for (int c = 0; c < field.k; ++c) {
    const ReactionFamily& rf = spec.reactions[static_cast<std::size_t>(c)];
    for (int n = 0; n < field.nt; ++n)
      for (Index s = 0; s < field.ns; ++s) out(c, n, s) = rf.f(field(c, n, s));
  }
  return out;
}

// Spatial part at one level: sum_e coeff dv deta - sum_s m f eta.
double spatial_pairing(const SpatialGrid& space, const double* v, const double* f, const Vector& eta) {
  double sum = 0.0;
  for (const Edge& e : space.edges) sum += e.coeff * (v[e.b] - v[e.a]) * (eta[e.b] - eta[e.a]);
  for (Index s = 0; s < space.size(); ++s) sum -= space.mass[s] * f[s] * eta[s];
  return sum;
}

// Full space-time pairing for one component of (v, f).
double pairing(const SpatialGrid& space, const StateField& v, const StateField& f, int c,
               const Vector& tau, double eps_term, const Bump& b) {
  const Index ns = space.size();
  const int nt = v.nt;
  double total = 0.0;
  Vector eta(ns);
  for (int n = 0; n < nt; ++n) {
    double w = 0.0;
    if (n > 0) w += 0.5 * (tau[n] - tau[n - 1]);
    if (n + 1 < nt) w += 0.5 * (tau[n + 1] - tau[n]);
    if (std::abs(tau[n] - b.ct) >= b.rt) continue;
    for (Index s = 0; s < ns; ++s) eta[s] = b.value(space.coords(s, 0), node_y(space, s), tau[n]);
    total += w * spatial_pairing(space, v.values.data() + v.offset(c, n), f.values.data() + f.offset(c, n), eta);
  }
  for (int n = 0; n + 1 < nt; ++n) {
    const double mid = 0.5 * (tau[n] + tau[n + 1]);
    if (std::abs(mid - b.ct) >= b.rt) continue;
    double cell = 0.0;
    for (Index s = 0; s < ns; ++s) {
      const double x = space.coords(s, 0), y = node_y(space, s);
      const double dv = v(c, n + 1, s) - v(c, n, s);
      cell += space.mass[s] * dv * (b.value(x, y, mid) + eps_term * b.dtau(x, y, mid));
    }
    total += cell;
  }
  return total;
}

void finish(InequalityReport& rep) {
  rep.worst_ratio = -std::numeric_limits<double>::infinity();
  for (const BumpResidual& r : rep.residuals) {
    const double excess = std::max(r.A, -r.B);
    const double ratio = excess / r.tol;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_excess = excess;
      rep.worst_tol = r.tol;
    }
  }
  if (rep.residuals.empty()) rep.worst_ratio = 0.0;
  rep.pass = rep.worst_ratio <= 1.0;
}

}  // namespace

InequalityReport check_weak_inequalities(const SpatialGrid& space, const SystemSpec& spec,
                                         const StateField& field, const Vector& tau,
                                         double eps_term, const TestFunctionLattice& lattice,
                                         double c_w) {
  if (field.nt != tau.size() || field.nt < 2) throw std::invalid_argument("field levels must match the tau grid");
  if (field.ns != space.size() || field.k != spec.k) throw std::invalid_argument("field shape does not match grid and system");
  if (!(eps_term >= 0.0)) throw std::invalid_argument("eps_term must be >= 0");
  InequalityReport rep;
  rep.c_w = c_w;
  const StateField f = reaction_field(spec, field);
  StateField vhat, fhat;
  hatted(spec, field, vhat, fhat);
  const double dtau = (tau[tau.size() - 1] - tau[0]) / (tau.size() - 1);
  const double h = space.dim == 2 ? std::max(space.dx, space.dy) : space.dx;
  for (std::size_t ib = 0; ib < lattice.bumps.size(); ++ib) {
    const Bump& b = lattice.bumps[ib];
    if (b.stationary() || !interior(space, b, tau[0], tau[tau.size() - 1])) {
      std::ostringstream msg;
      msg << "bump " << ib << " skipped: support is not interior to the space-time window";
      rep.warnings.push_back(msg.str());
      ++rep.skipped;
      continue;
    }
    const double tol = c_w * (h + dtau) * b.support_measure() * b.c1_norm();
    for (int c = 0; c < field.k; ++c) {
      BumpResidual r;
      r.species = c;
      r.bump = static_cast<int>(ib);
      r.A = pairing(space, field, f, c, tau, eps_term, b);
      r.B = pairing(space, vhat, fhat, c, tau, eps_term, b);
      r.tol = tol;
      rep.residuals.push_back(r);
    }
  }
  finish(rep);
  return rep;
}

InequalityReport check_stationary_inequalities(const SpatialGrid& space, const SystemSpec& spec,
                                               const StateField& field,
                                               const TestFunctionLattice& lattice, double c_w) {
  if (field.nt != 1) throw std::invalid_argument("stationary check expects a single slice");
  if (field.ns != space.size() || field.k != spec.k) throw std::invalid_argument("field shape does not match grid and system");
  InequalityReport rep;
  rep.c_w = c_w;
  const StateField f = reaction_field(spec, field);
  StateField vhat, fhat;
  hatted(spec, field, vhat, fhat);
  const double h = space.dim == 2 ? std::max(space.dx, space.dy) : space.dx;
  Vector eta(space.size());
  for (std::size_t ib = 0; ib < lattice.bumps.size(); ++ib) {
    const Bump& b = lattice.bumps[ib];
    if (!b.stationary() || !interior(space, b, 0.0, 0.0)) {
      rep.warnings.push_back("bump " + std::to_string(ib) + " skipped: not a stationary interior bump");
      ++rep.skipped;
      continue;
    }
    for (Index s = 0; s < space.size(); ++s) eta[s] = b.value(space.coords(s, 0), node_y(space, s), 0.0);
    const double tol = c_w * h * b.support_measure() * b.c1_norm();
    for (int c = 0; c < field.k; ++c) {
      BumpResidual r;
      r.species = c;
      r.bump = static_cast<int>(ib);
      r.A = spatial_pairing(space, field.values.data() + field.offset(c, 0), f.values.data() + f.offset(c, 0), eta);
      r.B = spatial_pairing(space, vhat.values.data() + vhat.offset(c, 0), fhat.values.data() + fhat.offset(c, 0), eta);
      r.tol = tol;
      rep.residuals.push_back(r);
    }
  }
  finish(rep);
  return rep;
}

UniformEstimateReport check_uniform_estimates(const SpaceTimeGrid& grid, const SystemSpec& spec,
                                              const StateField& field, double eps, double beta,
                                              const std::vector<double>& tau_multiples,
                                              const std::vector<double>& T_multiples) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  const SpatialGrid& space = grid.space;
  UniformEstimateReport rep;

  Vector Q(grid.nt);
  for (int j = 0; j < grid.nt; ++j) {
    double q = 0.0;
    for (int c = 0; c < field.k; ++c) q += dirichlet_energy(space, field.slice(c, j));
    if (beta != 0.0)
      for (Index s = 0; s < field.ns; ++s) q += beta * space.mass[s] * pair_penalty(spec, field, j, s);
    Q[j] = q;
  }

  for (double a : tau_multiples)
    for (double b : T_multiples) {
      if (!(b >= 1.0)) throw std::invalid_argument("window length must be >= eps");
      const int ja = static_cast<int>(std::lround(a / grid.dt));
      const int jb = static_cast<int>(std::lround((a + b) / grid.dt));
      if (ja < 0 || jb > grid.nt - 1 || jb <= ja) {
        std::ostringstream msg;
        msg << "window [" << a * eps << ", " << (a + b) * eps << "] exceeds the available horizon "
            << eps * grid.T_r;
        throw std::invalid_argument(msg.str());
      }
      double integral = 0.0;
      for (int j = ja; j < jb; ++j) integral += 0.5 * grid.dt * (Q[j] + Q[j + 1]);
      EstimateWindow w;
      w.tau = a * eps;
      w.T = b * eps;
      w.value = integral / (grid.t[jb] - grid.t[ja]);
      rep.window_max = std::max(rep.window_max, w.value);
      rep.windows.push_back(w);
    }

  rep.sup_norm = field.values.size() ? field.values.cwiseAbs().maxCoeff() : 0.0;
  rep.sup_ok = rep.sup_norm <= 1.0;

  double kin = 0.0;
  for (int c = 0; c < field.k; ++c)
    for (int j = 0; j + 1 < grid.nt; ++j) {
      const Vector d = field.slice(c, j + 1) - field.slice(c, j);
      kin += space.mass.dot(d.cwiseProduct(d));
    }
  rep.kinetic = kin / (grid.dt * eps);
  return rep;
}

EnergyIdentityReport check_energy_identity(const OptimizeResult& result, const SpaceTimeGrid& grid,
                                           double threshold) {
  EnergyIdentityReport rep;
  rep.threshold = threshold;
  rep.relative = energy_identity_residual(result.trace, grid).relative;
  rep.reliable = result.converged;
  rep.pass = rep.reliable && rep.relative <= threshold;
  return rep;
}

LevelEstimateReport check_level_estimate_across_ladder(const std::vector<double>& eps,
                                                       const std::vector<double>& J,
                                                       const std::vector<double>& J_competitor,
                                                       double M, double measure) {
  if (eps.size() != J.size() || eps.size() != J_competitor.size())
    throw std::invalid_argument("level estimate: table sizes differ");
  LevelEstimateReport rep;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool all_within = true;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    LevelRow row;
    row.eps = eps[i];
    row.J = J[i];
    row.J_over_eps = J[i] / eps[i];
    row.lower = 0.0 - eps[i] * M * measure;
    row.upper = J_competitor[i];
    row.within = row.J >= row.lower - estimate_slack(row.lower) && row.J <= row.upper + estimate_slack(row.upper);
    all_within = all_within && row.within;
    lo = std::min(lo, std::abs(row.J_over_eps));
    hi = std::max(hi, std::abs(row.J_over_eps));
    rep.rows.push_back(row);
  }
  if (rep.rows.empty() || hi == 0.0) rep.ratio = 1.0;
  else rep.ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  rep.bounded = rep.ratio <= 4.0;
  rep.pass = rep.bounded && all_within;
  return rep;
}

}  // namespace segflow
