// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/oracle.hpp"

#include "segflow/continuation.hpp"
#include "segflow/functional.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace segflow {

namespace {

// Solves a symmetric tridiagonal system with diagonal d and off-diagonal e
// (e[i] couples i and i+1). d is overwritten.
void thomas(Vector& d, const Vector& e, Vector& rhs) {
  const Index n = d.size();
  for (Index i = 1; i < n; ++i) {
    const double w = e[i - 1] / d[i - 1];
    d[i] -= w * e[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= d[n - 1];
  for (Index i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - e[i] * rhs[i + 1]) / d[i];
}

// K v for the edge stiffness K (K_aa += c, K_ab -= c).
Vector stiffness_apply(const SpatialGrid& space, const Eigen::Ref<const Vector>& v) {
  Vector out = Vector::Zero(v.size());
  for (const Edge& e : space.edges) {
    const double flux = e.coeff * (v[e.b] - v[e.a]);
    out[e.a] -= flux;
    out[e.b] += flux;
  }
  return out;
}

}  // namespace

ParabolicRun step_parabolic(const SpatialGrid& space, const SystemSpec& spec, const BoundaryData& data,
                            double beta, double dtau, int n_steps, const ParabolicOptions& options) {
  if (!(dtau > 0.0)) throw std::invalid_argument("oracle.dtau must be > 0");
  if (n_steps < 0) throw std::invalid_argument("oracle.n_steps must be >= 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("oracle.beta must be >= 0");
  if (!(options.theta >= 0.5 && options.theta <= 1.0)) throw std::invalid_argument("oracle.theta must lie in [0.5, 1]");
  if (options.store_every < 1) throw std::invalid_argument("oracle.store_every must be >= 1");
  double slope = 0.0;
  for (const ReactionFamily& rf : spec.reactions) slope = std::max(slope, rf.max_slope());
  if (dtau * slope > 0.5) {
    std::ostringstream msg;
    msg << "oracle.dtau = " << dtau << " violates dtau * max|f'| <= 1/2 (max|f'| = " << slope << ")";
    throw std::invalid_argument(msg.str());
  }
  if (data.k() != spec.k || data.v0.rows() != space.size())
    throw std::invalid_argument("oracle: boundary data does not match grid and system");

  const int k = spec.k;
  const Index ns = space.size();
  const double theta = options.theta;

  std::vector<char> fixed(static_cast<std::size_t>(ns), 0);
  if (prescribes_dirichlet(data.mode))
    for (Index s : data.boundary_nodes) fixed[static_cast<std::size_t>(s)] = 1;
  std::vector<Index> free_nodes, slot(static_cast<std::size_t>(ns), -1);
  for (Index s = 0; s < ns; ++s)
    if (!fixed[static_cast<std::size_t>(s)]) {
      slot[static_cast<std::size_t>(s)] = static_cast<Index>(free_nodes.size());
      free_nodes.push_back(s);
    }
  const Index nf = static_cast<Index>(free_nodes.size());

  Eigen::MatrixXd v = data.v0;  // ns x k
  const int n_store = n_steps / options.store_every + 1 + (n_steps % options.store_every ? 1 : 0);
  ParabolicRun run;
  run.beta = beta;
  run.dtau = dtau;
  run.theta = theta;
  run.scheme = theta == 1.0 ? "imex-backward-euler" : "imex-theta";
  run.tau.resize(n_store);
  run.states = StateField(k, n_store, ns);
  int stored = 0;
  auto store = [&](int step) {
    run.tau[stored] = step * dtau;
    for (int c = 0; c < k; ++c) run.states.slice(c, stored) = v.col(c);
    ++stored;
  };
  store(0);

  Eigen::SparseMatrix<double> Amat;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(options.cg_tol);
  cg.setMaxIterations(options.cg_max_iters);

  for (int step = 1; step <= n_steps; ++step) {
    Eigen::MatrixXd next = v;
    for (int c = 0; c < k; ++c) {
      const ReactionFamily& rf = spec.reactions[static_cast<std::size_t>(c)];
      Vector diag(ns);
      for (Index s = 0; s < ns; ++s) {
        double cross = 0.0;
        for (int d = 0; d < k; ++d)
          if (d != c) cross += spec.A(c, d) * v(s, d) * v(s, d);
        diag[s] = space.mass[s] * (1.0 / dtau + beta * cross);
      }
      const Vector Kv = stiffness_apply(space, v.col(c));
      Vector rhs_full(ns);
      for (Index s = 0; s < ns; ++s)
        rhs_full[s] = space.mass[s] * (v(s, c) / dtau + rf.f(v(s, c))) - (1.0 - theta) * Kv[s];

      Vector rhs(nf), d(nf);
      for (Index i = 0; i < nf; ++i) {
        rhs[i] = rhs_full[free_nodes[static_cast<std::size_t>(i)]];
        d[i] = diag[free_nodes[static_cast<std::size_t>(i)]];
      }
      std::vector<Eigen::Triplet<double>> off;
      for (const Edge& e : space.edges) {
        const Index ia = slot[static_cast<std::size_t>(e.a)], ib = slot[static_cast<std::size_t>(e.b)];
        const double w = theta * e.coeff;
        if (ia >= 0) d[ia] += w;
        if (ib >= 0) d[ib] += w;
        if (ia >= 0 && ib >= 0) {
          off.emplace_back(ia, ib, -w);
          off.emplace_back(ib, ia, -w);
        } else if (ia >= 0) {
          rhs[ia] += w * v(e.b, c);  // fixed neighbour keeps its value
        } else if (ib >= 0) {
          rhs[ib] += w * v(e.a, c);
        }
      }

      if (space.dim == 1) {
        // Free nodes are consecutive along x; off-diagonal i couples i and i+1.
        Vector e = Vector::Constant(std::max<Index>(nf - 1, 0), 0.0);
        for (const auto& t : off)
          if (t.col() == t.row() + 1) e[t.row()] = t.value();
        thomas(d, e, rhs);
      } else {
        std::vector<Eigen::Triplet<double>> trips = off;
        for (Index i = 0; i < nf; ++i) trips.emplace_back(i, i, d[i]);
        Amat.resize(nf, nf);
        Amat.setFromTriplets(trips.begin(), trips.end());
        cg.compute(Amat);
        Vector x0(nf);
        for (Index i = 0; i < nf; ++i) x0[i] = v(free_nodes[static_cast<std::size_t>(i)], c);
        const Vector x = cg.solveWithGuess(rhs, x0);
        if (cg.info() != Eigen::Success) {
          std::ostringstream msg;
          msg << "oracle: conjugate gradients did not converge at step " << step << " (component " << c
              << ", iterations " << cg.iterations() << ", error " << cg.error() << ")";
          throw std::runtime_error(msg.str());
        }
        rhs = x;
      }
      for (Index i = 0; i < nf; ++i)
        next(free_nodes[static_cast<std::size_t>(i)], c) = std::clamp(rhs[i], 0.0, 1.0);
    }
    v = std::move(next);
    if (step % options.store_every == 0 || step == n_steps) store(step);
  }
  return run;
}

StateField sample_run(const ParabolicRun& run, const Vector& tau) {
  const Vector& rt = run.tau;
  if (rt.size() == 0) throw std::invalid_argument("empty parabolic run");
  StateField out(run.states.k, static_cast<int>(tau.size()), run.states.ns);
  for (Index n = 0; n < tau.size(); ++n) {
    if (tau[n] > rt[rt.size() - 1] * (1.0 + 1e-12) + 1e-15) {
      std::ostringstream msg;
      msg << "requested tau = " << tau[n] << " beyond the parabolic run (" << rt[rt.size() - 1] << ")";
      throw std::invalid_argument(msg.str());
    }
    const auto it = std::upper_bound(rt.data(), rt.data() + rt.size(), tau[n]);
    Index j1 = std::clamp<Index>(it - rt.data(), 1, std::max<Index>(rt.size() - 1, 1));
    if (rt.size() == 1) j1 = 0;
    const Index j0 = std::max<Index>(j1 - 1, 0);
    const double span = rt[j1] - rt[j0];
    const double th = span > 0.0 ? std::clamp((tau[n] - rt[j0]) / span, 0.0, 1.0) : 0.0;
    for (int c = 0; c < out.k; ++c)
      out.slice(c, static_cast<int>(n)) = (1.0 - th) * run.states.slice(c, static_cast<int>(j0)) +
                                          th * run.states.slice(c, static_cast<int>(j1));
  }
  return out;
}

DiscrepancyRow compare_with_minimizer(const SpaceTimeGrid& grid, const StateField& minimizer, double eps,
                                      const ParabolicRun& run, const Vector& tau) {
  const StateField a = to_original_time(grid, minimizer, eps, tau);
  const StateField b = sample_run(run, tau);
  DiscrepancyRow row;
  row.eps = eps;
  double total = 0.0;
  for (int c = 0; c < a.k; ++c) {
    double sum = 0.0;
    for (int n = 0; n < a.nt; ++n) {
      double w = 0.0;
      if (n > 0) w += 0.5 * (tau[n] - tau[n - 1]);
      if (n + 1 < a.nt) w += 0.5 * (tau[n + 1] - tau[n]);
      const Vector d = a.slice(c, n) - b.slice(c, n);
      sum += w * grid.space.mass.dot(d.cwiseProduct(d));
    }
    row.per_component.push_back(std::sqrt(sum));
    total += sum;
  }
  row.total = std::sqrt(total);
  return row;
}

namespace {

double heat_error(int nx, double dtau, double theta, double tau_end) {
  const SpatialGrid space = make_spatial_grid(1, nx, 0, 1.0, 0.0);
  const SystemSpec spec = SystemSpec::uniform(1, 0.0);
  Eigen::MatrixXd v0(space.size(), 1);
  for (Index s = 0; s < space.size(); ++s) v0(s, 0) = std::sin(std::numbers::pi * space.coords(s, 0));
  const BoundaryData data = make_boundary_data(space, v0, BcMode::dirichlet_and_initial);
  ParabolicOptions opt;
  opt.theta = theta;
  const int steps = static_cast<int>(std::lround(tau_end / dtau));
  const ParabolicRun run = step_parabolic(space, spec, data, 0.0, dtau, steps, opt);
  const double amp = std::exp(-std::numbers::pi * std::numbers::pi * run.tau[run.tau.size() - 1]);
  double err = 0.0;
  for (Index s = 0; s < space.size(); ++s)
    err = std::max(err, std::abs(run.states(0, run.states.nt - 1, s) - amp * v0(s, 0)));
  return err / amp;
}

}  // namespace

HeatCalibration calibrate_heat(int nx, double dtau, double theta, const Vector& tau,
                               const LatticeSpec& lattice, double c_w, double tau_end) {
  HeatCalibration cal;
  cal.tau_end = tau_end;
  cal.error_coarse = heat_error(nx, dtau, theta, tau_end);
  cal.error_fine = heat_error(2 * nx + 1, 0.5 * dtau, theta, tau_end);
  cal.ratio = cal.error_fine > 0.0 ? cal.error_coarse / cal.error_fine : std::numeric_limits<double>::infinity();

  const SpatialGrid space = make_spatial_grid(1, nx, 0, 1.0, 0.0);
  const SystemSpec spec = SystemSpec::uniform(1, 0.0);
  Eigen::MatrixXd v0(space.size(), 1);
  for (Index s = 0; s < space.size(); ++s) v0(s, 0) = std::sin(std::numbers::pi * space.coords(s, 0));
  const BoundaryData data = make_boundary_data(space, v0, BcMode::dirichlet_and_initial);
  ParabolicOptions opt;
  opt.theta = theta;
  const double horizon = tau[tau.size() - 1];
  const double step = std::min(dtau, 0.1 * (tau.size() > 1 ? tau[1] - tau[0] : horizon));
  const int steps = static_cast<int>(std::ceil(horizon / step - 1e-9));
  const ParabolicRun run = step_parabolic(space, spec, data, 0.0, horizon / steps, steps, opt);
  const InequalityReport rep = check_weak_inequalities(space, spec, sample_run(run, tau), tau, 0.0,
                                                       make_lattice(space, horizon, lattice), c_w);
  for (const BumpResidual& r : rep.residuals)
    cal.weak_ratio = std::max(cal.weak_ratio, std::max(std::abs(r.A), std::abs(r.B)) / r.tol);
  cal.pass = cal.error_coarse <= 0.02 && cal.ratio >= 3.0 && cal.weak_ratio <= 1.0;
  return cal;
}

bool discrepancy_decreasing(const std::vector<DiscrepancyRow>& rows, double slack) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].total > slack * rows[i - 1].total) return false;
  return true;
}

namespace {

class EllipticProblem {
 public:
  EllipticProblem(const SpatialGrid& space, const SystemSpec& spec, const BoundaryData& data, double beta)
      : space_(space), spec_(spec), beta_(beta), a_(spec.k, 1, space.size()), b_(spec.k, 1, space.size()) {
    const Index ns = space.size();
    pinned_.assign(static_cast<std::size_t>(spec.k * ns), 0);
    for (int c = 0; c < spec.k; ++c)
      for (Index s : data.boundary_nodes) pinned_[static_cast<std::size_t>(c * ns + s)] = 1;
    metric_.resize(spec.k * ns);
    for (int c = 0; c < spec.k; ++c) metric_.segment(c * ns, ns) = space.mass;
    lipschitz_ = hessian_bound(space, spec, 1.0, beta, 0.0);
  }

  double value_and_gradient(const Vector& x, Vector& g) const {
    a_.values = x;
    return slice_energy_gradient(space_, spec_, a_, 0, beta_, g);
  }
  double difference(const Vector& from, const Vector& to) const {
    a_.values = from;
    b_.values = to;
    return slice_energy_difference(space_, spec_, a_, b_, 0, beta_);
  }
  const Vector& metric() const { return metric_; }
  const std::vector<char>& pinned() const { return pinned_; }
  double lower() const { return 0.0; }
  double upper() const { return 1.0; }
  double lipschitz() const { return lipschitz_; }

 private:
  const SpatialGrid& space_;
  const SystemSpec& spec_;
  double beta_;
  std::vector<char> pinned_;
  Vector metric_;
  double lipschitz_ = 1.0;
  mutable StateField a_, b_;
};

double l2(const SpatialGrid& space, const StateField& a, int ja, const StateField& b, int jb) {
  double sum = 0.0;
  for (int c = 0; c < a.k; ++c) {
    const Vector d = a.slice(c, ja) - b.slice(c, jb);
    sum += space.mass.dot(d.cwiseProduct(d));
  }
  return std::sqrt(sum);
}

}  // namespace

StateField slice_from_profile(const Eigen::MatrixXd& v0) {
  StateField w(static_cast<int>(v0.cols()), 1, v0.rows());
  for (int c = 0; c < w.k; ++c) w.slice(c, 0) = v0.col(c);
  return w;
}

double elliptic_energy(const SpatialGrid& space, const SystemSpec& spec, const StateField& w, double beta) {
  return slice_energy(space, spec, w, 0, beta);
}

EllipticResult minimize_elliptic(const SpatialGrid& space, const SystemSpec& spec, const BoundaryData& data,
                                 double beta, const OptimizerConfig& config, const StateField* init) {
  validate(config);
  if (!(beta >= 0.0)) throw std::invalid_argument("elliptic beta must be >= 0");
  if (data.k() != spec.k || data.v0.rows() != space.size())
    throw std::invalid_argument("elliptic: boundary data does not match grid and system");
  StateField start = init ? *init : slice_from_profile(data.v0);
  start.values = start.values.cwiseMax(0.0).cwiseMin(1.0);
  for (int c = 0; c < spec.k; ++c)
    for (std::size_t b = 0; b < data.boundary_nodes.size(); ++b)
      start(c, 0, data.boundary_nodes[b]) = data.g0(static_cast<Index>(b), c);

  EllipticProblem problem(space, spec, data, beta);
  BoxSolveResult r = projected_bb(problem, start.values, config);
  EllipticResult out;
  out.w = std::move(start);
  out.w.values = std::move(r.x);
  out.energy = elliptic_energy(space, spec, out.w, beta);
  out.iters = r.iters;
  out.pg_norm = r.pg_norm;
  out.converged = r.converged;
  return out;
}

EllipticEquivalenceReport check_elliptic_equivalence(const SystemSpec& spec, const BoundaryData& data,
                                                     double eps, double beta, const SpaceTimeGrid& grid,
                                                     const OptimizerConfig& config, double tol) {
  if (data.mode != BcMode::dirichlet_only)
    throw std::invalid_argument("elliptic equivalence requires boundary.mode = dirichlet_only");
  EllipticEquivalenceReport rep;
  rep.tol = tol;
  rep.spacetime = minimize(eps, beta, spec, data, grid, config);
  rep.elliptic = minimize_elliptic(grid.space, spec, data, beta, config);
  rep.converged = rep.spacetime.converged && rep.elliptic.converged;

  const StateField& u = rep.spacetime.field;
  StateField mean(u.k, 1, u.ns);
  for (int c = 0; c < u.k; ++c) {
    Vector acc = Vector::Zero(u.ns);
    for (int j = 0; j + 1 < u.nt; ++j) acc += 0.5 * (u.slice(c, j) + u.slice(c, j + 1));
    mean.slice(c, 0) = acc / (u.nt - 1);
  }
  for (int j = 0; j < u.nt; ++j)
    rep.temporal_variation = std::max(rep.temporal_variation, l2(grid.space, u, j, mean, 0));
  rep.mean_vs_elliptic = l2(grid.space, mean, 0, rep.elliptic.w, 0);
  rep.pass = rep.converged && rep.temporal_variation <= tol && rep.mean_vs_elliptic <= tol;
  return rep;
}

EllipticLadderReport run_elliptic_ladder(const SpatialGrid& space, const SystemSpec& spec,
                                         const BoundaryData& data, const std::vector<double>& betas,
                                         const OptimizerConfig& config, const LatticeSpec& lattice,
                                         double c_w) {
  if (betas.empty()) throw std::invalid_argument("elliptic.betas must not be empty");
  EllipticLadderReport rep;
  StateField start = slice_from_profile(data.v0);
  for (double beta : betas) {
    EllipticResult r = minimize_elliptic(space, spec, data, beta, config, &start);
    EllipticRung rung;
    rung.beta = beta;
    rung.energy = r.energy;
    rung.iters = r.iters;
    rung.converged = r.converged;
    for (Index s = 0; s < space.size(); ++s) rung.overlap += space.mass[s] * pair_penalty(spec, r.w, 0, s);
    rep.rungs.push_back(rung);
    start = std::move(r.w);
  }
  rep.limit = hard_segregation(start);
  const double bottom = rep.rungs.front().overlap;
  rep.overlap_ratio = bottom > 0.0 ? rep.rungs.back().overlap / bottom : 0.0;
  rep.inequalities = check_stationary_inequalities(space, spec, rep.limit, make_lattice(space, 0.0, lattice), c_w);
  rep.pass = rep.overlap_ratio <= 1e-2 && rep.inequalities.pass;
  return rep;
}

}  // namespace segflow
