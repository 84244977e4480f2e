// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/functional.hpp"
#include "segflow/grid.hpp"
#include "segflow/model.hpp"
#include "segflow/optimizer.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace segflow;
using Catch::Approx;

namespace {

/// Independent 1-D evaluation of J in extended precision, written from the
/// definition: P1 Dirichlet energy, trapezoid masses, exact e^{-t} cell weights.
long double reference_J(int nx, double Lx, int nt, double T_r, const SystemSpec& spec,
                        const StateField& u, double eps, double beta) {
  const long double dx = static_cast<long double>(Lx) / (nx + 1);
  const long double dt = static_cast<long double>(T_r) / (nt - 1);
  const int ns = nx + 2;
  auto mass = [&](int s) { return (s == 0 || s == ns - 1) ? dx / 2 : dx; };
  auto slice = [&](int j) {
    long double S = 0;
    for (int c = 0; c < u.k; ++c) {
      for (int s = 0; s + 1 < ns; ++s) {
        const long double d = static_cast<long double>(u(c, j, s + 1)) - u(c, j, s);
        S += d * d / dx;
      }
      for (int s = 0; s < ns; ++s)
        S -= 2 * mass(s) * spec.reactions[c].F(static_cast<long double>(u(c, j, s)));
    }
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < u.k; ++a)
        for (int b = 0; b < u.k; ++b) {
          if (a == b) continue;
          const long double ua = u(a, j, s), ub = u(b, j, s);
          S += static_cast<long double>(beta) / 2 * mass(s) * spec.A(a, b) * ua * ua * ub * ub;
        }
    return S;
  };
  long double J = 0;
  for (int j = 0; j + 1 < nt; ++j) {
    const long double w = std::exp(-j * dt) - std::exp(-(j + 1) * dt);
    long double I = 0;
    for (int c = 0; c < u.k; ++c)
      for (int s = 0; s < ns; ++s) {
        const long double d = (static_cast<long double>(u(c, j + 1, s)) - u(c, j, s)) / dt;
        I += mass(s) * d * d;
      }
    J += w * (I + eps * (slice(j) + slice(j + 1)) / 2);
  }
  return J;
}

struct S1 {
  SpaceTimeGrid grid = build_grid_1d(63, 1.0, 201, 20.0);
  SystemSpec spec = SystemSpec::uniform(2, 1.0);
  BoundaryData data = make_boundary_data(grid.space, preset_profile(grid.space, ProfilePreset::two_ramp, 2),
                                         BcMode::dirichlet_and_initial);
};

StateField random_field(const SpaceTimeGrid& grid, const BoundaryData& data, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  StateField u = make_field(grid, data.k());
  for (Index i = 0; i < u.values.size(); ++i) u.values[i] = U(rng);
  project_constraints(grid, data, u);
  return u;
}

}  // namespace

TEST_CASE("time-constant two_ramp field on S1") {
  S1 s;
  StateField u = default_init(s.grid, s.data, InitMode::competitor);
  const EnergyTrace tr = eval_J(s.grid, s.spec, u, 0.1, 10.0);
  CHECK(tr.J == Approx(0.4 * (1.0 - std::exp(-20.0))).epsilon(1e-12));
  CHECK(tr.I.cwiseAbs().maxCoeff() == 0.0);
  for (Index j = 0; j < tr.R.size(); ++j) CHECK(tr.R[j] == Approx(0.4).epsilon(1e-12));
  CHECK(competitor_value(s.grid, s.spec, s.data, 0.1, 10.0) == Approx(tr.J).epsilon(1e-15));
}

TEST_CASE("constant half field carries the exact penalty level") {
  const SpaceTimeGrid g = build_grid_1d(15, 1.0, 41, 20.0);
  const SystemSpec spec = SystemSpec::uniform(2, 1.0);
  const StateField u = make_field(g, 2, 0.5);
  CHECK(pair_penalty(spec, u, 3, 4) == Approx(0.125).epsilon(1e-15));
  const EnergyTrace tr = eval_J(g, spec, u, 0.1, 2.0);
  CHECK(tr.J == Approx(0.0125 * (1.0 - std::exp(-20.0))).epsilon(1e-12));
  for (Index j = 0; j < tr.E.size(); ++j) CHECK(tr.E[j] == Approx(0.0125).epsilon(1e-9));
}

TEST_CASE("zero field with zero data has zero functional") {
  const SpaceTimeGrid g = build_grid_1d(7, 1.0, 11, 20.0);
  for (double beta : {0.0, 10.0, 1e4}) {
    const EnergyTrace tr = eval_J(g, SystemSpec::uniform(3, 2.0), make_field(g, 3), 0.05, beta);
    CHECK(tr.J == 0.0);
    CHECK(tr.E.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("functional agrees with an extended-precision evaluation") {
  const SpaceTimeGrid g = build_grid_1d(15, 1.0, 21, 20.0);
  std::mt19937_64 rng(7);
  for (auto kind : {ReactionKind::zero, ReactionKind::cubic}) {
    const SystemSpec spec = SystemSpec::uniform(2, 1.5, ReactionFamily{kind, 1.0});
    const BoundaryData data = make_boundary_data(g.space, preset_profile(g.space, ProfilePreset::two_ramp, 2),
                                                 BcMode::dirichlet_and_initial);
    for (int trial = 0; trial < 3; ++trial) {
      const StateField u = random_field(g, data, rng);
      for (double eps : {0.2, 0.025})
        for (double beta : {10.0, 1e4}) {
          const double ref = static_cast<double>(reference_J(15, 1.0, 21, 20.0, spec, u, eps, beta));
          CHECK(functional_value(g, spec, {eps, beta}, u) == Approx(ref).epsilon(1e-12));
        }
    }
  }
}

TEST_CASE("gradient matches central differences of exact increments") {
  S1 s;
  std::mt19937_64 rng(11);
  for (auto kind : {ReactionKind::zero, ReactionKind::cubic}) {
    const SystemSpec spec = SystemSpec::uniform(2, 1.0, ReactionFamily{kind, 1.0});
    const std::vector<char> pinned = pinned_mask(s.grid, 2, s.data);
    std::vector<Index> free;
    for (Index i = 0; i < static_cast<Index>(pinned.size()); ++i)
      if (!pinned[static_cast<std::size_t>(i)]) free.push_back(i);
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    for (int f = 0; f < 2; ++f) {
      const StateField u = random_field(s.grid, s.data, rng);
      for (double eps : {0.2, 0.025})
        for (double beta : {10.0, 1e4}) {
          const Vector g = grad_J(s.grid, spec, u, eps, beta, pinned);
          double worst = 0.0;
          for (int n = 0; n < 20; ++n) {
            const Index i = free[pick(rng)];
            const double h = 1e-6;
            Vector lo = u.values, hi = u.values;
            lo[i] -= h;
            hi[i] += h;
            const double fd = functional_difference(s.grid, spec, {eps, beta}, lo, hi) / (2 * h);
            worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-300}));
          }
          CHECK(worst <= 1e-6);
        }
    }
  }
}

TEST_CASE("pinned entries report a zero gradient") {
  S1 s;
  std::mt19937_64 rng(3);
  const StateField u = random_field(s.grid, s.data, rng);
  const std::vector<char> pinned = pinned_mask(s.grid, 2, s.data);
  const Vector g = grad_J(s.grid, s.spec, u, 0.1, 10.0, pinned);
  for (Index i = 0; i < g.size(); ++i)
    if (pinned[static_cast<std::size_t>(i)]) CHECK(g[i] == 0.0);
}

TEST_CASE("penalty gradient at the constant half field has its closed form") {
  const SpaceTimeGrid g = build_grid_1d(15, 1.0, 21, 20.0);
  const SystemSpec spec = SystemSpec::uniform(2, 1.0);
  const double eps = 0.1, beta = 2.0;
  const StateField u = make_field(g, 2, 0.5);
  Vector grad;
  functional_value(g, spec, {eps, beta}, u, &grad);
  const Index s = 5;
  const int j = 4;
  // d/du_1 of eps beta/2 m <u^2, A u^2> is eps beta m 2 a12 u1 u2^2, weighted by
  // the two cells that share the node, each contributing half.
  const double m = g.space.mass[s];
  const double per_slice = eps * beta * u(0, j, s) * 1.0 * u(1, j, s) * u(1, j, s) * 2.0 * m;
  const double expected = per_slice * (g.cell_weights[j - 1] + g.cell_weights[j]) / 2.0;
  CHECK(grad[u.index(0, j, s)] == Approx(expected).epsilon(1e-12));
  CHECK(grad[u.index(1, j, s)] == Approx(expected).epsilon(1e-12));
}

TEST_CASE("constant field is stationary without penalty") {
  const SpaceTimeGrid g = build_grid_1d(15, 1.0, 21, 20.0);
  const SystemSpec spec = SystemSpec::uniform(2, 1.0);
  const StateField u = make_field(g, 2, 0.5);
  Vector grad;
  functional_value(g, spec, {0.1, 0.0}, u, &grad);
  CHECK(grad.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("relabelling species with a conjugated matrix leaves J unchanged") {
  const SpaceTimeGrid g = build_grid_1d(15, 1.0, 21, 20.0);
  SystemSpec spec = SystemSpec::uniform(3, 1.0, ReactionFamily{ReactionKind::cubic, 1.0});
  spec.A << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  spec.reactions[2].lambda = 0.5;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  StateField u = make_field(g, 3);
  for (Index i = 0; i < u.values.size(); ++i) u.values[i] = U(rng);
  const int perm[3] = {2, 0, 1};
  SystemSpec q = spec;
  StateField v = u;
  for (int a = 0; a < 3; ++a) {
    q.reactions[a] = spec.reactions[perm[a]];
    for (int b = 0; b < 3; ++b) q.A(a, b) = spec.A(perm[a], perm[b]);
    for (int j = 0; j < g.nt; ++j) v.slice(a, j) = u.slice(perm[a], j);
  }
  CHECK(functional_value(g, q, {0.05, 100.0}, v) ==
        Approx(functional_value(g, spec, {0.05, 100.0}, u)).epsilon(1e-13));
}

TEST_CASE("clipping to the box does not increase J") {
  S1 s;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-0.5, 1.5);
  for (auto kind : {ReactionKind::zero, ReactionKind::cubic}) {
    const SystemSpec spec = SystemSpec::uniform(2, 1.0, ReactionFamily{kind, 1.0});
    for (int trial = 0; trial < 10; ++trial) {
      StateField u = default_init(s.grid, s.data, InitMode::competitor);
      for (Index i = 0; i < u.values.size(); ++i) u.values[i] = U(rng);
      project_constraints(s.grid, s.data, u);
      // Violate only the box: push a random subset of free entries outside [0, 1].
      const std::vector<char> pinned = pinned_mask(s.grid, 2, s.data);
      StateField w = u;
      for (Index i = 0; i < w.values.size(); ++i)
        if (!pinned[static_cast<std::size_t>(i)] && U(rng) > 0.7) w.values[i] = U(rng) > 0.5 ? 1.3 : -0.3;
      const StateField p = projected(s.grid, s.data, w);
      for (double beta : {0.0, 100.0})
        CHECK(functional_value(s.grid, spec, {0.1, beta}, p) <= functional_value(s.grid, spec, {0.1, beta}, w));
    }
  }
}

TEST_CASE("E at the first node equals J") {
  S1 s;
  std::mt19937_64 rng(13);
  const StateField u = random_field(s.grid, s.data, rng);
  const EnergyTrace tr = eval_J(s.grid, s.spec, u, 0.1, 100.0);
  const double bound = (tr.I + tr.R).cwiseAbs().maxCoeff();
  CHECK(std::abs(tr.E[0] - tr.J) <= 1e-12 * std::abs(tr.J) + s.grid.tail_mass * bound);
  double J = 0.0;
  for (Index j = 0; j < tr.I.size(); ++j) J += s.grid.cell_weights[j] * (tr.I[j] + tr.R[j]);
  CHECK(tr.J == Approx(J).epsilon(1e-13));
}

TEST_CASE("factored difference matches the difference of totals") {
  S1 s;
  std::mt19937_64 rng(17);
  const SystemSpec spec = SystemSpec::uniform(2, 1.0, ReactionFamily{ReactionKind::cubic, 1.0});
  const StateField a = random_field(s.grid, s.data, rng);
  const StateField b = random_field(s.grid, s.data, rng);
  const double direct = functional_value(s.grid, spec, {0.1, 50.0}, b) - functional_value(s.grid, spec, {0.1, 50.0}, a);
  CHECK(functional_difference(s.grid, spec, {0.1, 50.0}, a.values, b.values) == Approx(direct).epsilon(1e-10));
  CHECK(functional_difference(s.grid, spec, {0.1, 50.0}, a.values, a.values) == 0.0);
}

TEST_CASE("energy identity residual of the time-constant field") {
  S1 s;
  const StateField u = default_init(s.grid, s.data, InitMode::competitor);
  const EnergyTrace tr = eval_J(s.grid, s.spec, u, 0.1, 10.0);
  const EnergyIdentityResidual r = energy_identity_residual(tr, s.grid);
  CHECK(r.relative <= 1e-10);
  CHECK(r.first_cell == 1);
  CHECK(r.last_cell == s.grid.cells() - 2);
}

TEST_CASE("energy identity fails away from minimizers") {
  S1 s;
  std::mt19937_64 rng(19);
  const StateField u = random_field(s.grid, s.data, rng);
  const EnergyIdentityResidual r = energy_identity_residual(eval_J(s.grid, s.spec, u, 0.1, 10.0), s.grid);
  CHECK(r.relative > 5e-2);
}

TEST_CASE("slice estimate examples") {
  S1 s;
  const StateField u = default_init(s.grid, s.data, InitMode::competitor);
  const double Jc = competitor_value(s.grid, s.spec, s.data, 0.1, 0.0);
  const SliceEstimateReport r = slice_estimates(eval_J(s.grid, s.spec, u, 0.1, 0.0), s.grid, 0.1,
                                                potential_bound(s.spec), 1.0, Jc);
  CHECK(r.lower == 0.0);
  CHECK(r.J <= 0.4);
  CHECK(r.ok());

  const SystemSpec cubic = SystemSpec::uniform(2, 1.0, ReactionFamily{ReactionKind::cubic, 1.0});
  CHECK(potential_bound(cubic) == Approx(1.0 / 3.0).epsilon(1e-15));
  const SliceEstimateReport rc = slice_estimates(eval_J(s.grid, cubic, u, 0.1, 0.0), s.grid, 0.1,
                                                 potential_bound(cubic), 1.0,
                                                 competitor_value(s.grid, cubic, s.data, 0.1, 0.0));
  CHECK(rc.lower == Approx(-0.1 / 3.0).epsilon(1e-15));

  const SpaceTimeGrid g = build_grid_1d(7, 1.0, 11, 20.0);
  const BoundaryData zero = make_boundary_data(g.space, Eigen::MatrixXd::Zero(g.space.size(), 2),
                                               BcMode::dirichlet_and_initial);
  const SliceEstimateReport rz = slice_estimates(eval_J(g, s.spec, make_field(g, 2), 0.1, 5.0), g, 0.1, 0.0,
                                                 1.0, competitor_value(g, s.spec, zero, 0.1, 5.0));
  CHECK(rz.J == 0.0);
  CHECK(rz.J_competitor == 0.0);
  CHECK(rz.ok());
}

TEST_CASE("estimates reject a field above the competitor level") {
  S1 s;
  std::mt19937_64 rng(23);
  const StateField u = random_field(s.grid, s.data, rng);
  const SliceEstimateReport r = slice_estimates(eval_J(s.grid, s.spec, u, 0.1, 10.0), s.grid, 0.1, 0.0, 1.0,
                                                competitor_value(s.grid, s.spec, s.data, 0.1, 10.0));
  CHECK_FALSE(r.level_ok);
}
