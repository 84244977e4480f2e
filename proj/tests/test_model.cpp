// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/grid.hpp"
#include "segflow/model.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace segflow;
using Catch::Approx;

namespace {

bool has_violation(const ValidationReport& r, const std::string& needle) {
  for (const Violation& v : r.violations)
    if (v.message.find(needle) != std::string::npos || v.field.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_system accepts the canonical two-species matrix") {
  CHECK(validate_system(SystemSpec::uniform(2, 1.0)).ok());
}

TEST_CASE("validate_system names a nonzero diagonal entry") {
  SystemSpec s = SystemSpec::uniform(2, 1.0);
  s.A(0, 0) = 0.5;
  const ValidationReport r = validate_system(s);
  REQUIRE_FALSE(r.ok());
  CHECK(has_violation(r, "a_11"));
  CHECK(r.violations.front().field == "system.A[0][0]");
}

TEST_CASE("validate_system names a nonpositive off-diagonal entry") {
  SystemSpec s = SystemSpec::uniform(3, 1.0);
  s.A(0, 2) = s.A(2, 0) = -1.0;
  const ValidationReport r = validate_system(s);
  REQUIRE_FALSE(r.ok());
  CHECK(has_violation(r, "a_13"));
}

TEST_CASE("validate_system rejects an asymmetric matrix") {
  SystemSpec s = SystemSpec::uniform(2, 1.0);
  s.A(0, 1) = 2.0;
  CHECK_FALSE(validate_system(s).ok());
}

TEST_CASE("cubic reaction values") {
  const ReactionFamily cubic{ReactionKind::cubic, 1.0};
  auto [f0, F0] = eval_reaction(cubic, 0.0);
  CHECK(f0 == 0.0);
  CHECK(F0 == 0.0);
  auto [f1, F1] = eval_reaction(cubic, 1.0);
  CHECK(f1 == Approx(0.0).margin(1e-15));
  CHECK(F1 == Approx(1.0 / 3.0 - 1.0 / 4.0).epsilon(1e-14));
  auto [fh, Fh] = eval_reaction(cubic, 0.5);
  CHECK(fh == Approx(0.5 * 0.5 * 0.5).epsilon(1e-14));
  CHECK(Fh == Approx(0.125 / 3.0 - 0.0625 / 4.0).epsilon(1e-14));
  CHECK(cubic.max_potential() == Approx(1.0 / 12.0));
}

TEST_CASE("F' = f by central differences for every family") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double h = 1e-5;
  for (const ReactionFamily fam : {ReactionFamily{ReactionKind::zero, 1.0}, ReactionFamily{ReactionKind::cubic, 1.0},
                                   ReactionFamily{ReactionKind::cubic, 2.5}}) {
    for (int n = 0; n < 200; ++n) {
      const double s = u(rng);
      const double fd = (fam.F(s + h) - fam.F(s - h)) / (2.0 * h);
      CHECK(std::abs(fd - fam.f(s)) <= 1e-6);
    }
  }
}

TEST_CASE("cubic family is nonnegative with nondecreasing potential on [0,1]") {
  const ReactionFamily cubic{ReactionKind::cubic, 1.0};
  double prev = cubic.F(0.0);
  for (int n = 0; n <= 1000; ++n) {
    const double s = n / 1000.0;
    CHECK(cubic.f(s) >= 0.0);
    CHECK(cubic.F(s) >= prev - 1e-18);
    prev = cubic.F(s);
  }
}

TEST_CASE("factored potential difference matches the direct difference") {
  const ReactionFamily cubic{ReactionKind::cubic, 1.7};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 100; ++n) {
    const double a = u(rng), b = u(rng);
    CHECK(cubic.F_difference(a, b) == Approx(cubic.F(a) - cubic.F(b)).margin(1e-14));
  }
}

TEST_CASE("potential bound sums twice the maxima") {
  CHECK(potential_bound(SystemSpec::uniform(2, 1.0)) == 0.0);
  CHECK(potential_bound(SystemSpec::uniform(2, 1.0, {ReactionKind::cubic, 1.0})) == Approx(1.0 / 3.0));
}

TEST_CASE("validate_boundary on ramps, constants and out-of-range data") {
  const SpatialGrid space = make_spatial_grid(1, 63, 0, 1.0, 0.0);
  const SystemSpec spec = SystemSpec::uniform(2, 1.0);
  CHECK(validate_boundary(make_boundary_data(space, preset_profile(space, ProfilePreset::two_ramp, 2),
                                             BcMode::dirichlet_and_initial),
                          spec)
            .ok());

  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(space.size(), 2);
  const ValidationReport seg = validate_boundary(make_boundary_data(space, ones, BcMode::dirichlet_and_initial), spec);
  CHECK(has_violation(seg, "segregation fails"));

  Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(space.size(), 2);
  for (Index s = 0; s < space.size(); ++s) v0(s, 0) = 1.5 * space.coords(s, 0);
  const ValidationReport bound = validate_boundary(make_boundary_data(space, v0, BcMode::dirichlet_and_initial), spec);
  CHECK(has_violation(bound, "bound"));

  CHECK_THROWS_AS(validate_boundary(make_boundary_data(space, ones, BcMode::dirichlet_and_initial),
                                    SystemSpec::uniform(3, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("validate_boundary accepts random disjoint-support profiles") {
  const SpatialGrid space = make_spatial_grid(1, 40, 0, 1.0, 0.0);
  const SystemSpec spec = SystemSpec::uniform(3, 1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(-1, 2);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(space.size(), 3);
    for (Index s = 0; s < space.size(); ++s) {
      const int c = pick(rng);
      if (c >= 0) v0(s, c) = u(rng);
    }
    CHECK(validate_boundary(make_boundary_data(space, v0, BcMode::dirichlet_and_initial), spec).ok());
  }
}

TEST_CASE("tiny boundary values are zeroed before validation") {
  const SpatialGrid space = make_spatial_grid(1, 7, 0, 1.0, 0.0);
  Eigen::MatrixXd v0 = preset_profile(space, ProfilePreset::two_ramp, 2);
  v0(0, 1) = 1e-15;
  const BoundaryData d = make_boundary_data(space, v0, BcMode::dirichlet_and_initial);
  CHECK(d.v0(0, 1) == 0.0);
  CHECK(validate_boundary(d, SystemSpec::uniform(2, 1.0)).ok());
}

TEST_CASE("name round trips") {
  for (BcMode m : {BcMode::dirichlet_and_initial, BcMode::initial_only, BcMode::dirichlet_only})
    CHECK(parse_bc_mode(to_string(m)) == m);
  for (ReactionKind k : {ReactionKind::zero, ReactionKind::cubic}) CHECK(parse_reaction_kind(to_string(k)) == k);
  for (ProfilePreset p : {ProfilePreset::two_ramp, ProfilePreset::k_blocks, ProfilePreset::zero})
    CHECK(parse_profile_preset(to_string(p)) == p);
  CHECK_THROWS_AS(parse_bc_mode("nope"), std::invalid_argument);
}

TEST_CASE("k_blocks preset is segregated and bounded") {
  const SpatialGrid space = make_spatial_grid(1, 59, 0, 1.0, 0.0);
  const Eigen::MatrixXd v0 = preset_profile(space, ProfilePreset::k_blocks, 3);
  CHECK(validate_boundary(make_boundary_data(space, v0, BcMode::dirichlet_and_initial), SystemSpec::uniform(3, 1.0)).ok());
  CHECK(v0.maxCoeff() <= 1.0);
}
