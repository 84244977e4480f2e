// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace segflow {

std::string to_string(ReactionKind kind) {
  return kind == ReactionKind::zero ? "zero" : "cubic";
}

ReactionKind parse_reaction_kind(const std::string& name) {
  if (name == "zero") return ReactionKind::zero;
  if (name == "cubic") return ReactionKind::cubic;
  throw std::invalid_argument("unknown reaction family '" + name + "' (expected zero|cubic)");
}

std::pair<double, double> eval_reaction(const ReactionFamily& family, double s) {
  return {family.f(s), family.F(s)};
}

SystemSpec SystemSpec::uniform(int k, double a, ReactionFamily reaction) {
  SystemSpec spec;
  spec.k = k;
  spec.A = Eigen::MatrixXd::Constant(k, k, a);
  spec.A.diagonal().setZero();
  spec.reactions.assign(static_cast<std::size_t>(k), reaction);
  return spec;
}

double potential_bound(const SystemSpec& spec) {
  double sum = 0.0;
  for (const auto& r : spec.reactions) sum += r.max_potential();
  return 2.0 * sum;
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].field << ": " << violations[i].message;
  }
  return os.str();
}

namespace {

std::string entry(int i, int j) {
  return "system.A[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

}  // namespace

ValidationReport validate_system(const SystemSpec& spec) {
  ValidationReport report;
  auto& v = report.violations;
  if (spec.k < 2) v.push_back({"system.k", "species count k = " + std::to_string(spec.k) + " < 2"});
  if (spec.A.rows() != spec.k || spec.A.cols() != spec.k) {
    v.push_back({"system.A", "matrix is " + std::to_string(spec.A.rows()) + "x" +
                                 std::to_string(spec.A.cols()) + ", expected " +
                                 std::to_string(spec.k) + "x" + std::to_string(spec.k)});
    return report;
  }
  if (static_cast<int>(spec.reactions.size()) != spec.k)
    v.push_back({"system.reaction", "expected " + std::to_string(spec.k) + " reaction entries"});
  for (int i = 0; i < spec.k; ++i) {
    const std::string ii = std::to_string(i + 1);
    if (spec.A(i, i) != 0.0) v.push_back({entry(i, i), "a_" + ii + ii + " != 0"});
    for (int j = 0; j < spec.k; ++j) {
      if (i == j) continue;
      const std::string ij = ii + std::to_string(j + 1);
      if (!(spec.A(i, j) > 0.0)) v.push_back({entry(i, j), "a_" + ij + " <= 0"});
      if (j > i && spec.A(i, j) != spec.A(j, i))
        v.push_back({entry(i, j), "A not symmetric: a_" + ij + " != a_" + std::to_string(j + 1) + ii});
    }
  }
  for (std::size_t i = 0; i < spec.reactions.size(); ++i) {
    if (!(spec.reactions[i].lambda >= 0.0) || !std::isfinite(spec.reactions[i].lambda))
      v.push_back({"system.lambda[" + std::to_string(i) + "]", "reaction strength must be >= 0"});
  }
  return report;
}

std::string to_string(BcMode mode) {
  switch (mode) {
    case BcMode::dirichlet_and_initial: return "dirichlet_and_initial";
    case BcMode::initial_only: return "initial_only";
    case BcMode::dirichlet_only: return "dirichlet_only";
  }
  return "?";
}

BcMode parse_bc_mode(const std::string& name) {
  if (name == "dirichlet_and_initial") return BcMode::dirichlet_and_initial;
  if (name == "initial_only") return BcMode::initial_only;
  if (name == "dirichlet_only") return BcMode::dirichlet_only;
  throw std::invalid_argument("unknown bc_mode '" + name +
                              "' (expected dirichlet_and_initial|initial_only|dirichlet_only)");
}

BoundaryData make_boundary_data(const SpatialGrid& space, Eigen::MatrixXd v0, BcMode mode) {
  if (v0.rows() != space.size())
    throw std::invalid_argument("profile has " + std::to_string(v0.rows()) + " nodes, grid has " +
                                std::to_string(space.size()));
  v0 = (v0.array().abs() < 1e-14).select(0.0, v0);
  BoundaryData data;
  data.mode = mode;
  for (Index s = 0; s < space.size(); ++s)
    if (space.boundary[static_cast<std::size_t>(s)]) data.boundary_nodes.push_back(s);
  data.g0.resize(static_cast<Index>(data.boundary_nodes.size()), v0.cols());
  for (std::size_t b = 0; b < data.boundary_nodes.size(); ++b)
    data.g0.row(static_cast<Index>(b)) = v0.row(data.boundary_nodes[b]);
  data.v0 = std::move(v0);
  return data;
}

ValidationReport validate_boundary(const BoundaryData& data, const SystemSpec& spec) {
  if (data.k() != spec.k)
    throw std::invalid_argument("boundary data has " + std::to_string(data.k()) +
                                " components, system has k = " + std::to_string(spec.k));
  ValidationReport report;
  const auto& v0 = data.v0;
  if ((v0.array() < 0.0).any() || (v0.array() > 1.0).any() || !v0.allFinite())
    report.violations.push_back({"boundary.v0", "bound 0<=v0<=1 fails"});
  for (int i = 0; i < v0.cols(); ++i)
    for (int j = i + 1; j < v0.cols(); ++j)
      if (((v0.col(i).array() * v0.col(j).array()) != 0.0).any())
        report.violations.push_back({"boundary.v0", "segregation fails for species " +
                                                        std::to_string(i + 1) + " and " +
                                                        std::to_string(j + 1)});
  return report;
}

ProfilePreset parse_profile_preset(const std::string& name) {
  if (name == "two_ramp") return ProfilePreset::two_ramp;
  if (name == "k_blocks") return ProfilePreset::k_blocks;
  if (name == "zero") return ProfilePreset::zero;
  throw std::invalid_argument("unknown profile preset '" + name + "' (expected two_ramp|k_blocks|zero|csv)");
}

std::string to_string(ProfilePreset preset) {
  switch (preset) {
    case ProfilePreset::two_ramp: return "two_ramp";
    case ProfilePreset::k_blocks: return "k_blocks";
    case ProfilePreset::zero: return "zero";
  }
  return "?";
}

Eigen::MatrixXd preset_profile(const SpatialGrid& space, ProfilePreset preset, int k) {
  Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(space.size(), k);
  const Eigen::VectorXd x = space.coords.col(0) / space.Lx;
  switch (preset) {
    case ProfilePreset::zero:
      break;
    case ProfilePreset::two_ramp:
      if (k != 2) throw std::invalid_argument("two_ramp preset requires k = 2");
      v0.col(0) = (1.0 - 2.0 * x.array()).max(0.0);
      v0.col(1) = (2.0 * x.array() - 1.0).max(0.0);
      break;
    case ProfilePreset::k_blocks:
      for (Index s = 0; s < space.size(); ++s) {
        const double xs = x[s] * k;
        const int block = std::min(static_cast<int>(std::floor(xs)), k - 1);
        const double local = xs - block;
        v0(s, block) = std::sin(std::numbers::pi * local);
      }
      break;
  }
  return v0;
}

}  // namespace segflow
