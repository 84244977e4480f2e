// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/continuation.hpp"
#include "segflow/diagnostics.hpp"
#include "segflow/model.hpp"
#include "segflow/optimizer.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace segflow {

/// Configuration problem tied to a "section.key" address and, when known, a
/// line of the source file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, int line = 0);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct BoundaryConfig {
  std::string preset = "two_ramp";  ///< two_ramp | k_blocks | zero, ignored when csv is set
  std::string csv;                  ///< columns x[,y],v_1..v_k on the grid nodes
  BcMode mode = BcMode::dirichlet_and_initial;
};

struct GridConfig {
  int dim = 1;
  int nx = 63;
  int ny = 0;
  double Lx = 1.0;
  double Ly = 1.0;
  int nt = 201;
  double T_r = 20.0;
  double tail_tol = 1e-8;
};

struct DiagnosticsConfig {
  LatticeSpec lattice;
  double c_w = 0.5;
  double energy_tol = 5e-2;
  std::vector<double> window_tau{0.0, 1.0, 2.0};  ///< multiples of eps
  std::vector<double> window_T{1.0, 2.0, 4.0};    ///< multiples of eps
  double uniformity_ratio = 3.0;
  double overlap_decay = 1e-2;
  double cauchy_slack = 1.1;
  std::vector<std::string> gates;                 ///< empty = every check gates the exit code
};

struct OracleConfig {
  bool enabled = true;
  double beta = 10.0;
  double dtau = 2.5e-4;
  double theta = 0.5;
  double discrepancy_slack = 1.1;
};

struct EllipticConfig {
  bool enabled = true;
  double eps = 0.1;
  double beta = 100.0;
  std::vector<double> betas{10.0, 100.0, 1000.0, 10000.0};
  double tol = 5e-3;
};

struct RunConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  SystemSpec system = SystemSpec::uniform(2, 1.0);
  BoundaryConfig boundary;
  GridConfig grid;
  LadderSpec ladder;
  OptimizerConfig optimizer;
  DiagnosticsConfig diagnostics;
  OracleConfig oracle;
  EllipticConfig elliptic;
};

/// Every check name accepted by diagnostics.gates.
const std::vector<std::string>& known_gates();

/// Parses and validates. Omitted keys keep their defaults. `origin` prefixes
/// messages (usually the file path). Relative boundary.csv paths are resolved
/// against base_dir.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>",
                       const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Fully resolved configuration in the same format; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

}  // namespace segflow
