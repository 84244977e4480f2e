// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/config.hpp"
#include "segflow/grid.hpp"
#include "segflow/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace segflow {

/// Exit codes shared by every command.
inline constexpr int kExitPass = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

struct Scenario {
  SpaceTimeGrid grid;
  BoundaryData data;
};

/// Grid and boundary data of a validated config. Boundary problems are
/// reported as ConfigError addressed to the boundary section.
Scenario build_scenario(const RunConfig& config);

struct RunOptions {
  std::string out_dir;           ///< created when missing
  bool log_iters = false;        ///< per-iteration CSV logs for every minimisation
  std::ostream* progress = nullptr;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  bool gated = true;             ///< counts towards the exit code
  std::string detail;
};

struct RunReport {
  int exit_code = kExitPass;
  std::string failed_stage;      ///< set on numerical failure of a stage
  std::vector<CheckResult> checks;

  /// Names of gated checks that failed.
  std::vector<std::string> failures() const;
};

/// Full pipeline: eps/beta ladders, diagnostics, oracle comparisons, elliptic
/// pipeline. Writes summary.json, config.resolved.cfg and CSV tables.
RunReport cmd_run(const RunConfig& config, const RunOptions& options);

/// One minimisation at (eps, beta) with its slice diagnostics.
RunReport cmd_minimize(const RunConfig& config, double eps, double beta, const RunOptions& options);

/// Parabolic run at beta up to the comparison horizon, plus the heat benchmark.
RunReport cmd_oracle(const RunConfig& config, double beta, const RunOptions& options);

/// Elliptic equivalence and elliptic beta ladder.
RunReport cmd_elliptic(const RunConfig& config, const RunOptions& options);

/// Diagnostics on a stored field CSV: a rescaled space-time field (nt levels)
/// at (eps, beta), or a single stationary slice.
RunReport cmd_check(const RunConfig& config, const std::string& field_csv, double eps, double beta,
                    const RunOptions& options);

/// Tables regenerated from the CSVs of an output directory, as aligned text on
/// `out` and as report_*.csv in the directory. Returns kExitConfig when no
/// table can be built or an input is corrupt.
int cmd_report(const std::string& dir, std::ostream& out, std::ostream& err);

/// Files cmd_report reads.
const std::vector<std::string>& report_inputs();

}  // namespace segflow
