// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/config.hpp"
#include "segflow/io.hpp"
#include "segflow/pipeline.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace segflow;

struct Common {
  std::vector<std::string> configs;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool log_iters = false;
  int threads = 1;
};

void add_common(CLI::App& app, Common& c, bool many_configs) {
  auto* cfg = app.add_option("--config", c.configs, "Scenario config file")->required()->check(CLI::ExistingFile);
  if (!many_configs) cfg->expected(1);
  app.add_option("--out", c.out, "Output directory");
  app.add_option("--seed", c.seed, "Override scenario.seed");
  app.add_flag("--log-iters", c.log_iters, "Write per-iteration optimizer logs");
  app.add_option("--threads", c.threads, "Scenarios run concurrently")->check(CLI::PositiveNumber);
}

RunConfig load(const Common& c, const std::string& path) {
  RunConfig cfg = load_config(path);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.optimizer.seed = *c.seed;
  }
  return cfg;
}

int report_outcome(const RunReport& rep, std::ostream& out, std::ostream& err, const std::string& prefix) {
  for (const CheckResult& c : rep.checks)
    out << prefix << (c.pass ? "PASS " : "FAIL ") << c.name << (c.gated ? "" : " (not gated)") << ": " << c.detail
        << "\n";
  if (!rep.failed_stage.empty()) err << prefix << "numerical failure in stage " << rep.failed_stage << "\n";
  const auto failures = rep.failures();
  if (!failures.empty()) {
    err << prefix << "failed checks:";
    for (const std::string& f : failures) err << " " << f;
    err << "\n";
  }
  return rep.exit_code;
}

template <class Fn>
int guarded(std::ostream& err, const std::string& prefix, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << prefix << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << prefix << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << prefix << "invalid parameter: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << prefix << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

// Runs one config per task, at most `threads` at a time; returns the worst exit code.
int run_many(const Common& c) {
  std::mutex io;
  auto task = [&](const std::string& path) {
    std::ostringstream out, err;
    const std::string prefix = c.configs.size() > 1 ? "[" + path + "] " : "";
    const int code = guarded(err, prefix, [&] {
      const RunConfig cfg = load(c, path);
      RunOptions opt;
      opt.out_dir = c.configs.size() > 1 ? (std::filesystem::path(c.out) / cfg.name).string() : c.out;
      opt.log_iters = c.log_iters;
      if (c.configs.size() == 1) opt.progress = &std::cerr;
      const RunReport rep = cmd_run(cfg, opt);
      return report_outcome(rep, out, err, prefix);
    });
    std::lock_guard lock(io);
    std::cout << out.str();
    std::cerr << err.str();
    return code;
  };

  int worst = kExitPass;
  for (std::size_t start = 0; start < c.configs.size(); start += static_cast<std::size_t>(c.threads)) {
    std::vector<std::future<int>> batch;
    const std::size_t end = std::min(c.configs.size(), start + static_cast<std::size_t>(c.threads));
    for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, task, c.configs[i]));
    for (auto& f : batch) worst = std::max(worst, f.get());
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time variational solver for segregating competition systems"};
  app.require_subcommand(1);

  Common run_opts, min_opts, orc_opts, ell_opts, chk_opts;
  double eps = 0.1, beta = 10.0, oracle_beta = 10.0, chk_eps = 0.1, chk_beta = 0.0;
  std::string field, report_dir;

  auto* run = app.add_subcommand("run", "Full pipeline: ladders, diagnostics, oracle, elliptic");
  add_common(*run, run_opts, true);
  run->get_option("--out")->required();

  auto* mini = app.add_subcommand("minimize", "Single minimisation at (eps, beta)");
  add_common(*mini, min_opts, false);
  mini->add_option("--eps", eps, "Regularisation parameter")->required();
  mini->add_option("--beta", beta, "Competition strength")->required();

  auto* orc = app.add_subcommand("oracle", "Parabolic run and heat benchmark");
  add_common(*orc, orc_opts, false);
  auto* orc_beta = orc->add_option("--beta", oracle_beta, "Competition strength (default oracle.beta)");

  auto* ell = app.add_subcommand("elliptic", "Elliptic equivalence and elliptic beta ladder");
  add_common(*ell, ell_opts, false);

  auto* chk = app.add_subcommand("check", "Diagnostics on a stored field CSV");
  add_common(*chk, chk_opts, false);
  chk->add_option("--field", field, "Field CSV")->required()->check(CLI::ExistingFile);
  chk->add_option("--eps", chk_eps, "Regularisation parameter of the field");
  chk->add_option("--beta", chk_beta, "Competition strength of the field");

  auto* rep = app.add_subcommand("report", "Tables regenerated from an output directory");
  rep->add_option("dir", report_dir, "Output directory of a previous command")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  auto single = [&](const Common& c, auto&& body) {
    return guarded(std::cerr, "", [&] {
      const RunConfig cfg = load(c, c.configs.front());
      RunOptions opt;
      opt.out_dir = c.out;
      opt.log_iters = c.log_iters;
      opt.progress = &std::cerr;
      return report_outcome(body(cfg, opt), std::cout, std::cerr, "");
    });
  };

  if (*run) return run_many(run_opts);
  if (*mini) return single(min_opts, [&](const RunConfig& cfg, const RunOptions& o) { return cmd_minimize(cfg, eps, beta, o); });
  if (*orc)
    return single(orc_opts, [&](const RunConfig& cfg, const RunOptions& o) {
      return cmd_oracle(cfg, orc_beta->count() ? oracle_beta : cfg.oracle.beta, o);
    });
  if (*ell) return single(ell_opts, [&](const RunConfig& cfg, const RunOptions& o) { return cmd_elliptic(cfg, o); });
  if (*chk)
    return single(chk_opts, [&](const RunConfig& cfg, const RunOptions& o) {
      return cmd_check(cfg, field, chk_eps, chk_beta, o);
    });
  return cmd_report(report_dir, std::cout, std::cerr);
}
