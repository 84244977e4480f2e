// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/config.hpp"
#include "segflow/io.hpp"
#include "segflow/pipeline.hpp"

#include <catch_amalgamated.hpp>

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace segflow;
using Catch::Matchers::ContainsSubstring;

namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "[scenario]\nname = small\nseed = 3\n"
    "[grid]\nnx = 15\nnt = 41\nT_r = 20\n"
    "[ladder]\nbetas = 10, 100\nepsilons = 0.2, 0.1\n"
    "[oracle]\ndtau = 1e-3\n"
    "[elliptic]\nbetas = 10, 100\n"
    "[diagnostics]\ngates = convergence, segregation, energy_identity\n";

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("segflow_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + SEGFLOW_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  write_text(p.string(), text);
  return p;
}

}  // namespace

TEST_CASE("config error exits with code 2 and names the field") {
  const fs::path dir = scratch_dir("a11");
  const fs::path cfg = write_config(dir, "bad.cfg", "[system]\nk = 2\nA = 1, 1; 1, 0\n");
  const Outcome o = cli("run --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  CHECK(o.code == kExitConfig);
  CHECK_THAT(o.err, ContainsSubstring("system.A[0][0]"));
  fs::remove_all(dir);
}

TEST_CASE("syntax errors exit with code 2 and a line number") {
  const fs::path dir = scratch_dir("syntax");
  const fs::path cfg = write_config(dir, "bad.cfg", "[grid]\nnx = 15\nwidth = 3\n");
  const Outcome o = cli("minimize --config " + cfg.string() + " --eps 0.1 --beta 10", dir);
  CHECK(o.code == kExitConfig);
  CHECK_THAT(o.err, ContainsSubstring(":3:"));
  CHECK_THAT(o.err, ContainsSubstring("grid.width"));
  const Outcome missing = cli("run --out " + dir.string(), dir);
  CHECK(missing.code == kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("forced non-convergence exits with code 1 and names the stage") {
  const fs::path dir = scratch_dir("maxiter");
  const fs::path cfg = write_config(dir, "s.cfg", std::string(kSmall) + "[optimizer]\nmax_iters = 1\n");
  const Outcome o = cli("run --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  CHECK(o.code == kExitNumerical);
  CHECK_THAT(o.err, ContainsSubstring("minimize(ε=0.2, β=10)"));
  const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(summary["failed_stage"] == "minimize(ε=0.2, β=10)");
  CHECK(summary["exit_code"] == 1);
  fs::remove_all(dir);
}

TEST_CASE("full run on a small scenario, report and determinism") {
  const fs::path dir = scratch_dir("run");
  const fs::path cfg = write_config(dir, "s.cfg", kSmall);
  const Outcome a = cli("run --config " + cfg.string() + " --out " + (dir / "a").string(), dir);
  INFO(a.err);
  CHECK(a.code == kExitPass);
  CHECK_THAT(a.out, ContainsSubstring("PASS convergence"));
  for (const char* f : {"summary.json", "config.resolved.cfg", "ladder.csv", "overlap_decay.csv", "cauchy.csv",
                        "inequalities.csv", "discrepancy.csv", "uniform_estimates.csv", "fields/w_original.csv"})
    CHECK(fs::exists(dir / "a" / f));

  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["scenario"] == "small");
  CHECK(summary["rungs"].size() == 4);
  CHECK(summary["exit_code"] == 0);

  // The resolved config reproduces the run.
  CHECK(render_config(load_config((dir / "a" / "config.resolved.cfg").string())) ==
        slurp(dir / "a" / "config.resolved.cfg"));

  const Outcome b = cli("run --config " + cfg.string() + " --out " + (dir / "b").string(), dir);
  CHECK(b.code == a.code);
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));

  const Outcome rep = cli("report " + (dir / "a").string(), dir);
  CHECK(rep.code == kExitPass);
  CHECK_THAT(rep.out, !ContainsSubstring("absent"));
  for (const char* f : {"report_level_estimate.csv", "report_uniform_constants.csv", "report_overlap_decay.csv",
                        "report_inequality_residuals.csv", "report_oracle_discrepancy.csv"}) {
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK_FALSE(read_csv((dir / "a" / f).string()).rows.empty());
  }
  fs::remove_all(dir);
}

TEST_CASE("seed override changes only the seed-dependent outputs") {
  const fs::path dir = scratch_dir("seed");
  const fs::path cfg =
      write_config(dir, "s.cfg", std::string(kSmall) + "[optimizer]\ninit = random\n");
  const Outcome a = cli("minimize --config " + cfg.string() + " --eps 0.1 --beta 10 --seed 5 --out " +
                            (dir / "a").string(),
                        dir);
  const Outcome b = cli("minimize --config " + cfg.string() + " --eps 0.1 --beta 10 --seed 5 --out " +
                            (dir / "b").string(),
                        dir);
  CHECK(a.code == kExitPass);
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  CHECK(nlohmann::json::parse(slurp(dir / "a" / "summary.json"))["seed"] == 5);
  fs::remove_all(dir);
}

TEST_CASE("report on a single minimisation marks the other tables absent") {
  const fs::path dir = scratch_dir("mini");
  const fs::path cfg = write_config(dir, "s.cfg", kSmall);
  const Outcome m = cli("minimize --config " + cfg.string() + " --eps 0.1 --beta 10 --log-iters --out " +
                            (dir / "m").string(),
                        dir);
  CHECK(m.code == kExitPass);
  CHECK(fs::exists(dir / "m" / "ladder.csv"));
  const Outcome rep = cli("report " + (dir / "m").string(), dir);
  CHECK(rep.code == kExitPass);
  CHECK_THAT(rep.out, ContainsSubstring("absent"));
  CHECK_THAT(rep.out, ContainsSubstring("Level estimate"));
  CHECK_THAT(rep.out, ContainsSubstring("overlap_decay.csv not found"));
  fs::remove_all(dir);
}

TEST_CASE("report on an empty directory lists the expected files") {
  const fs::path dir = scratch_dir("empty");
  fs::create_directories(dir / "nothing");
  const Outcome rep = cli("report " + (dir / "nothing").string(), dir);
  CHECK(rep.code == kExitConfig);
  for (const std::string& f : report_inputs()) CHECK_THAT(rep.err, ContainsSubstring(f));
  fs::remove_all(dir);
}

TEST_CASE("report on a corrupt table names the file") {
  const fs::path dir = scratch_dir("corrupt");
  fs::create_directories(dir / "c");
  write_text((dir / "c" / "ladder.csv").string(), "eps,beta,J\n0.1,oops\n");
  const Outcome rep = cli("report " + (dir / "c").string(), dir);
  CHECK(rep.code == kExitConfig);
  CHECK_THAT(rep.err, ContainsSubstring("ladder.csv"));
  fs::remove_all(dir);
}

TEST_CASE("oracle, elliptic and check subcommands") {
  const fs::path dir = scratch_dir("subcommands");
  const fs::path cfg = write_config(dir, "s.cfg", kSmall);
  const Outcome o = cli("oracle --config " + cfg.string() + " --out " + (dir / "o").string(), dir);
  CHECK((o.code == kExitPass || o.code == kExitNumerical));
  CHECK_THAT(o.out, ContainsSubstring("oracle_calibration"));
  CHECK(fs::exists(dir / "o" / "summary.json"));

  const Outcome e = cli("elliptic --config " + cfg.string() + " --out " + (dir / "e").string(), dir);
  CHECK((e.code == kExitPass || e.code == kExitNumerical));
  CHECK_THAT(e.out, ContainsSubstring("elliptic_equivalence"));
  REQUIRE(fs::exists(dir / "e" / "fields" / "elliptic_limit.csv"));

  const Outcome c = cli("check --config " + cfg.string() + " --field " +
                            (dir / "e" / "fields" / "elliptic_limit.csv").string() + " --out " + (dir / "c").string(),
                        dir);
  CHECK((c.code == kExitPass || c.code == kExitNumerical));
  CHECK_THAT(c.out, ContainsSubstring("weak_inequalities"));
  fs::remove_all(dir);
}

TEST_CASE("several scenarios run concurrently into named subdirectories") {
  const fs::path dir = scratch_dir("threads");
  std::string second = kSmall;
  second.replace(second.find("name = small"), 12, "name = other");
  const fs::path c1 = write_config(dir, "one.cfg", kSmall);
  const fs::path c2 = write_config(dir, "two.cfg", second);
  const Outcome o = cli("run --config " + c1.string() + " --config " + c2.string() + " --threads 2 --out " +
                            (dir / "out").string(),
                        dir);
  CHECK(o.code == kExitPass);
  CHECK(fs::exists(dir / "out" / "small" / "summary.json"));
  CHECK(fs::exists(dir / "out" / "other" / "summary.json"));
  CHECK(slurp(dir / "out" / "small" / "summary.json").size() > 0);
  fs::remove_all(dir);
}
