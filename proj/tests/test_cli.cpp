// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

// Drives the gridattn executable end to end through the shell.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "gridattn/panel.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("gridattn_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GRIDATTN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Two weeks of half-hourly load for three nodes, weekly periodic.
void write_load_csv(const fs::path& p) {
  std::ofstream out(p);
  out << "timestamp,node_id,load\n";
  const std::int64_t t0 = gridattn::parse_timestamp("2024-01-01 00:00");
  for (int node = 0; node < 3; ++node)
    for (int s = 0; s < 48 * 21; ++s) {
      const int day = (s / 48) % 7;
      out << gridattn::format_timestamp(t0 + 30 * s) << ",n" << node << ',' << 100 + 10 * node + day * 3 + (s % 48) << '\n';
    }
}

}  // namespace

TEST_CASE("gen-synthetic is deterministic") {
  const fs::path d = scratch_dir("gen");
  REQUIRE(run("gen-synthetic --kind explicit --n 5 --t 300 --seed 7 --out-dir " + (d / "a").string()) == 0);
  REQUIRE(run("gen-synthetic --kind explicit --n 5 --t 300 --seed 7 --out-dir " + (d / "b").string()) == 0);
  for (const char* f : {"panel.csv", "A1.csv", "A2.csv", "manifest.txt"}) {
    CHECK(fs::exists(d / "a" / f));
    CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
  }
  REQUIRE(run("gen-synthetic --kind explicit --n 5 --t 300 --seed 8 --out-dir " + (d / "c").string()) == 0);
  CHECK(slurp(d / "a" / "panel.csv") != slurp(d / "c" / "panel.csv"));
  fs::remove_all(d);
}

TEST_CASE("train is deterministic and reproducible from its manifest") {
  const fs::path d = scratch_dir("train");
  REQUIRE(run("gen-synthetic --kind single --n 4 --t 300 --seed 3 --out-dir " + d.string()) == 0);
  const std::string base = "train --data " + (d / "panel.csv").string() +
                           " --set kind=gat --set heads=1 --set hidden=4 --set graph=complete --set max_epochs=3 --seed 2";
  REQUIRE(run(base + " --out-dir " + (d / "r1").string()) == 0);
  REQUIRE(run(base + " --out-dir " + (d / "r2").string()) == 0);
  for (const char* f : {"model.json", "history.csv", "forecast.csv", "manifest.txt"})
    CHECK(slurp(d / "r1" / f) == slurp(d / "r2" / f));

  REQUIRE(run("train --data " + (d / "panel.csv").string() + " --config " + (d / "r1" / "manifest.txt").string() +
              " --out-dir " + (d / "r3").string()) == 0);
  CHECK(slurp(d / "r1" / "model.json") == slurp(d / "r3" / "model.json"));
  CHECK(slurp(d / "r1" / "forecast.csv") == slurp(d / "r3" / "forecast.csv"));

  REQUIRE(run("explain --model " + (d / "r1" / "model.json").string() + " --data " + (d / "panel.csv").string() +
              " --windows test --out-dir " + (d / "ex").string()) == 0);
  for (const char* f : {"trace.csv", "projection.csv", "purity.csv", "scatter_l0_h0.svg", "manifest.txt"})
    CHECK(fs::exists(d / "ex" / f));
  fs::remove_all(d);
}

TEST_CASE("evaluate on perfect forecasts, baselines and aggregation") {
  const fs::path d = scratch_dir("eval");
  const fs::path load = d / "load.csv";
  write_load_csv(load);
  REQUIRE(run("baseline --kind persist7 --data " + load.string() + " --out " + (d / "experts" / "p7.csv").string()) == 0);
  REQUIRE(run("baseline --kind persist1 --data " + load.string() + " --days 2024-01-08:2024-01-21 --out " +
              (d / "experts" / "p1.csv").string()) == 0);

  // Weekly-periodic data: D-7 persistence equals the truth.
  REQUIRE(run("evaluate --forecast " + (d / "experts" / "p7.csv").string() + " --out " + (d / "rep.csv").string()) == 0);
  const std::string rep = slurp(d / "rep.csv");
  CHECK(rep.find("mape,0,all") != std::string::npos);
  CHECK(rep.find("rmse,0,all") != std::string::npos);

  // The manifests next to the forecasts are skipped.
  for (const char* rule : {"uniform", "mlpoly"}) {
    const std::string args = std::string("aggregate --experts ") + (d / "experts").string() + " --rule " + rule + " --out ";
    REQUIRE(run(args + (d / "agg1.csv").string()) == 0);
    REQUIRE(run(args + (d / "agg2.csv").string()) == 0);
    CHECK(slurp(d / "agg1.csv") == slurp(d / "agg2.csv"));
    CHECK(slurp(d / "agg1.weights.csv") == slurp(d / "agg2.weights.csv"));
  }
  REQUIRE(run("aggregate --experts " + (d / "experts").string() + " --rule mlpoly --level bottom --out " +
              (d / "bottom.csv").string()) == 0);
  CHECK(fs::exists(d / "bottom.weights.n0.csv"));
  fs::remove_all(d);
}

TEST_CASE("exit codes") {
  const fs::path d = scratch_dir("codes");
  CHECK(run("--version") == 0);
  CHECK(run("") == 1);
  CHECK(run("evaluate --out x.csv") == 1);
  CHECK(run("evaluate --forecast " + (d / "missing.csv").string() + " --out " + (d / "r.csv").string()) == 1);
  CHECK(run("train --data x.csv --preset fr-mlp --out-dir " + d.string()) == 1);
  CHECK_FALSE(fs::exists(d / "r.csv"));

  // Zero national load makes the MAPE undefined: a numeric failure.
  {
    std::ofstream f(d / "zero.csv");
    f << "date,node_id,slot,y_true,y_pred\n2024-01-01,n0,0,0,1\n";
  }
  CHECK(run("evaluate --forecast " + (d / "zero.csv").string() + " --out " + (d / "r.csv").string()) == 2);

  // Diverging training is a numeric failure too.
  REQUIRE(run("gen-synthetic --kind single --n 3 --t 200 --seed 1 --out-dir " + d.string()) == 0);
  CHECK(run("train --data " + (d / "panel.csv").string() +
            " --set graph=complete --set lr=1e200 --set max_epochs=5 --out-dir " + (d / "t").string()) == 2);
  fs::remove_all(d);
}
