#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "run_command.hpp"

using brw::testing::cli;
using brw::testing::fixture;
using brw::testing::run_command;

namespace {

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kBlue = "1,0.17741002251547466";

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_command(cli() + " --help").status == 0);
  CHECK(run_command(cli() + " simulate --help").status == 0);
  CHECK(run_command(cli()).status == 2);
  CHECK(run_command(cli() + " frobnicate").status == 2);
  CHECK(run_command(cli() + " classify --no-such-flag 1").status == 2);
  CHECK(run_command(cli() + " classify --lambda abc").status == 2);
  CHECK(run_command(cli() + " --format pgm simulate --lambda 0.3,0.4").status == 2);
}

TEST_CASE("invalid configuration exits with code 2") {
  for (const char* f : {"invalid_unknown_key.toml", "invalid_syntax.toml", "invalid_type.toml"}) {
    CAPTURE(f);
    CHECK(run_command(cli() + " --config " + fixture(f) + " classify --lambda 0.3,0.4").status == 2);
  }
  CHECK(run_command(cli() + " --config /nonexistent/brw.toml classify --lambda 0.3,0.4").status == 2);
  // A table model without rows is a configuration problem too.
  CHECK(run_command(cli() + " --model table classify --lambda 0.3,0.4").status == 2);
  CHECK(run_command(cli() + " --model cauchy classify --lambda 0.3,0.4").status == 2);
}

TEST_CASE("runtime failures exit with code 1") {
  CHECK(run_command(cli() + " --out /nonexistent/dir/out.csv classify --lambda 0.3,0.4").status == 1);
  CHECK(run_command(cli() + " diagnose --traces /nonexistent/traces.ndjson").status == 1);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  const std::string cfg = " --config " + fixture("simulate_blue.toml");
  const std::string small = " --gens 2 --reps 3";

  const auto from_cfg = run_command(cli() + cfg + " simulate" + small);
  const auto flag_seed = run_command(cli() + cfg + " --seed 7 simulate" + small);
  const auto bare_seed1 = run_command(cli() + " --seed 1 simulate --lambda " + kBlue + small);
  const auto bare_seed7 = run_command(cli() + " --seed 7 simulate --lambda " + kBlue + small);
  const auto bare_default = run_command(cli() + " simulate --lambda " + kBlue + small);
  REQUIRE(from_cfg.status == 0);
  REQUIRE(flag_seed.status == 0);
  CHECK(from_cfg.out == bare_seed1.out);  // seed = 1 in the file
  CHECK(flag_seed.out == bare_seed7.out);
  CHECK(flag_seed.out != from_cfg.out);
  CHECK(bare_default.out == bare_seed1.out);  // default seed is 1

  // gens/reps flags beat the file's 18/200.
  CHECK(lines(from_cfg.out) == 3u * 3u);
  // The file's gens apply when no flag is given.
  const auto cfg_gens = run_command(cli() + cfg + " simulate --reps 1");
  CHECK(lines(cfg_gens.out) == 19u);

  // Table model from the file, with its classify list and seed.
  const auto table = run_command(cli() + " --config " + fixture("table_model.toml") + " classify");
  REQUIRE(table.status == 0);
  CHECK(lines(table.out) == 2u);
  const auto sim = run_command(cli() + " --config " + fixture("table_model.toml") + " simulate");
  CHECK(lines(sim.out) == 50u * 4u);
  CHECK(sim.out == run_command(cli() + " --config " + fixture("table_model.toml") + " --seed 3 simulate").out);
  CHECK(sim.out != run_command(cli() + " --config " + fixture("table_model.toml") + " --seed 4 simulate").out);
}

TEST_CASE("--strict maps an Indeterminate-only result to exit code 3") {
  const std::string traces = "brw_cli_strict_traces.ndjson";
  REQUIRE(run_command(cli() + " --seed 1 --out " + traces +
                      " simulate --lambda 0.3,0.4 --gens 14 --reps 150")
              .status == 0);
  const auto plain = run_command(cli() + " diagnose --traces " + traces);
  REQUIRE(plain.status == 0);
  const auto report = nlohmann::json::parse(plain.out);
  INFO(plain.out);
  if (report["verdict"] == "Indeterminate") {
    CHECK(run_command(cli() + " --strict diagnose --traces " + traces).status == 3);
  } else {
    CHECK(run_command(cli() + " --strict diagnose --traces " + traces).status == 0);
  }
  CHECK(report["verdict"] == "Indeterminate");
  // A definite verdict is never remapped.
  CHECK(run_command(cli() + " --strict classify --lambda 0.3,0.4").status == 0);
  std::remove(traces.c_str());
}

TEST_CASE("phase output formats") {
  const auto csv = run_command(cli() + " phase --resolution 9x7");
  REQUIRE(csv.status == 0);
  CHECK(lines(csv.out) == 9u * 7u + 1u);
  CHECK(csv.out.rfind("theta,eta,tag,alpha,derivative\n", 0) == 0);

  const auto pgm = run_command(cli() + " --format pgm phase --resolution 9x7");
  CHECK(pgm.out.rfind("P5\n9 7\n255\n", 0) == 0);
  CHECK(pgm.out.size() == std::string("P5\n9 7\n255\n").size() + 63);

  const auto svg = run_command(cli() + " --format svg phase --resolution 9x7");
  CHECK(svg.out.find("<svg") != std::string::npos);
  CHECK(svg.out.find("class=\"arc\"") != std::string::npos);

  const auto lat = run_command(cli() + " --config " + fixture("lattice_phase.toml") +
                               " phase --resolution 11x11");
  CHECK(lat.status == 0);
  CHECK(lines(lat.out) == 122u);

  CHECK(run_command(cli() + " phase --resolution 1x5").status == 2);
  CHECK(run_command(cli() + " phase --theta-range 1,-1").status == 2);
}

TEST_CASE("--out writes the same bytes as stdout") {
  const std::string path = "brw_cli_out.csv";
  const auto direct = run_command(cli() + " phase --resolution 13x5");
  REQUIRE(run_command(cli() + " --out " + path + " phase --resolution 13x5").status == 0);
  CHECK(slurp(path) == direct.out);
  std::remove(path.c_str());
}

TEST_CASE("remaining subcommands produce well-formed output") {
  const auto tv = run_command(cli() + " tv --alpha 1.5 --delta 1.5 --check");
  REQUIRE(tv.status == 0);
  const auto tvj = nlohmann::json::parse(tv.out);
  CHECK(tvj["pass"] == true);
  CHECK(tvj["u0"].get<double>() > 0.0);
  CHECK(run_command(cli() + " tv --u0 nonsense").status == 2);

  const auto sp = run_command(cli() + " spine --lambda 0.3,0.4 --steps 4 --paths 3 --reps 500");
  REQUIRE(sp.status == 0);
  CHECK(lines(sp.out) == 4u);

  const auto sim = run_command(cli() + " similarity --from-complex --compare --lambda 0.3,0.4 --gens 4 --reps 2");
  REQUIRE(sim.status == 0);
  std::istringstream in(sim.out);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["max_z_diff"].get<double>() <= 1e-10);
    ++n;
  }
  CHECK(n == 5);
  CHECK(run_command(cli() + " similarity --lambda 0.3,0.4").status == 2);
}
