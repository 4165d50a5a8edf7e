#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sys/wait.h>

using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr
};

Run run(const std::string& args) {
  std::string cmd = std::string(PADIC_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, f)) > 0) r.out.append(buf, n);
  int st = pclose(f);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("padic_cli_" + std::to_string(getpid()) + "_" + name)).string();
}

json load(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

json strip_timing(json j) {
  j.erase("timing");
  return j;
}

}  // namespace

TEST(Cli, QuickSuitePasses) {
  auto path = tmp("suite.json");
  auto r = run("suite --quick --out " + path);
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = load(path);
  EXPECT_EQ(j["schema"], "padic-report/1");
  EXPECT_EQ(j["cases"].size(), 12u);
  EXPECT_TRUE(j["summary"]["pass"].get<bool>());
  for (const auto& c : j["cases"]) EXPECT_TRUE(c["pass"].get<bool>()) << c["name"];
}

TEST(Cli, ShadowWithOracle) {
  auto path = tmp("shadow.json");
  auto r = run("shadow --map shift_zp --p 3 --delta p^-3 --length 50 --seeds 200 --oracle on --out " + path);
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = load(path);
  ASSERT_EQ(j["cases"].size(), 200u);
  for (const auto& c : j["cases"]) ASSERT_TRUE(c["bound_ok"].get<bool>());
  EXPECT_EQ(j["summary"]["invariants"]["oracle_le_solver"]["failed"], 0);
  EXPECT_EQ(j["config"]["delta"], "p^-3");
}

TEST(Cli, MalformedMapSpecIsAConfigError) {
  auto r = run("shadow --map 'affine[v=3]'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("at 6"), std::string::npos) << r.out;
  // caret under the offending character
  EXPECT_NE(r.out.find("\n        ^"), std::string::npos) << r.out;
  EXPECT_EQ(run("shadow --delta p^-x").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("conjugate --map shift_zp --p 2 --delta p^0").code, 2);
}

TEST(Cli, ReportsAreDeterministic) {
  auto a = tmp("a.json"), b = tmp("b.json");
  ASSERT_EQ(run("conjugate --map shift_zp --p 3 --n 7 --seeds 3 --out " + a).code, 0);
  ASSERT_EQ(run("conjugate --map shift_zp --p 3 --n 7 --seeds 3 --workers 1 --out " + b).code, 0);
  EXPECT_EQ(strip_timing(load(a)), strip_timing(load(b)));
}

TEST(Cli, ConfigFileMirrorsFlags) {
  auto cfg = tmp("cfg.json"), a = tmp("fromcfg.json"), b = tmp("fromflags.json");
  std::ofstream(cfg) << R"cfg({"subcommand": "conjugate", "map": "affine(v=3,w=1)", "n": 6, "delta": "p^-3", "seeds": 2})cfg";
  ASSERT_EQ(run("--config " + cfg + " --out " + a).code, 0);
  ASSERT_EQ(run("conjugate --map 'affine(v=3,w=1)' --n 6 --delta p^-3 --seeds 2 --out " + b).code, 0);
  EXPECT_EQ(strip_timing(load(a)), strip_timing(load(b)));
  // the command line wins over the file
  ASSERT_EQ(run("conjugate --config " + cfg + " --seeds 1 --out " + a).code, 0);
  EXPECT_EQ(load(a)["cases"].size(), 1u);
}

TEST(Cli, InvariantFailureStillWritesReport) {
  auto path = tmp("ce.json");
  auto r = run("counterexample --epsilon p^0 --out " + path);
  EXPECT_EQ(r.code, 1);
  auto j = load(path);
  EXPECT_FALSE(j["summary"]["pass"].get<bool>());
  EXPECT_TRUE(j["summary"]["invariants"]["right_inverse_exact"]["pass"].get<bool>());
}

TEST(Cli, CounterexampleWitnessAndControl) {
  auto path = tmp("ce_ok.json");
  ASSERT_EQ(run("counterexample --p 3 --depth 10 --delta p^-6 --epsilon p^-2 --out " + path).code, 0);
  auto j = load(path)["cases"][0];
  EXPECT_EQ(j["witness"]["best_error_s"], "1");
  EXPECT_EQ(j["covered_residues"], 2 * 6561);
}

TEST(Cli, AnalyzeExample2) {
  auto path = tmp("an.json");
  ASSERT_EQ(run("analyze --map example2_R --p 2 --n 8 --out " + path).code, 0);
  auto j = load(path)["cases"][0];
  EXPECT_TRUE(j["injective"].get<bool>());
  EXPECT_TRUE(j["openness_rho"].is_null());
  EXPECT_EQ(j["lipschitz"]["c2_upper"], "p^-1");
}
