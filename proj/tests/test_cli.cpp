#include "statcal/cli.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace statcal {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "statcal");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path with_config(const fs::path& p) {
  fs::path out = p;
  out += ".config.toml";
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("statcal_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path dir_;
};

TEST_F(CliTest, RunWritesCsvWithHeader) {
  const CliResult r = cli({"run", "ou-mean", "--seed", "7", "-T", "20", "--out", path("r.csv").string()});
  EXPECT_TRUE(r.code == exit_ok || r.code == exit_acceptance_failed) << r.err;
  const std::string csv = slurp(path("r.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,theta_0,grad_norm,J_hat");
  EXPECT_TRUE(fs::exists(path("r.csv.report.json")));
  EXPECT_TRUE(fs::exists(path("r.csv.config.toml")));
  EXPECT_FALSE(fs::exists(path("r.csv.tmp")));
}

TEST_F(CliTest, ExitCodeFollowsAcceptance) {
  EXPECT_EQ(cli({"run", "ou-mean", "-T", "0", "--out", path("a.csv").string()}).code, exit_acceptance_failed);
  EXPECT_EQ(cli({"run", "ou-mean", "--out", path("b.csv").string()}).code, exit_ok);
}

TEST_F(CliTest, DivergenceExitsWithThree) {
  const CliResult r = cli({"run", "cubic", "--dt", "0.5", "-T", "20", "--theta0", "50", "--out", path("d.csv").string()});
  EXPECT_EQ(r.code, exit_divergence);
  EXPECT_NE(r.out.find("diverged"), std::string::npos);
}

TEST_F(CliTest, ValidateReportsTheViolatedCondition) {
  CliResult r = cli({"validate", "--gamma", "0.4"});
  EXPECT_EQ(r.code, exit_ok);
  EXPECT_NE(r.out.find("∫α² dt = ∞"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("not admissible"), std::string::npos);

  r = cli({"validate", "--gamma", "1.2"});
  EXPECT_NE(r.out.find("∫α dt < ∞"), std::string::npos) << r.out;

  r = cli({"validate", "--gamma", "0.6"});
  EXPECT_EQ(r.code, exit_ok);
  EXPECT_EQ(r.out.find("violated"), std::string::npos) << r.out;
}

TEST_F(CliTest, OracleStationaryJson) {
  const CliResult r = cli({"oracle", "ou-stationary", "--g", "2", "--h", "1", "--sigma", "1"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["mean"], nlohmann::json::array({2.0}));
  EXPECT_EQ(j["cov"], nlohmann::json::parse("[[0.5]]"));
}

TEST_F(CliTest, OracleTransitionJson) {
  const CliResult r = cli({"oracle", "ou-transition", "--g", "0", "--h", "1", "--sigma", "1", "--x", "1", "--t", "0"});
  ASSERT_EQ(r.code, exit_ok) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["mean"][0], 1.0);
  EXPECT_EQ(j["cov"][0][0], 0.0);
}

TEST_F(CliTest, OracleRejectsNonSpd) {
  EXPECT_EQ(cli({"oracle", "ou-stationary", "--g", "0", "--h", "-1", "--sigma", "1"}).code, exit_usage);
}

TEST_F(CliTest, ListPrintsEveryExperiment) {
  const CliResult r = cli({"list"});
  EXPECT_EQ(r.code, exit_ok);
  for (const auto& name : builtin_names()) EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(cli({"run", "no-such-experiment"}).code, exit_usage);
  EXPECT_EQ(cli({"run", "ou-mean", "--seed", "abc"}).code, exit_usage);
  EXPECT_EQ(cli({"frobnicate"}).code, exit_usage);
  EXPECT_EQ(cli({"run", "ou-mean", "--gamma", "0.4", "--out", path("x.csv").string()}).code, exit_usage);
}

TEST_F(CliTest, UnknownConfigKeyIsRejected) {
  std::ofstream(path("bad.toml")) << "[run]\nexperiment = \"ou-mean\"\nsede = 3\n";
  const CliResult r = cli({"run", "--config", path("bad.toml").string(), "--out", path("x.csv").string()});
  EXPECT_EQ(r.code, exit_usage);
  EXPECT_NE(r.err.find("sede"), std::string::npos) << r.err;

  std::ofstream(path("bad2.toml")) << "[runn]\nexperiment = \"ou-mean\"\n";
  EXPECT_EQ(cli({"run", "--config", path("bad2.toml").string()}).code, exit_usage);

  std::ofstream(path("bad3.toml")) << "[run]\nexperiment = \"ou-mean\"\nseed = \"seven\"\n";
  EXPECT_EQ(cli({"run", "--config", path("bad3.toml").string()}).code, exit_usage);
}

TEST_F(CliTest, ConfigEchoReproducesTheOutputBitExactly) {
  for (const char* name : {"ou-two-param", "autocov", "multi-ou-correlated"}) {
    const fs::path first = path(std::string(name) + "_1.csv");
    const fs::path second = path(std::string(name) + "_2.csv");
    cli({"run", name, "--seed", "5", "-T", "3", "-N", "7", "--a", "0.3", "--dim", "4", "--out", first.string()});
    ASSERT_TRUE(fs::exists(first)) << name;
    const fs::path echo = with_config(first);
    cli({"run", "--config", echo.string(), "--out", second.string()});
    EXPECT_EQ(slurp(first), slurp(second)) << name;
    EXPECT_EQ(slurp(echo), slurp(with_config(second))) << name;
  }
}

TEST_F(CliTest, FlagsOverrideConfigValues) {
  std::ofstream(path("c.toml")) << "[run]\nexperiment = \"ou-mean\"\nseed = 3\nhorizon = 2.0\n";
  const fs::path out = path("c.csv");
  cli({"run", "--config", path("c.toml").string(), "--seed", "4", "--out", out.string()});
  const std::string echo = slurp(with_config(out));
  EXPECT_NE(echo.find("seed = 4"), std::string::npos) << echo;
  EXPECT_NE(echo.find("horizon = 2"), std::string::npos) << echo;
}

TEST_F(CliTest, JsonlHasOneObjectPerLineAndDiagnostics) {
  const fs::path out = path("r.jsonl");
  cli({"run", "ou-mean", "-T", "2", "--stride", "50", "--format", "jsonl", "--out", out.string()});
  std::istringstream lines(slurp(out));
  std::string line;
  std::vector<nlohmann::json> objs;
  while (std::getline(lines, line)) objs.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(objs.size(), 6U);
  EXPECT_EQ(objs[0]["t"], 0.0);
  EXPECT_TRUE(objs[0].contains("theta"));
  EXPECT_TRUE(objs[0].contains("grad_norm"));
  EXPECT_TRUE(objs[0].contains("J_hat"));
  EXPECT_TRUE(objs.back().contains("diagnostics"));
}

TEST_F(CliTest, DefaultOutputDirectoryFromEnvironment) {
  ::setenv("STATCAL_OUTPUT_DIR", dir_.c_str(), 1);
  const CliResult r = cli({"run", "ou-mean", "-T", "1"});
  ::unsetenv("STATCAL_OUTPUT_DIR");
  EXPECT_TRUE(fs::exists(path("ou-mean.csv"))) << r.out << r.err;
}

TEST_F(CliTest, SweepWritesOneFilePerCellAndAnIndex) {
  const CliResult r = cli({"sweep", "ou-mean", "-T", "1", "--grid", "seed=1,2", "--grid", "batch=3,4",
                           "--out-dir", dir_.string()});
  ASSERT_TRUE(r.code == exit_ok || r.code == exit_acceptance_failed) << r.err;
  const std::string index = slurp(path("index.csv"));
  std::istringstream lines(index);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "cell,seed,batch,status,output");
  int cells = 0;
  for (std::string line; std::getline(lines, line);) ++cells;
  EXPECT_EQ(cells, 4);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(fs::exists(path("cell_" + std::to_string(i) + ".csv"))) << i;
}

TEST_F(CliTest, SweepCellsMatchIndividualRuns) {
  cli({"sweep", "ou-mean", "-T", "1", "--grid", "seed=8,9", "--parallel", "2", "--out-dir", dir_.string()});
  cli({"run", "ou-mean", "-T", "1", "--seed", "9", "--out", path("single.csv").string()});
  EXPECT_EQ(slurp(path("cell_1.csv")), slurp(path("single.csv")));
}

TEST_F(CliTest, SweepRejectsBadGridsBeforeRunning) {
  EXPECT_EQ(cli({"sweep", "ou-mean", "--grid", "gamma=0.8,0.3", "--out-dir", dir_.string()}).code, exit_usage);
  EXPECT_FALSE(fs::exists(path("cell_0.csv")));
  EXPECT_EQ(cli({"sweep", "ou-mean", "--grid", "nonsense=1", "--out-dir", dir_.string()}).code, exit_usage);
}

TEST_F(CliTest, BinaryRunsEndToEnd) {
  const char* bin = std::getenv("STATCAL_BIN");
  if (bin == nullptr) GTEST_SKIP() << "STATCAL_BIN not set";
  const std::string cmd = std::string(bin) + " run ou-mean --seed 7 -T 5 --out " + path("bin.csv").string() +
                          " > " + path("log.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  const CliResult lib = cli({"run", "ou-mean", "--seed", "7", "-T", "5", "--out", path("lib.csv").string()});
  EXPECT_EQ(WEXITSTATUS(status), lib.code);
  EXPECT_EQ(slurp(path("bin.csv")), slurp(path("lib.csv")));
}

}  // namespace
}  // namespace statcal
