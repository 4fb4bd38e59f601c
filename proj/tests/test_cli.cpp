#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bellcert/cli.hpp"
#include "bellcert/games.hpp"
#include "bellcert/io.hpp"
#include "oracles.hpp"

using namespace bellcert;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("bellcert_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    chsh_ = oracle::data_path("games/chsh.json");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  // CHSH record of `n` trials with the first `wins` of them won.
  std::string chsh_trials(const std::string& name, int n, int wins) {
    std::ostringstream s;
    s << "index,tag,x0,x1,a0,a1\n";
    for (int i = 0; i < n; ++i) {
      const int x0 = (i / 2) % 2, x1 = i % 2;
      const int parity = (x0 & x1) ^ (i < wins ? 0 : 1);
      s << i << ",1," << x0 << ',' << x1 << ",0," << parity << '\n';
    }
    return write(name, s.str());
  }

  fs::path dir_;
  std::string chsh_;
};

double report_p(const json& j, const std::string& method) {
  for (const auto& r : j.at("reports"))
    if (r.at("method") == method) return r.at("p_value").get<double>();
  throw std::runtime_error("no report for " + method);
}

}  // namespace

TEST_F(Cli, AnalyzeDelftRecord) {
  const std::string trials = chsh_trials("delft.csv", 245, 196);
  const Outcome r = run({"analyze", "--game", chsh_, "--trials", trials, "--tau", "1.08e-5", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("schema"), "bellcert/1");
  EXPECT_EQ(j.at("n"), 245);
  EXPECT_EQ(j.at("wins"), 196);
  const double p = report_p(j, "binomial");
  EXPECT_GE(p, 0.038);
  EXPECT_LE(p, 0.040);
}

TEST_F(Cli, AnalyzeJsonIsReproducible) {
  const std::string trials = chsh_trials("t.csv", 120, 100);
  const std::vector<std::string> args{"analyze", "--game", chsh_, "--trials", trials, "--method", "all", "--format",
                                      "json"};
  const Outcome a = run(args);
  const Outcome b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, AnalyzeAllMethodsOrdered) {
  const std::string trials = chsh_trials("t.csv", 245, 196);
  const Outcome r = run({"analyze", "--game", chsh_, "--trials", trials, "--method", "all", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_LE(report_p(j, "binomial"), report_p(j, "bentkus"));
  EXPECT_LE(report_p(j, "bentkus"), report_p(j, "mcdiarmid"));
  EXPECT_LE(report_p(j, "mcdiarmid"), report_p(j, "azuma"));
}

TEST_F(Cli, AnalyzeEmptyRecord) {
  const std::string trials = write("empty.csv", "index,tag,x0,x1,a0,a1\n");
  const Outcome r = run({"analyze", "--game", chsh_, "--trials", trials, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("n"), 0);
  EXPECT_EQ(report_p(j, "binomial"), 1.0);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kInputError);
  EXPECT_EQ(run({"analyze", "--game", chsh_}).code, cli::kInputError);
  EXPECT_EQ(run({"analyze", "--game", (dir_ / "missing.json").string(), "--trials", chsh_}).code, cli::kInputError);
  const std::string bad = write("bad.csv", "index,tag,x0,x1,a0\n");
  EXPECT_EQ(run({"analyze", "--game", chsh_, "--trials", bad}).code, cli::kInputError);
  EXPECT_EQ(run({"design", "beta", "--game", chsh_, "--tau", "-0.1"}).code, cli::kInputError);

  // The normal approximation is not stated below the mean.
  const std::string low = chsh_trials("low.csv", 100, 60);
  const Outcome pre = run({"analyze", "--game", chsh_, "--trials", low, "--method", "gaussian", "--format", "json"});
  EXPECT_EQ(pre.code, cli::kPreconditionFailed);

  const std::string mermin = oracle::data_path("games/mermin.json");
  ::setenv("BELLCERT_CAP", "3", 1);
  const Outcome cap = run({"design", "beta", "--game", mermin});
  ::unsetenv("BELLCERT_CAP");
  EXPECT_EQ(cap.code, cli::kCapExceeded);
  EXPECT_NE(cap.err.find("cap"), std::string::npos);
  EXPECT_EQ(run({"design", "beta", "--game", mermin}).code, 0);
}

TEST_F(Cli, DesignCommands) {
  Outcome r = run({"design", "beta", "--game", chsh_, "--tau", "1.08e-5", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out).at("beta_win").get<double>(), 0.7500107999, 1e-10);

  r = run({"design", "classical-bound", "--game", oracle::data_path("games/mermin.json"), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("beta_max").get<double>(), 0.75);

  r = run({"design", "select", "--behavior", oracle::data_path("behaviors/tsirelson.json"), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json sel = json::parse(r.out);
  EXPECT_FALSE(sel.at("local").get<bool>());
  EXPECT_GE(sel.at("violation").get<double>(), 0.1035);

  r = run({"design", "select", "--behavior", oracle::data_path("behaviors/uniform.json"), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(json::parse(r.out).at("local").get<bool>());
}

TEST_F(Cli, Combine) {
  auto p_of = [](const Outcome& r) { return json::parse(r.out).at("p_value").get<double>(); };
  Outcome r = run({"combine", "0.039", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(p_of(r), 0.039);
  r = run({"combine", "0.1", "0.1", "--format", "json"});
  EXPECT_NEAR(p_of(r), 0.0560517, 1e-7);
  r = run({"combine", "1", "1", "--format", "json"});
  EXPECT_EQ(p_of(r), 1.0);
  EXPECT_EQ(run({"combine", "0.1", "1.5"}).code, cli::kInputError);
  // A zero P-value is flagged rather than refused.
  r = run({"combine", "0", "0.5", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(p_of(r), 0.0);
  EXPECT_TRUE(json::parse(r.out).at("zero_input").get<bool>());
  EXPECT_EQ(run({"combine", "-0.1"}).code, cli::kInputError);
  const std::string file = write("p.txt", "0.1, 0.1\n");
  r = run({"combine", "--file", file, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(p_of(r), 0.0560517, 1e-7);
}

TEST_F(Cli, SweepSinglePoint) {
  const Outcome r = run({"sweep", "--game", chsh_, "--grid", "n=245;S=2.4", "--method", "binomial"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_FALSE(std::getline(lines, extra) && !extra.empty());
  EXPECT_EQ(row.rfind("245,2.4,binomial,196,", 0), 0u) << row;
}

TEST_F(Cli, SweepRejectsBadGrid) {
  EXPECT_EQ(run({"sweep", "--game", chsh_, "--grid", "n=10:1:1;S=2.4"}).code, cli::kInputError);
  EXPECT_EQ(run({"sweep", "--game", chsh_, "--grid", "S=2.4"}).code, cli::kInputError);
}

TEST_F(Cli, SimulateThenAnalyze) {
  EXPECT_EQ(run({"simulate", "--game", chsh_, "--strategy", "nope", "--trials", "5"}).code, cli::kInputError);
  const std::string out = (dir_ / "sim.csv").string();
  Outcome r = run({"simulate", "--game", chsh_, "--strategy", "optimal", "--trials", "400", "--seed", "11", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const ExperimentData d = load_trials(out, games::chsh());
  EXPECT_EQ(d.trials(), 400u);
  r = run({"analyze", "--game", chsh_, "--trials", out, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("n"), 400);
  // A local adversary should not look significant.
  EXPECT_GT(report_p(j, "binomial"), 1e-3);

  // Same seed, same record.
  const std::string again = (dir_ / "again.csv").string();
  run({"simulate", "--game", chsh_, "--strategy", "optimal", "--trials", "400", "--seed", "11", "--out", again});
  EXPECT_EQ(read_file(out), read_file(again));
}

TEST(CliFormat, Numbers) {
  EXPECT_EQ(cli::format_number(0.5), "0.5");
  EXPECT_EQ(cli::format_number(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(cli::format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(cli::format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(cli::format_number(std::nan("")), "nan");
}
