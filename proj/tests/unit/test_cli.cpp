#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "climrl/eval/records.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string(CLIMRL_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("climrl_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("train --experiment v0-homo-64L").code, 1);
  EXPECT_EQ(cli("train --experiment v0-homo-64L --algo dqn").code, 1);
  EXPECT_EQ(cli("train --experiment v5-homo-64L --algo ddpg").code, 1);
  EXPECT_EQ(cli("train --experiment v0-homo-64L --algo ddpg --seeds 3..1").code, 1);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, EvaluateOnEmptyDirectoryReportsNoRecords) {
  const fs::path dir = scratch("empty");
  const CliRun r = cli("evaluate --records " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("no records"), std::string::npos);
}

TEST(Cli, TrainWritesOneRecordPerSeedAndRerunsIdentically) {
  const fs::path dir = scratch("train");
  const std::string args = "train --experiment v0-homo-64L-60k --algo ppo --seeds 1..3 --steps 400 --out " + dir.string();
  ASSERT_EQ(cli(args).code, 0);
  const fs::path exp = dir / "v0-homo-64L-60k";
  std::vector<std::string> first;
  for (int s = 1; s <= 3; ++s) {
    const fs::path f = exp / ("ppo-seed" + std::to_string(s) + ".csv");
    ASSERT_TRUE(fs::exists(f));
    EXPECT_TRUE(fs::exists(exp / ("ppo-seed" + std::to_string(s) + ".policy")));
    first.push_back(climrl::eval::canonical_record(climrl::eval::read_record(f)));
  }
  ASSERT_EQ(cli(args + " --workers 2").code, 0);
  for (int s = 1; s <= 3; ++s) {
    const fs::path f = exp / ("ppo-seed" + std::to_string(s) + ".csv");
    EXPECT_EQ(climrl::eval::canonical_record(climrl::eval::read_record(f)), first[static_cast<std::size_t>(s - 1)]);
  }
  const fs::path out = dir / "eval";
  ASSERT_EQ(cli("evaluate --records " + dir.string() + " --out " + out.string()).code, 0);
  EXPECT_TRUE(fs::exists(out / "metrics.csv"));
  const fs::path curves = dir / "curves.csv";
  ASSERT_EQ(cli("export curves --records " + dir.string() + " --bucket 200 --out " + curves.string()).code, 0);
  EXPECT_NE(slurp(curves).find("v0-homo-64L-60k/ppo,200,"), std::string::npos);
}

TEST(Cli, RankFromPublishedLists) {
  const CliRun r = cli(std::string("rank --lists ") + CLIMRL_TEST_DATA + "/biascorr_top3.csv");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("1     DDPG       11"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("2     TQC        10"), std::string::npos);
  EXPECT_NE(r.out.find("1     TD3        6"), std::string::npos);
  EXPECT_NE(r.out.find("4     DPG        1"), std::string::npos);
  const CliRun rce = cli(std::string("rank --lists ") + CLIMRL_TEST_DATA + "/rce_top3.csv");
  EXPECT_NE(rce.out.find("3     TRPO       2"), std::string::npos);
  EXPECT_EQ(cli("rank --lists /nonexistent.csv").code, 2);
}

TEST(Cli, ProfileExportHasSeventeenRows) {
  const fs::path dir = scratch("profile");
  ASSERT_EQ(cli("train --experiment rce-v0-homo-64L --algo ppo --seeds 1 --steps 500 --out " + dir.string()).code, 0);
  const fs::path out = dir / "profile.csv";
  const CliRun r = cli("export profile --policy " + (dir / "rce-v0-homo-64L" / "ppo-seed1.policy").string() +
                    " --algo ppo --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("pressure_hPa,temperature_K,simulated_K", 0), 0u) << line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 4u);
    EXPECT_EQ(v[3], v[2] - v[1]);
  }
  EXPECT_EQ(rows, 17);
  EXPECT_EQ(cli("export profile --policy /nonexistent.policy --algo ppo --out " + out.string()).code, 2);
}
