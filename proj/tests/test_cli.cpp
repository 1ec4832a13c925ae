#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ybcav/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell and captures stdout; stderr is discarded.
Run run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" YBCAV_CLI_PATH "\" " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ybcav_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << body;
    return p;
  }

  fs::path dir_;
};

constexpr const char* kSmallRuns = R"({"measurement": {"windows": 200, "transits": 200}})";

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run_cli("").code, 2); }

TEST_F(Cli, UnknownOptionIsUsageError) { EXPECT_EQ(run_cli("motdip --bogus").code, 2); }

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run_cli("--help").code, 0); }

TEST_F(Cli, StochasticCommandsRequireSeed) {
  const auto cfg = write_config("small.json", kSmallRuns);
  EXPECT_EQ(run_cli("scatter -c " + cfg.string() + " -o " + (dir_ / "a").string()).code, 2);
  EXPECT_EQ(run_cli("transit -c " + cfg.string() + " -o " + (dir_ / "b").string()).code, 2);
}

TEST_F(Cli, BadConfigIsConfigError) {
  const auto cfg = write_config("bad.json", R"({"cavity": {"g0_MHz": "strong"}})");
  EXPECT_EQ(run_cli("motdip -c " + cfg.string() + " -o " + dir_.string()).code, 2);
  const auto unknown = write_config("unknown.json", R"({"cavity": {"gee": 1}})");
  EXPECT_EQ(run_cli("motdip -c " + unknown.string() + " -o " + dir_.string()).code, 2);
  EXPECT_EQ(run_cli("motdip -c " + (dir_ / "missing.json").string() + " -o " + dir_.string()).code, 2);
  EXPECT_EQ(run_cli("motdip --format xml -o " + dir_.string()).code, 2);
}

TEST_F(Cli, PrintDefaultsParsesBack) {
  const auto r = run_cli("--print-defaults");
  ASSERT_EQ(r.code, 0);
  const ybcav::RunConfig c = ybcav::parse_config(r.out);
  EXPECT_EQ(ybcav::serialize_config(c), r.out);
}

TEST_F(Cli, MotdipWritesTableAndSummary) {
  const auto r = run_cli("motdip -o " + dir_.string());
  ASSERT_EQ(r.code, 0);
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_GT(summary["hwhm_MHz"].get<double>(), 70.0);
  EXPECT_LT(summary["hwhm_MHz"].get<double>(), 150.0);
  const std::string csv = slurp(dir_ / "motdip.csv");
  EXPECT_EQ(csv.rfind("# ybcav.", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "motdip_summary.json"));
}

TEST_F(Cli, MotdipWithoutUpperStatePopulationIsFlat) {
  const auto cfg = write_config("flat.json", R"({"mot": {"p1_population": 0.0}})");
  ASSERT_EQ(run_cli("motdip --format jsonl -c " + cfg.string() + " -o " + dir_.string()).code, 0);
  std::ifstream in(dir_ / "motdip.jsonl");
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    const auto row = nlohmann::json::parse(line);
    EXPECT_DOUBLE_EQ(row["normalized_N"].get<double>(), 1.0);
    ++rows;
  }
  EXPECT_EQ(rows, 401);
}

TEST_F(Cli, SeededRunsAreByteIdenticalAcrossThreadCounts) {
  const auto cfg = write_config("small.json", kSmallRuns);
  const fs::path a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run_cli("scatter --seed 42 -j 1 -c " + cfg.string() + " -o " + a.string()).code, 0);
  ASSERT_EQ(run_cli("scatter --seed 42 -j 3 -c " + cfg.string() + " -o " + b.string()).code, 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 4);
  ASSERT_EQ(run_cli("scatter --seed 43 -c " + cfg.string() + " -o " + (dir_ / "c").string()).code, 0);
  EXPECT_NE(slurp(a / "scatter_on_up.csv"), slurp(dir_ / "c" / "scatter_on_up.csv"));
}

TEST_F(Cli, TransitRecordsPerSpin) {
  const auto cfg = write_config("small.json", kSmallRuns);
  const auto r = run_cli("transit --seed 7 -c " + cfg.string() + " -o " + dir_.string());
  ASSERT_EQ(r.code, 0);
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_EQ(summary["transits"], 200);
  EXPECT_TRUE(fs::exists(dir_ / "transits_up.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "transits_down.csv"));
}

TEST_F(Cli, EnvironmentSuppliesOptions) {
  const auto cfg = write_config("small.json", kSmallRuns);
  const std::string env = "YBCAV_SEED=9 YBCAV_FORMAT=jsonl YBCAV_CONFIG=" + cfg.string() + " YBCAV_OUT=" + dir_.string();
  ASSERT_EQ(run_cli("scatter", env).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "scatter_off_down.jsonl"));
  // The command line wins over the environment.
  ASSERT_EQ(run_cli("scatter --format csv", env).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "scatter_off_down.csv"));
}
