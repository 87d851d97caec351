#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "btrisk/io.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using btrisk::test::fixture;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr together
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + BTRISK_CLI + std::string(" ") + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("btrisk_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ValidateExitCodes) {
  const auto ok = run("validate " + fixture("roadway.btd.json"));
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find(": ok"), std::string::npos);

  const auto bad = run("validate " + fixture("invalid/top_count.btd.json"));
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(count_lines(bad.out), 1u) << bad.out;
  EXPECT_EQ(bad.out.rfind("TOP_COUNT:", 0), 0u) << bad.out;

  EXPECT_EQ(run("validate " + fixture("invalid/cycle_branching.btd.json")).code, 2);
  EXPECT_EQ(run("validate " + path("missing.json")).code, 3);
  EXPECT_EQ(run("validate " + fixture("weather_fragment.sdl")).code, 3);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("assess " + fixture("roadway.btd.json") + " x.csv --window 0").code, 1);
  EXPECT_EQ(run("--format xml validate " + fixture("roadway.btd.json")).code, 1);
}

TEST_F(CliTest, SampleIsReproducible) {
  const auto a = run("--seed 7 sample " + fixture("sample.sdl") + " --count 20 --out " + path("a.ndjson"));
  const auto b = run("sample " + fixture("sample.sdl") + " --count 20 --seed 7 --out " + path("b.ndjson"));
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  const auto ta = btrisk::read_file(path("a.ndjson"));
  EXPECT_EQ(ta, btrisk::read_file(path("b.ndjson")));
  EXPECT_EQ(count_lines(ta), 20u);
  EXPECT_EQ(run("sample " + fixture("weather_fragment.sdl") + " --count 2").code, 2);
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  const auto r = run("sample " + fixture("sample.sdl") + " --count 3", "BTRISK_OUT_DIR=" + dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "scenes.ndjson"));
}

TEST_F(CliTest, Pipeline) {
  const std::string model = fixture("roadway.btd.json"), truth = fixture("truth.json");
  for (const char* t : {"T1", "T2"}) {
    const auto r = run("--seed 3 simulate " + truth + " " + model + " --episodes 3000 --isolate " + t + " --out " +
                       path(std::string(t) + ".ndjson"));
    ASSERT_EQ(r.code, 0) << r.out;
  }
  ASSERT_EQ(run("--seed 4 simulate " + truth + " " + model + " --episodes 3000 --out " + path("all.ndjson")).code, 0);

  const auto fit = run("fit " + model + " " + path("T1.ndjson") + " " + path("T2.ndjson") + " " + path("all.ndjson") +
                       " --fusion normalized --out " + path("fitted.btd.json"));
  ASSERT_EQ(fit.code, 0) << fit.out;
  EXPECT_EQ(run("validate " + path("fitted.btd.json")).code, 0);

  const auto assess =
      run("assess " + path("fitted.btd.json") + " " + fixture("radar_fault_trace.csv") + " --out " + path("risk.csv"));
  ASSERT_EQ(assess.code, 0) << assess.out;
  const auto trace = btrisk::read_file(path("risk.csv"));
  EXPECT_EQ(trace.rfind("timestamp,consequence,raw_rate,smoothed_rate,likelihood,verdict", 0), 0u);
  EXPECT_NE(trace.find("violated"), std::string::npos);

  std::ofstream(path("outcomes.csv")) << "scene_id,trace,observed\ns0,risk.csv,1\ns1,risk.csv,0\n";
  const auto eval = run("--format delimited evaluate " + path("outcomes.csv") + " --consequence C1");
  EXPECT_EQ(eval.code, 0) << eval.out;
  EXPECT_NE(eval.out.find("# loglik"), std::string::npos);
}

TEST_F(CliTest, FitWithoutEncountersFailsPerBarrier) {
  std::ofstream(path("empty.ndjson")) << R"({"header": {"isolate": "T1", "top_event": "TOP", "episodes": 0}})" << "\n";
  const auto r = run("fit " + fixture("roadway.btd.json") + " " + path("empty.ndjson"));
  EXPECT_EQ(r.code, 2);
  for (const char* b : {"B1", "B2", "B3"}) EXPECT_NE(r.out.find(std::string("fit failed for ") + b), std::string::npos) << r.out;
}

TEST_F(CliTest, AssessNamesMissingColumn) {
  std::ofstream(path("trace.csv")) << "timestamp,blur_left\n0,0\n";
  const auto r = run("assess " + fixture("roadway.btd.json") + " " + path("trace.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("radar_fault"), std::string::npos) << r.out;
}

TEST_F(CliTest, EvaluateTwoFiles) {
  std::ofstream(path("est.csv")) << "scene_id,estimated_rate\na,0.1\nb,0.5\nc,1.5\n";
  std::ofstream(path("obs.csv")) << "scene_id,observed\na,0\nb,1\nc,2\n";
  const auto r = run("evaluate " + path("est.csv") + " " + path("obs.csv"));
  EXPECT_EQ(r.code, 0) << r.out;
  std::ofstream(path("obs_bad.csv")) << "scene_id,observed\na,0\nz,1\nc,2\n";
  EXPECT_EQ(run("evaluate " + path("est.csv") + " " + path("obs_bad.csv")).code, 2);
}
