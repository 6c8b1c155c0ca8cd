#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "effdyn/studio.hpp"

namespace fs = std::filesystem;
using namespace effdyn;

namespace {

const std::string kLeg = std::string(EFFDYN_SOURCE_DIR) + "/data/leg2dof.json";

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "effstudio");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = studio::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string &text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
      cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

class StudioTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("effstudio_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out(const std::string &sub = "") const { return (dir_ / sub).string(); }
  fs::path dir_;
};

} // namespace

TEST_F(StudioTest, WedgeReportsAllModes) {
  const auto r = run({"wedge", "--mu", "0.2", "--alpha", "45", "--mode", "all", "--verify"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("forward"), std::string::npos);
  EXPECT_NE(r.out.find("backward"), std::string::npos);
}

TEST_F(StudioTest, WedgeCsvOnlyWithOut) {
  const auto r = run({"wedge", "--mu", "0.1", "--out", out()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "wedge.csv"));
}

TEST_F(StudioTest, WedgeExitCodes) {
  EXPECT_EQ(run({"wedge", "--mu", "1.1", "--alpha", "45", "--mode", "backward"}).code, 3);
  EXPECT_EQ(run({"wedge", "--mu", "abc"}).code, 2);
  EXPECT_EQ(run({"wedge", "--mu", "-0.1"}).code, 2);
  EXPECT_EQ(run({"wedge", "--mode", "sideways"}).code, 2);
  // Forward driving still works on a self-locking wedge.
  EXPECT_EQ(run({"wedge", "--mu", "1.1", "--alpha", "45", "--mode", "forward"}).code, 0);
}

TEST_F(StudioTest, AnalyzeWritesArtifacts) {
  const auto r = run({"analyze", kLeg, "--out", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char *f : {"inertia.csv", "capability.csv", "directions.csv", "inertia.svg",
                        "capability.svg"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  EXPECT_EQ(slurp(dir_ / "inertia.svg").rfind("<svg", 0), 0u);
}

TEST_F(StudioTest, AnalyzeIsDeterministic) {
  ASSERT_EQ(run({"analyze", kLeg, "--out", out("a"), "--dir", "0,1", "--dir", "1,1"}).code, 0);
  ASSERT_EQ(run({"analyze", kLeg, "--out", out("b"), "--dir", "0,1", "--dir", "1,1"}).code, 0);
  for (const char *f : {"inertia.csv", "capability.csv", "directions.csv", "inertia.svg"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(StudioTest, IdealModeCollapsesEllipsoids) {
  ASSERT_EQ(run({"analyze", kLeg, "--mode", "ideal", "--out", out(), "--format", "csv"}).code, 0);
  const auto rows = csv_rows(slurp(dir_ / "inertia.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1][0], "GIE");
  for (std::size_t r = 2; r < 4; ++r)
    for (std::size_t c = 1; c < 5; ++c)
      EXPECT_NEAR(std::stod(rows[r][c]), std::stod(rows[1][c]), 1e-12) << rows[r][0];
  EXPECT_FALSE(fs::exists(dir_ / "inertia.svg"));
}

TEST_F(StudioTest, AnalyzeExitCodes) {
  EXPECT_EQ(run({"analyze", kLeg, "--q", "60,0"}).code, 4);
  EXPECT_EQ(run({"analyze", kLeg, "--q", "60"}).code, 2);
  EXPECT_EQ(run({"analyze", "/nonexistent.json"}).code, 2);
  EXPECT_EQ(run({"analyze", kLeg, "--dir", "0,0"}).code, 2);
  EXPECT_EQ(run({"analyze", kLeg, "--format", "pdf"}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
}

TEST_F(StudioTest, LockedTransmissionIsNonBackdrivable) {
  // eta_f = 0.45 lies below the locking threshold for N = 20.
  std::string text = slurp(kLeg);
  text.replace(text.find("\"eta_f\": 0.8"), 12, "\"eta_f\": 0.45");
  fs::create_directories(dir_);
  const auto path = dir_ / "locked.json";
  std::ofstream(path) << text;
  EXPECT_EQ(run({"analyze", path.string(), "--mode", "backward", "--out", out("o")}).code, 3);
  EXPECT_EQ(run({"analyze", path.string(), "--mode", "forward", "--out", out("o")}).code, 0);
}

TEST_F(StudioTest, SweepForwardColumnEqualsEfficiency) {
  const auto r = run({"sweep", kLeg, "--steps", "12", "--out", out(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(slurp(dir_ / "sweep.csv"));
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0][2], "ffc_ratio");
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_NEAR(std::stod(rows[i][2]), std::stod(rows[i][0]), 1e-9);
}

TEST_F(StudioTest, SweepIsByteReproducible) {
  ASSERT_EQ(run({"sweep", kLeg, "--steps", "20", "--out", out("a")}).code, 0);
  ASSERT_EQ(run({"sweep", kLeg, "--steps", "20", "--out", out("b")}).code, 0);
  for (const char *f : {"sweep.csv", "sweep_capability.svg", "sweep_imf.svg", "sweep_inertia.svg"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(StudioTest, SweepRejectsBadRange) {
  EXPECT_EQ(run({"sweep", kLeg, "--from", "0.9", "--to", "0.6"}).code, 2);
  EXPECT_EQ(run({"sweep", kLeg, "--steps", "1"}).code, 2);
}

TEST_F(StudioTest, LegStudyRuns) {
  const auto r = run({"leg-study", "--steps", "8", "--out", out(), "--format", "csv"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "directions.csv"));
}

TEST(SweepChecks, FlagsTrendViolations) {
  SweepRow a, b;
  a.eta_f = 0.6;
  a.eta_b = 0.3;
  a.ffc_ratio = 0.6;
  a.bfc_ratio = 3.0;
  a.imf = 0.5;
  a.bgie = 2.0;
  b.eta_f = 0.8;
  b.eta_b = 0.7;
  b.ffc_ratio = 0.8;
  b.bfc_ratio = 1.5;
  b.imf = 0.6;
  b.bgie = 1.5;
  EXPECT_TRUE(studio::check_sweep({a, b}).empty());
  auto bad = b;
  bad.imf = 0.4;
  EXPECT_EQ(studio::check_sweep({a, bad}).size(), 1u);
  bad = b;
  bad.ffc_ratio = 0.81;
  EXPECT_EQ(studio::check_sweep({a, bad}).size(), 1u);
  bad = b;
  bad.imf = 1.2;
  EXPECT_EQ(studio::check_sweep({a, bad}).size(), 1u);
}

TEST(StudioParsing, DirectionsAndAngles) {
  EXPECT_TRUE(studio::parse_direction("3,4").isApprox(Vector2d(0.6, 0.8)));
  EXPECT_THROW(studio::parse_direction("1"), InvalidArgument);
  EXPECT_THROW(studio::parse_direction("a,b"), InvalidArgument);
  EXPECT_EQ(studio::parse_angles("10, 20,30").size(), 3);
  EXPECT_THROW(studio::parse_angles("10,,20"), InvalidArgument);
}
