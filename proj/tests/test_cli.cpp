#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "triplet/io.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tripletlab-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" TRIPLETLAB_BIN "' " + args +
                            " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const { return triplet::read_text(dir_ / name); }

  std::vector<std::vector<std::string>> rows(const std::string& name) const {
    std::istringstream is(read(name));
    std::vector<std::vector<std::string>> out;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      std::vector<std::string> fields;
      std::stringstream ls(line);
      std::string f;
      while (std::getline(ls, f, ',')) fields.push_back(f);
      out.push_back(fields);
    }
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenDataRowCountAndDeterminism) {
  ASSERT_EQ(run("gen-data --classes 8 --per-class 32 --dim 16 --spread 2.0 --seed 0 --out a.csv"), 0);
  ASSERT_EQ(run("gen-data --classes 8 --per-class 32 --dim 16 --spread 2.0 --seed 0 --out b.csv"), 0);
  EXPECT_EQ(rows("a.csv").size(), 256u);
  EXPECT_EQ(rows("a.csv")[0].size(), 17u);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
  const auto m = triplet::read_json(dir_ / "a.csv.manifest.json");
  EXPECT_EQ(m["command"], "gen-data");
  EXPECT_EQ(m["seed"], 0);
  EXPECT_EQ(m["outputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("gen-data --classes 1"), 1);
  EXPECT_EQ(run("simulate --resolution 1"), 1);
  EXPECT_EQ(run("simulate --loss sct"), 1);
  EXPECT_EQ(run("no-such-command"), 1);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("train --data missing.csv"), 2);
}

TEST_F(Cli, MalformedDataIsDataError) {
  std::ofstream(dir_ / "bad.csv") << "label,x0,x1\n0,1,2\n1,3\n";
  EXPECT_EQ(run("diagram --data bad.csv"), 2);
  std::ofstream(dir_ / "one.csv") << "0,1,0\n0,0,1\n";
  EXPECT_EQ(run("diagram --data one.csv"), 0);
  EXPECT_EQ(rows("diagram.csv").size(), 0u);
  EXPECT_EQ(run("eval --data one.csv --k 1"), 0);
}

TEST_F(Cli, ZeroVectorIsNumericError) {
  std::ofstream(dir_ / "zero.csv") << "0,0,0\n0,1,0\n1,0,1\n";
  EXPECT_EQ(run("diagram --data zero.csv"), 3);
}

TEST_F(Cli, SimulateGridAndFixedPoint) {
  ASSERT_EQ(run("simulate --p 0 --resolution 41 --out-prefix f"), 0);
  const auto r = rows("f.csv");
  ASSERT_EQ(r.size(), 1681u);
  const auto& last = r.back();
  EXPECT_EQ(last[0], "1");
  EXPECT_EQ(last[1], "1");
  for (int k = 2; k < 6; ++k) EXPECT_LE(std::abs(std::stod(last[static_cast<std::size_t>(k)])), 1e-12);
  EXPECT_NE(read("f.svg").find("</svg>"), std::string::npos);
}

TEST_F(Cli, SimulateEntangledFieldPushesHardNegativesCloser) {
  ASSERT_EQ(run("simulate --p 1 --out-prefix f"), 0);
  bool found = false;
  for (const auto& row : rows("f.csv")) {
    if (std::stod(row[1]) > std::stod(row[0]) && std::stod(row[5]) > 0.0) found = true;
  }
  EXPECT_TRUE(found);
}

TEST_F(Cli, TrajectoryRows) {
  ASSERT_EQ(run("trajectory --s-ap 0.2 --s-an 0.4 --steps 7 --loss margin --margin 0.1"), 0);
  const auto r = rows("trajectory.csv");
  ASSERT_EQ(r.size(), 8u);
  EXPECT_EQ(r[0][1], "0.2");
}

TEST_F(Cli, TrainOutputsAndDeterminism) {
  ASSERT_EQ(run("gen-data --classes 6 --per-class 8 --out d.csv"), 0);
  const std::string args = "train --data d.csv --epochs 4 --classes-per-batch 4 --snapshot-every 2 --out-prefix ";
  ASSERT_EQ(run(args + "a"), 0);
  ASSERT_EQ(run(args + "b"), 0);
  EXPECT_EQ(read("a.log.json"), read("b.log.json"));
  EXPECT_EQ(read("a.weights.json"), read("b.weights.json"));
  EXPECT_EQ(read("a.snapshot-0004.csv"), read("b.snapshot-0004.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a.snapshot-0002.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a.recall.svg"));
  EXPECT_TRUE(fs::exists(dir_ / "a.hard.svg"));
  const auto log = triplet::read_json(dir_ / "a.log.json");
  EXPECT_EQ(log["epochs"].size(), 4u);
  EXPECT_EQ(rows("a.log.csv").size(), 4u);
}

TEST_F(Cli, ZeroLearningRateIsFlat) {
  ASSERT_EQ(run("gen-data --classes 6 --per-class 8 --out d.csv"), 0);
  ASSERT_EQ(run("train --data d.csv --epochs 5 --classes-per-batch 4 --lr 0"), 0);
  const auto r = rows("train.log.csv");
  for (const auto& row : r) EXPECT_EQ(row[3], r[0][3]);
}

TEST_F(Cli, DiagramWithWeightsAndSpreadZeroIdentity) {
  ASSERT_EQ(run("gen-data --classes 5 --per-class 4 --dim 8 --spread 0 --out z.csv"), 0);
  ASSERT_EQ(run("diagram --data z.csv"), 0);
  const auto r = rows("diagram.csv");
  ASSERT_EQ(r.size(), 20u);
  for (const auto& row : r) {
    EXPECT_DOUBLE_EQ(std::stod(row[2]), 1.0);
    EXPECT_LT(std::stod(row[3]), 1.0);
    EXPECT_EQ(row[4], "0");
  }
  ASSERT_EQ(run("train --data z.csv --epochs 2 --classes-per-batch 2 --out-prefix m"), 0);
  EXPECT_EQ(run("diagram --data z.csv --weights m.weights.json --out-prefix w"), 0);
  EXPECT_EQ(rows("w.csv").size(), 20u);
  ASSERT_EQ(run("gen-data --classes 5 --per-class 4 --dim 6 --out other.csv"), 0);
  EXPECT_EQ(run("diagram --data other.csv --weights m.weights.json"), 2);
}

TEST_F(Cli, EvalWritesRecallPerK) {
  ASSERT_EQ(run("gen-data --classes 4 --per-class 10 --out d.csv"), 0);
  ASSERT_EQ(run("eval --data d.csv --k 1,3 --out e.json"), 0);
  const auto j = triplet::read_json(dir_ / "e.json");
  ASSERT_EQ(j["results"].size(), 2u);
  EXPECT_EQ(j["results"][1]["k"], 3);
  EXPECT_EQ(j["results"][0]["num_queries"], 40);
}

TEST_F(Cli, ReplayReproducesChecksums) {
  ASSERT_EQ(run("gen-data --classes 4 --per-class 6 --out d.csv"), 0);
  ASSERT_EQ(run("train --data d.csv --epochs 3 --classes-per-batch 3 --loss sct --freeze-anchor --out-prefix t"), 0);
  const std::string before = read("t.log.json");
  fs::remove(dir_ / "t.log.json");
  EXPECT_EQ(run("replay t.manifest.json"), 0);
  EXPECT_EQ(read("t.log.json"), before);
  EXPECT_EQ(triplet::read_json(dir_ / "t.manifest.json")["config"]["freeze-anchor"], true);
  std::ofstream(dir_ / "d.csv", std::ios::app) << "3,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5\n";
  EXPECT_EQ(run("replay t.manifest.json"), 2);
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  ASSERT_EQ(run("simulate --resolution 3", "TRIPLETLAB_OUT_DIR=out"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "field.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "field.manifest.json"));
  EXPECT_EQ(run("replay out/field.manifest.json", "TRIPLETLAB_OUT_DIR=out"), 0);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "out"));
}
