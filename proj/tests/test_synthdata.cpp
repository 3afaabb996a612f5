#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "triplet/synthdata.hpp"

using namespace triplet;

namespace {

double foreign_nearest_fraction(const LabeledDataset& ds) {
  std::size_t foreign = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j != i && ds.points[i].dot(ds.points[j]) > ds.points[i].dot(ds.points[best])) best = j;
    }
    foreign += ds.labels[best] != ds.labels[i] ? 1 : 0;
  }
  return static_cast<double>(foreign) / static_cast<double>(ds.size());
}

}  // namespace

TEST(Generate, ZeroSpreadPutsEveryPointOnItsCenter) {
  const LabeledDataset ds = generate({4, 5, 6, 0.0, 1});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (ds.labels[i] == ds.labels[j]) {
        EXPECT_NEAR(ds.points[i].dot(ds.points[j]), 1.0, 1e-12);
      }
    }
  }
}

TEST(Generate, UnitNormAndExactClassSizes) {
  const LabeledDataset ds = generate({8, 32, 16, 2.0, 0});
  ASSERT_EQ(ds.size(), 256u);
  for (const auto& p : ds.points) EXPECT_NEAR(p.norm(), 1.0, 1e-9);
  for (const auto& [label, members] : ds.by_class()) EXPECT_EQ(members.size(), 32u);
}

TEST(Generate, DeterministicInSeed) {
  const DatasetConfig cfg{3, 4, 5, 0.7, 42};
  EXPECT_EQ(generate(cfg), generate(cfg));
  DatasetConfig other = cfg;
  other.seed = 43;
  EXPECT_FALSE(generate(cfg) == generate(other));
  std::ostringstream a, b;
  write_csv(a, generate(cfg));
  write_csv(b, generate(cfg));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Generate, LargerSpreadMixesNeighbours) {
  const double wide = foreign_nearest_fraction(generate({8, 32, 16, 2.0, 0}));
  const double tight = foreign_nearest_fraction(generate({8, 32, 16, 0.1, 0}));
  EXPECT_GT(wide, tight);
}

TEST(Generate, RejectsBadConfig) {
  EXPECT_THROW(generate({1, 4, 4, 0.1, 0}), InvalidArgument);
  EXPECT_THROW(generate({2, 1, 4, 0.1, 0}), InvalidArgument);
  EXPECT_THROW(generate({2, 4, 1, 0.1, 0}), InvalidArgument);
  EXPECT_THROW(generate({2, 4, 4, -0.1, 0}), InvalidArgument);
}

TEST(DatasetCsv, RoundTrip) {
  const LabeledDataset ds = generate({3, 4, 5, 1.0, 9});
  const auto path = std::filesystem::temp_directory_path() / "triplet_roundtrip.csv";
  save(ds, path);
  const LabeledDataset back = load(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.labels, ds.labels);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_LE((back.points[i] - ds.points[i]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DatasetCsv, HeaderLine) {
  std::ostringstream os;
  write_csv(os, generate({2, 2, 3, 0.0, 0}));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "label,x0,x1,x2");
}

TEST(DatasetCsv, ParseErrors) {
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), ParseError);

  std::istringstream ragged("label,x0,x1\n0,0.1,0.2\n1,0.3\n");
  try {
    read_csv(ragged);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }

  std::istringstream junk("label,x0,x1\n0,0.1,abc\n");
  EXPECT_THROW(read_csv(junk), ParseError);
  EXPECT_THROW(load("/nonexistent/dir/file.csv"), IoError);
}
