#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "triplet/io.hpp"
#include "triplet/svg.hpp"

using namespace triplet;

namespace {

// Checks element nesting; comments and processing instructions are skipped.
bool balanced_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = doc.find('<', pos)) != std::string::npos) {
    const std::size_t end = doc.find('>', pos);
    if (end == std::string::npos) return false;
    std::string tag = doc.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    stack.push_back(tag.substr(0, tag.find(' ')));
  }
  return stack.empty();
}

bool self_contained(const std::string& doc) {
  return doc.find("href") == std::string::npos && doc.find("<script") == std::string::npos &&
         doc.find("url(") == std::string::npos;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(FieldCsv, HeaderAndRowCount) {
  GridSpec g;
  g.resolution = 5;
  const VectorField f = vector_field(g, StepParams{});
  std::ostringstream os;
  write_field_csv(os, f);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "s_ap,s_an,d_sap,d_san,d_sap_total,d_san_total");
  EXPECT_EQ(count(text, "\n"), 26u);
}

TEST(DiagramCsv, FlagsHardPoints) {
  const std::vector<DiagramPoint> pts = {{0, {0.9, 0.1}}, {1, {0.2, 0.7}}};
  const std::vector<Label> labels = {4, 5};
  std::ostringstream os;
  write_diagram_csv(os, pts, labels);
  EXPECT_EQ(os.str(), "index,label,s_ap,s_an,hard\n0,4,0.9,0.1,0\n1,5,0.2,0.7,1\n");
}

TEST(ModelJson, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  for (int hidden : {0, 7}) {
    const Model m = Model::init(5, 3, hidden, rng);
    const Model back = model_from_json(Json::parse(to_json(m).dump()));
    EXPECT_EQ(back.weight, m.weight);
    EXPECT_EQ(back.has_hidden(), m.has_hidden());
    if (hidden) {
      EXPECT_EQ(back.hidden_weight, m.hidden_weight);
      EXPECT_EQ(back.hidden_bias, m.hidden_bias);
    }
  }
}

TEST(ModelJson, MalformedRejected) {
  EXPECT_THROW(model_from_json(Json::parse("{}")), ParseError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"weight": [[1, 2], [3]]})")), ParseError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"weight": [[1], [3]]})")), ParseError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"weight": [["a", 1]]})")), ParseError);
}

TEST(EpochJson, Fields) {
  EpochLog l;
  l.epoch = 3;
  l.recall_at_1 = 0.5;
  const Json j = to_json(l);
  EXPECT_EQ(j["epoch"], 3);
  EXPECT_EQ(j["recall_at_1"], 0.5);
  EXPECT_FALSE(j.contains("snapshot_size"));
}

TEST(Svg, QuiverWellFormed) {
  GridSpec g;
  g.resolution = 11;
  StepParams p;
  p.entanglement_p = 1.0;
  const std::string doc = svg::quiver(vector_field(g, p), "a <title> & more");
  EXPECT_TRUE(balanced_xml(doc));
  EXPECT_TRUE(self_contained(doc));
  EXPECT_NE(doc.find("a &lt;title&gt; &amp; more"), std::string::npos);
  EXPECT_EQ(count(doc, "<path ") + count(doc, "<circle "), 121u);
}

TEST(Svg, ScatterColorsHardPoints) {
  const std::vector<TripletCoord> pts = {{0.9, 0.1}, {0.1, 0.9}, {0.2, 0.8}};
  const std::string doc = svg::scatter(pts, "diagram");
  EXPECT_TRUE(balanced_xml(doc));
  EXPECT_TRUE(self_contained(doc));
  EXPECT_EQ(count(doc, "fill=\"#c0392b\""), 2u);
  EXPECT_EQ(count(doc, "stroke-dasharray"), 1u);
}

TEST(Svg, LinesAndPathWellFormed) {
  const std::vector<svg::Series> s = {{"a", {0.1, 0.2, 0.3}}, {"b", {0.5}}};
  EXPECT_TRUE(balanced_xml(svg::lines(s, 0.0, 1.0, "t", "x", "y")));
  const std::vector<TripletCoord> path = {{0, 0}, {0.5, 0.2}};
  const std::string doc = svg::path(path, "p");
  EXPECT_TRUE(balanced_xml(doc));
  EXPECT_EQ(count(doc, "<polyline"), 1u);
}
