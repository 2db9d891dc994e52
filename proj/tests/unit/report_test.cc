/*
 * Copyright 2026 The raremine Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <regex>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "raremine/report.h"

namespace raremine {
namespace {

struct Circle {
  double cx, cy;
  std::string fill;
};

std::vector<Circle> Circles(const std::string& svg) {
  static const std::regex re(R"re(<circle cx="([-0-9.]+)" cy="([-0-9.]+)" r="[0-9.]+" fill="(#[0-9a-f]{6})"/>)re");
  std::vector<Circle> out;
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) {
    out.push_back({std::stod((*it)[1]), std::stod((*it)[2]), (*it)[3]});
  }
  return out;
}

std::vector<double> BarWidths(const std::string& svg) {
  static const std::regex re(R"re(<rect x="180.0000" y="[0-9.]+" width="([0-9.]+)")re");
  std::vector<double> out;
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) {
    out.push_back(std::stod((*it)[1]));
  }
  return out;
}

Matrix ThreePoints() { return Matrix(3, 2, {0.0, 0.0, 1.0, 2.0, -3.0, 0.5}); }

TEST(ColorKey, NamesRoundTrip) {
  for (auto k : {ColorKey::kCategory, ColorKey::kOIf, ColorKey::kOTsne, ColorKey::kOCombined}) {
    EXPECT_EQ(ParseColorKey(ColorKeyName(k)), k);
  }
  EXPECT_THROW(ParseColorKey("rainbow"), ConfigError);
}

TEST(RenderScatter, OneRedTwoBlue) {
  const std::vector<std::uint8_t> flags = {1, 0, 0};
  const auto svg = RenderScatter(FlagScatter(ThreePoints(), flags));
  const auto circles = Circles(svg);
  ASSERT_EQ(circles.size(), 3u);
  int red = 0, blue = 0;
  for (const auto& c : circles) {
    red += c.fill == kOutlierRed;
    blue += c.fill == kInlierBlue;
  }
  EXPECT_EQ(red, 1);
  EXPECT_EQ(blue, 2);
  // Flagged markers are drawn last.
  EXPECT_EQ(circles.back().fill, kOutlierRed);
}

TEST(RenderScatter, ByteDeterministic) {
  const std::vector<std::uint8_t> flags = {0, 1, 0};
  EXPECT_EQ(RenderScatter(FlagScatter(ThreePoints(), flags)),
            RenderScatter(FlagScatter(ThreePoints(), flags)));
}

TEST(RenderScatter, CoordinatesStayInsideMargin) {
  Matrix pts(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    pts(i, 0) = std::sin(0.3 * i) * 40.0 + 1000.0;
    pts(i, 1) = std::cos(0.7 * i) * 0.01;
  }
  auto spec = FlagScatter(pts, std::vector<std::uint8_t>(50, 0));
  spec.width = 600;
  spec.height = 400;
  const auto circles = Circles(RenderScatter(spec));
  ASSERT_EQ(circles.size(), 50u);
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (const auto& c : circles) {
    min_x = std::min(min_x, c.cx);
    max_x = std::max(max_x, c.cx);
    min_y = std::min(min_y, c.cy);
    max_y = std::max(max_y, c.cy);
  }
  EXPECT_GE(min_x, 600 * kCanvasMargin - 1e-4);
  EXPECT_LE(max_x, 600 * (1 - kCanvasMargin) + 1e-4);
  EXPECT_GE(min_y, 400 * kCanvasMargin - 1e-4);
  EXPECT_LE(max_y, 400 * (1 - kCanvasMargin) + 1e-4);
}

TEST(RenderScatter, Errors) {
  EXPECT_THROW(RenderScatter(FlagScatter(Matrix(0, 2), {})), Error);
  auto spec = FlagScatter(ThreePoints(), std::vector<std::uint8_t>{0, 0, 0});
  spec.slots[1] = 7;
  EXPECT_THROW(RenderScatter(spec), Error);
  spec.slots[1] = 0;
  spec.width = 0;
  EXPECT_THROW(RenderScatter(spec), Error);
  EXPECT_THROW(FlagScatter(ThreePoints(), std::vector<std::uint8_t>{0}), Error);
}

TEST(AssessmentScatter, CombinedAndCategoryPalettes) {
  Layout2D layout{ThreePoints(), {"a", "b", "c"}};
  std::vector<ObjectAssessment> as(3);
  for (std::size_t i = 0; i < 3; ++i) {
    as[i].object_id = layout.row_ids[i];
    as[i].o_combined = static_cast<std::uint8_t>(i + 1);
    as[i].o_if = as[i].o_combined & 1;
    as[i].o_tsne = as[i].o_combined >> 1;
  }
  as[0].category = Category::kCommon;
  as[1].category = Category::kRare;
  as[2].category = Category::kTarget;
  const auto combined = AssessmentScatter(layout, as, ColorKey::kOCombined);
  EXPECT_EQ(combined.palette.size(), 4u);
  EXPECT_EQ(combined.slots, (std::vector<std::size_t>{1, 2, 3}));
  const auto tsne = AssessmentScatter(layout, as, ColorKey::kOTsne);
  EXPECT_EQ(tsne.slots, (std::vector<std::size_t>{0, 1, 1}));
  const auto category = Circles(RenderScatter(AssessmentScatter(layout, as, ColorKey::kCategory)));
  ASSERT_EQ(category.size(), 3u);
  EXPECT_EQ(category[0].fill, "#1f77b4");
  EXPECT_EQ(category[1].fill, "#ff7f0e");
  EXPECT_EQ(category[2].fill, "#d62728");
  as[1].object_id = "zzz";
  EXPECT_THROW(AssessmentScatter(layout, as, ColorKey::kOIf), Error);
}

TEST(RenderConceptBars, ProportionalWidths) {
  BarChartSpec spec;
  spec.ranking = {{"car", 1.0}, {"truck", 0.5}};
  const auto w = BarWidths(RenderConceptBars(spec));
  ASSERT_EQ(w.size(), 2u);
  EXPECT_DOUBLE_EQ(w[0], 2.0 * w[1]);
}

TEST(RenderConceptBars, SingleFullWidthBar) {
  BarChartSpec spec;
  spec.ranking = {{"bicycle", 1.0}};
  spec.width = 500;
  const auto w = BarWidths(RenderConceptBars(spec));
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0], 500 - 180 - 70);
}

TEST(RenderConceptBars, NegativeScoreClampsToZero) {
  BarChartSpec spec;
  spec.ranking = {{"car", 0.2}, {"cone", -0.35}};
  const auto svg = RenderConceptBars(spec);
  const auto w = BarWidths(svg);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_NE(svg.find(">-0.3500<"), std::string::npos);
}

TEST(RenderConceptBars, TopMAndEscaping) {
  BarChartSpec spec;
  for (int i = 0; i < 15; ++i) spec.ranking.push_back({"c" + std::to_string(i), 0.9 - i * 0.05});
  spec.ranking[0].name = "a<b & \"c\"";
  const auto svg = RenderConceptBars(spec);
  EXPECT_EQ(BarWidths(svg).size(), 10u);
  EXPECT_NE(svg.find("a&lt;b &amp; &quot;c&quot;"), std::string::npos);
  spec.top_m = 0;
  EXPECT_THROW(RenderConceptBars(spec), Error);
  spec.top_m = 3;
  spec.ranking.clear();
  EXPECT_THROW(RenderConceptBars(spec), Error);
}

TEST(XmlEscape, AllSpecials) {
  EXPECT_EQ(XmlEscape("<&>\"'"), "&lt;&amp;&gt;&quot;&apos;");
  EXPECT_EQ(XmlEscape("plain"), "plain");
}

struct ExplainFixture {
  SelectionManifest manifest;
  SceneIndex scenes;
  std::vector<ObjectAssessment> assessments;
};

ExplainFixture MakeExplainFixture() {
  ExplainFixture f;
  ObjectAssessment a;
  a.object_id = "bike-7";
  a.scene_id = "scene-01";
  a.detector_class = "bicycle";
  a.top_concept = "bicycle";
  a.top_score = 0.8;
  a.o_combined = 2;
  a.o_tsne = 1;
  a.concepts = {"bicycle"};
  a.category = Category::kTarget;
  f.assessments.push_back(a);
  f.scenes["scene-01"] = {"bike-7"};
  f.scenes["scene-02"] = {};
  f.manifest.strategy.kind = StrategyKind::kRandomTarget;
  f.manifest.strategy.target_concepts = {"bicycle"};
  f.manifest.selected_scenes = {"scene-01", "scene-02"};
  SceneExplanation hit;
  hit.scene_id = "scene-01";
  hit.reason = SceneReason::kTargetHit;
  hit.evidence_total = 1;
  hit.evidence.push_back({"bike-7", "bicycle", "bicycle", 0.8, 2, 0, "outlier"});
  SceneExplanation random;
  random.scene_id = "scene-02";
  f.manifest.explanations = {hit, random};
  return f;
}

TEST(ExplainScene, TargetHitCitesObjectAndConcept) {
  const auto f = MakeExplainFixture();
  const auto text = ExplainScene(f.manifest, f.scenes, f.assessments, "scene-01");
  EXPECT_NE(text.find("reason: target_hit"), std::string::npos);
  EXPECT_NE(text.find("bike-7"), std::string::npos);
  EXPECT_NE(text.find("top_concept=bicycle"), std::string::npos);
  EXPECT_NE(text.find("O=2 (o_tsne=1, o_if=0)"), std::string::npos);
  EXPECT_NE(text.find("R=0"), std::string::npos);
  EXPECT_NE(text.find("clause: "), std::string::npos);
}

TEST(ExplainScene, RandomSceneHasNoEvidence) {
  const auto f = MakeExplainFixture();
  const auto text = ExplainScene(f.manifest, f.scenes, f.assessments, "scene-02");
  EXPECT_NE(text.find("reason: random"), std::string::npos);
  EXPECT_EQ(text.find("evidence"), std::string::npos);
}

TEST(ExplainScene, UnknownSceneThrows) {
  const auto f = MakeExplainFixture();
  EXPECT_THROW(ExplainScene(f.manifest, f.scenes, f.assessments, "scene-99"), Error);
}

TEST(ExplainObject, ListsAssessment) {
  auto f = MakeExplainFixture();
  f.assessments[0].ranked = {{"bicycle", 0.8}, {"car", 0.1}};
  const auto text = ExplainObject(f.assessments, "bike-7");
  EXPECT_NE(text.find("object: bike-7"), std::string::npos);
  EXPECT_NE(text.find("top concept: bicycle"), std::string::npos);
  EXPECT_THROW(ExplainObject(f.assessments, "nope"), Error);
}

}  // namespace
}  // namespace raremine
