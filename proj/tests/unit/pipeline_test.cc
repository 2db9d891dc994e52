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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "json.hpp"
#include "raremine/corpus.h"
#include "raremine/hashing.h"
#include "raremine/pipeline.h"
#include "test_util.h"

namespace raremine {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const fs::path kFixture = fs::path(RAREMINE_TEST_DATA) / "fixture300";

// Copies the committed fixture into a scratch directory and applies `edit` to
// its configuration.
fs::path StageFixture(const testing::TempDir& dir,
                      const std::function<void(ordered_json&)>& edit = nullptr) {
  for (const auto& entry : fs::directory_iterator(kFixture)) {
    fs::copy_file(entry.path(), dir.path() / entry.path().filename());
  }
  auto config = ordered_json::parse(ReadFile(dir.path() / "config.json"));
  if (edit) edit(config);
  WriteFile(dir.path() / "config.json", config.dump(2));
  return dir.path() / "config.json";
}

std::map<std::string, fs::file_time_type> Mtimes(const fs::path& out) {
  std::map<std::string, fs::file_time_type> m;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.is_regular_file()) m[e.path().string()] = fs::last_write_time(e.path());
  }
  return m;
}

std::map<std::string, std::string> Hashes(const fs::path& out) {
  std::map<std::string, std::string> m;
  for (const auto& name : {output_files::kIForest, output_files::kLayout,
                           output_files::kOutliers, output_files::kAssessments,
                           output_files::kManifest}) {
    const auto p = out / name;
    if (fs::exists(p)) m[std::string(name)] = Sha256File(p);
  }
  return m;
}

RunConfig ParseWith(const std::function<void(ordered_json&)>& edit) {
  auto config = ordered_json::parse(ReadFile(kFixture / "config.json"));
  edit(config);
  return ParseRunConfig(config.dump(), kFixture);
}

TEST(RunConfig, FixtureParses) {
  const auto c = LoadRunConfig(kFixture / "config.json");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.output_dir, kFixture / "out");
  EXPECT_EQ(c.strategy.kind, StrategyKind::kRandomTarget);
  EXPECT_EQ(c.strategy.target_concepts,
            (std::set<std::string>{"bicycle", "construction_vehicle"}));
  EXPECT_EQ(c.strategy.seed, 7u);
}

TEST(RunConfig, SeedDerivesStageSeeds) {
  RunConfig a, b;
  a.SetSeed(1);
  b.SetSeed(2);
  EXPECT_NE(a.outlier.iforest.seed, b.outlier.iforest.seed);
  EXPECT_NE(a.tsne.seed, b.tsne.seed);
  EXPECT_NE(a.outlier.iforest.seed, a.tsne.seed);
  EXPECT_EQ(a.outlier.iforest.seed, DeriveSeed(1, "iforest"));
  EXPECT_EQ(a.tsne.seed, DeriveSeed(1, "tsne"));
}

TEST(RunConfig, RejectsBadConfigs) {
  EXPECT_THROW(ParseRunConfig("{", kFixture), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["colour"] = 1; }), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["iforest"]["trees"] = 10; }), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["corpus"]["crops"] = "missing.jsonl"; }),
               ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c.erase("vocabulary"); }), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["seed"] = "seven"; }), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["strategy"]["random_fraction"] = 0.95; }),
               ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["strategy"]["kind"] = "greedy"; }), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["knn"]["k"] = 0; }), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["tsne"]["perplexity"] = -1; }), ConfigError);
  EXPECT_THROW(ParseWith([](auto& c) { c["iforest"]["contamination"] = 1.5; }),
               ConfigError);
  EXPECT_NO_THROW(ParseWith([](auto& c) {
    c["lof"] = {{"n_neighbors", 5}, {"contamination", 0.1}, {"ensemble", "intersection"}};
    c["class_aware"] = {{"enabled", true}, {"contamination", {{"bicycle", 0.3}}}};
  }));
}

TEST(RunValidate, FixtureIsClean) {
  const auto report = RunValidate(LoadRunConfig(kFixture / "config.json"));
  EXPECT_TRUE(report.violations.empty());
}

TEST(RunValidate, UnknownTargetIsAViolation) {
  const auto c = ParseWith([](auto& c) { c["strategy"]["target_concepts"] = {"zeppelin"}; });
  EXPECT_FALSE(RunValidate(c).violations.empty());
}

TEST(RunMine, CacheHitLeavesOutputsUntouched) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  const auto first = RunMine(config);
  for (const auto& s : first.stages) EXPECT_FALSE(s.cached) << s.stage;
  EXPECT_EQ(first.objects, 300u);
  const auto before = Mtimes(config.output_dir);
  const auto hashes = Hashes(config.output_dir);
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  const auto second = RunMine(config);
  for (const auto& s : second.stages) EXPECT_TRUE(s.cached) << s.stage;
  EXPECT_EQ(Mtimes(config.output_dir), before);
  EXPECT_EQ(Hashes(config.output_dir), hashes);
}

TEST(RunMine, NoCacheRecomputesIdentically) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  RunMine(config);
  const auto hashes = Hashes(config.output_dir);
  const auto again = RunMine(config, false);
  for (const auto& s : again.stages) EXPECT_FALSE(s.cached) << s.stage;
  EXPECT_EQ(Hashes(config.output_dir), hashes);
}

TEST(RunMine, CorruptCacheRecomputes) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  RunMine(config);
  const auto hashes = Hashes(config.output_dir);
  WriteFile(config.output_dir / output_files::kCache, "{not json");
  const auto again = RunMine(config);
  for (const auto& s : again.stages) EXPECT_FALSE(s.cached) << s.stage;
  EXPECT_EQ(Hashes(config.output_dir), hashes);
}

TEST(RunMine, EditedOutputIsRecomputed) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  RunMine(config);
  const auto hashes = Hashes(config.output_dir);
  WriteFile(config.output_dir / output_files::kLayout, "object_id,y0,y1\n");
  const auto again = RunMine(config);
  std::map<std::string, bool> cached;
  for (const auto& s : again.stages) cached[s.stage] = s.cached;
  EXPECT_TRUE(cached["iforest"]);
  EXPECT_FALSE(cached["tsne"]);
  EXPECT_EQ(Hashes(config.output_dir), hashes);
}

TEST(RunMine, ParameterChangeInvalidatesDownstreamOnly) {
  testing::TempDir dir;
  const auto path = StageFixture(dir);
  RunMine(LoadRunConfig(path));
  auto json = ordered_json::parse(ReadFile(path));
  json["knn"]["quantile"] = 0.9;
  WriteFile(path, json.dump(2));
  const auto again = RunMine(LoadRunConfig(path));
  std::map<std::string, bool> cached;
  for (const auto& s : again.stages) cached[s.stage] = s.cached;
  EXPECT_TRUE(cached["iforest"]);
  EXPECT_TRUE(cached["tsne"]);
  EXPECT_FALSE(cached["outliers"]);
  EXPECT_FALSE(cached["assessments"]);
}

TEST(RunMine, SummaryMatchesTables) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  const auto summary = RunMine(config);
  const auto outliers = ParseOutlierTable(ReadFile(config.output_dir / output_files::kOutliers));
  const auto assessments =
      ParseAssessments(ReadFile(config.output_dir / output_files::kAssessments));
  ASSERT_EQ(outliers.size(), 300u);
  ASSERT_EQ(assessments.size(), 300u);
  std::size_t o_if = 0, o_tsne = 0, any = 0, rare = 0;
  for (std::size_t i = 0; i < outliers.size(); ++i) {
    o_if += outliers[i].o_if;
    o_tsne += outliers[i].o_tsne;
    any += outliers[i].o_combined > 0;
    rare += assessments[i].r_flag;
    EXPECT_EQ(assessments[i].object_id, outliers[i].object_id);
    EXPECT_EQ(assessments[i].o_combined, outliers[i].o_combined);
  }
  EXPECT_EQ(summary.o_if, o_if);
  EXPECT_EQ(summary.o_tsne, o_tsne);
  EXPECT_EQ(summary.outliers, any);
  EXPECT_EQ(summary.rare, rare);
}

TEST(RunMine, ThreadCountDoesNotChangeOutputs) {
  testing::TempDir one, four;
  const auto a = LoadRunConfig(StageFixture(one, [](auto& c) { c["threads"] = 1; }));
  const auto b = LoadRunConfig(StageFixture(four, [](auto& c) { c["threads"] = 4; }));
  RunMine(a);
  RunMine(b);
  RunSelect(a);
  RunSelect(b);
  EXPECT_EQ(Hashes(a.output_dir), Hashes(b.output_dir));
}

TEST(RunMine, LofIntersectionFlagsSubsetOfForest) {
  testing::TempDir base, lof;
  const auto a = LoadRunConfig(StageFixture(base));
  const auto b = LoadRunConfig(StageFixture(lof, [](auto& c) {
    c["lof"] = {{"n_neighbors", 10}, {"contamination", 0.2}, {"ensemble", "intersection"}};
  }));
  RunMine(a);
  RunMine(b);
  const auto fa = ParseIForestTable(ReadFile(a.output_dir / output_files::kIForest));
  const auto fb = ParseIForestTable(ReadFile(b.output_dir / output_files::kIForest));
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(fa[i].if_score, fb[i].if_score);
    EXPECT_LE(fb[i].o_if, fa[i].o_if);
  }
}

TEST(RunMine, ClassAwareRuns) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir, [](auto& c) {
    c["class_aware"] = {{"enabled", true}, {"contamination", {{"bicycle", 0.3}}}};
  }));
  const auto summary = RunMine(config);
  EXPECT_EQ(summary.objects, 300u);
  EXPECT_GT(summary.o_if, 0u);
}

// Hashes of the committed fixture's outputs, listed in sha256sum format.
TEST(RunMine, FixtureGoldens) {
  std::map<std::string, std::string> golden;
  std::istringstream in(ReadFile(fs::path(RAREMINE_TEST_DATA) / "fixture300.sha256"));
  std::string hash, name;
  while (in >> hash >> name) golden[name] = hash;
  ASSERT_EQ(golden.size(), 5u);
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  RunMine(config);
  RunSelect(config);
  EXPECT_EQ(Hashes(config.output_dir), golden);
}

TEST(RunSelect, RandomKindNeedsNoAssessments) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir, [](auto& c) {
    c["strategy"] = {{"kind", "random"}, {"random_fraction", 0.1}, {"mined_fraction", 0.1}};
  }));
  const auto m = RunSelect(config);
  EXPECT_EQ(m.selected_scenes.size(), 6u);
  EXPECT_TRUE(fs::exists(config.output_dir / output_files::kManifest));
}

TEST(RunSelect, TargetKindNeedsMine) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  EXPECT_THROW(RunSelect(config), Error);
  RunMine(config);
  const auto m = RunSelect(config);
  EXPECT_LE(m.selected_scenes.size(), 6u);
  for (const auto& scene : m.selected_scenes) {
    EXPECT_NO_THROW(RunExplainScene(config, scene));
    EXPECT_TRUE(fs::exists(config.output_dir / "explain" / (scene + ".txt")));
  }
  EXPECT_THROW(RunExplainScene(config, "scene-nope"), Error);
}

TEST(RunPlot, WritesSvgFiles) {
  testing::TempDir dir;
  const auto config = LoadRunConfig(StageFixture(dir));
  RunMine(config);
  for (auto key : {ColorKey::kCategory, ColorKey::kOIf, ColorKey::kOTsne, ColorKey::kOCombined}) {
    const auto path = RunPlotScatter(config, key);
    EXPECT_EQ(path.filename(), "scatter_" + std::string(ColorKeyName(key)) + ".svg");
    const auto svg = ReadFile(path);
    std::size_t circles = 0;
    for (auto p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) {
      ++circles;
    }
    EXPECT_EQ(circles, 300u + 0u) << ColorKeyName(key);
  }
  const auto bars = RunPlotBars(config, "obj-000", 5);
  EXPECT_TRUE(fs::exists(bars));
  EXPECT_THROW(RunPlotBars(config, "obj-nope"), Error);
}

}  // namespace
}  // namespace raremine
