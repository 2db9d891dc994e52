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
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "raremine/iforest.h"
#include "raremine/log.h"
#include "raremine/outliers.h"
#include "raremine/rng.h"
#include "test_util.h"

namespace raremine {
namespace {

using testing::RandomMatrix;

// 7 x 7 unit grid plus an optional point ten spacings past its right edge.
Matrix Grid(bool with_outlier) {
  Matrix x(with_outlier ? 50 : 49, 2);
  for (std::size_t i = 0; i < 49; ++i) {
    x(i, 0) = static_cast<double>(i % 7);
    x(i, 1) = static_cast<double>(i / 7);
  }
  if (with_outlier) {
    x(49, 0) = 16.0;
    x(49, 1) = 3.0;
  }
  return x;
}

TEST(KnnMeanDistance, EqualsBruteForceExactly) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 11 + rng.UniformIndex(190);
    const Matrix y = RandomMatrix(n, 2, rng, 5.0);
    EXPECT_EQ(KnnMeanDistance(y, 10, 1), oracle::KnnMean(y, 10)) << trial;
  }
}

TEST(KnnMeanDistance, IntegerLatticeTiesAreStable) {
  const Matrix g = Grid(false);
  EXPECT_EQ(KnnMeanDistance(g, 4, 1), oracle::KnnMean(g, 4));
  EXPECT_EQ(KnnMeanDistance(g, 4, 1), KnnMeanDistance(g, 4, 8));
}

TEST(KnnMeanDistance, RejectsTooFewRows) {
  EXPECT_THROW(KnnMeanDistance(Matrix(10, 2), 10), Error);
  EXPECT_THROW(KnnMeanDistance(Matrix(10, 2), 0), Error);
}

TEST(InterpolatedQuantile, LinearBetweenOrderStatistics) {
  const std::vector<double> v = {4, 1, 3, 2, 5};
  EXPECT_DOUBLE_EQ(InterpolatedQuantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(InterpolatedQuantile(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(InterpolatedQuantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(InterpolatedQuantile(v, 0.8), 4.2);
  EXPECT_THROW(InterpolatedQuantile({}, 0.5), Error);
}

TEST(TsneOutlierFlags, StrictThreshold) {
  KnnOutlierParams p;
  p.mode = ThresholdMode::kAbsolute;
  p.tau = 2.0;
  const std::vector<double> d = {1.0, 2.0, 2.5};
  EXPECT_EQ(TsneOutlierFlags(d, p), (FlagVector{0, 0, 1}));
}

TEST(TsneOutlierFlags, QuantileModeFlagsAboutTwentyPercent) {
  Rng rng(5);
  std::vector<double> d(1000);
  for (auto& v : d) v = rng.Uniform01();
  const auto flags = TsneOutlierFlags(d, KnnOutlierParams{});
  EXPECT_EQ(std::accumulate(flags.begin(), flags.end(), 0), 200);
}

TEST(CombineOutliers, AllFourPairs) {
  const FlagVector tsne = {0, 0, 1, 1};
  const FlagVector iforest = {0, 1, 0, 1};
  EXPECT_EQ(CombineOutliers(tsne, iforest), (std::vector<std::uint8_t>{0, 1, 2, 3}));
  for (std::uint8_t o = 0; o < 4; ++o) {
    const auto parts = DecodeCombined(o);
    EXPECT_EQ(2 * parts.o_tsne + parts.o_if, o);
  }
  EXPECT_THROW(CombineOutliers(FlagVector{2}, FlagVector{0}), Error);
  EXPECT_THROW(CombineOutliers(FlagVector{1, 0}, FlagVector{0}), Error);
  EXPECT_THROW(DecodeCombined(4), Error);
}

TEST(LofScores, InteriorGridPointNearOneAndMatchesOracle) {
  const Matrix g = Grid(true);
  LofParams p;
  p.n_neighbors = 8;
  const auto lof = LofScores(g, p, 1);
  const auto expected = oracle::Lof(g, 8);
  for (std::size_t i = 0; i < lof.size(); ++i) EXPECT_NEAR(lof[i], expected[i], 1e-12);
  const std::size_t centre = 3 * 7 + 3;
  EXPECT_GE(lof[centre], 0.9);
  EXPECT_LE(lof[centre], 1.1);
  EXPECT_EQ(std::max_element(lof.begin(), lof.end()) - lof.begin(), 49);
}

TEST(LofScores, MatchesOracleOnRandomData) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = RandomMatrix(80, 3, rng);
    LofParams p;
    p.n_neighbors = 10;
    const auto lof = LofScores(x, p, 1);
    const auto expected = oracle::Lof(x, 10);
    for (std::size_t i = 0; i < lof.size(); ++i) EXPECT_NEAR(lof[i], expected[i], 1e-12);
  }
}

TEST(LofFlags, PlantedOutlierFlagged) {
  LofParams p;
  p.n_neighbors = 4;
  p.contamination = 0.05;
  const auto flags = LofFlags(Grid(true), p, 1);
  EXPECT_EQ(flags[49], 1);
  EXPECT_EQ(std::accumulate(flags.begin(), flags.end(), 0), 2);
}

TEST(EnsembleCombine, SetRelations) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.UniformIndex(60);
    std::vector<FlagVector> sets(3, FlagVector(n));
    for (auto& s : sets) {
      for (auto& f : s) f = rng.Uniform01() < 0.3 ? 1 : 0;
    }
    const auto uni = EnsembleCombine(sets, EnsembleMode::kUnion);
    const auto inter = EnsembleCombine(sets, EnsembleMode::kIntersection);
    for (std::size_t i = 0; i < n; ++i) {
      const bool any = sets[0][i] || sets[1][i] || sets[2][i];
      const bool all = sets[0][i] && sets[1][i] && sets[2][i];
      EXPECT_EQ(uni[i], any ? 1 : 0);
      EXPECT_EQ(inter[i], all ? 1 : 0);
      EXPECT_LE(inter[i], sets[0][i]);
      EXPECT_GE(uni[i], sets[0][i]);
    }
  }
  EXPECT_THROW(EnsembleCombine({}, EnsembleMode::kUnion), Error);
}

TEST(ClassAwareOutliers, PerClassQuotasAndStability) {
  Rng rng(10);
  const Matrix x = RandomMatrix(90, 3, rng);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 90; ++i) labels.push_back(i % 3 == 0 ? "car" : "bicycle");
  IForestParams base;
  base.seed = 5;
  const std::map<std::string, double> per_class = {{"car", 0.1}};
  const auto flags = ClassAwareOutliers(x, labels, per_class, base, 1);
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < 90; ++i) counts[labels[i]] += flags[i];
  EXPECT_EQ(counts["car"], 3);
  EXPECT_EQ(counts["bicycle"], 12);

  // A new class leaves the others untouched.
  Matrix x2(91, 3);
  std::copy(x.data().begin(), x.data().end(), x2.data().begin());
  auto labels2 = labels;
  labels2.push_back("trailer");
  log::ScopedWarningCapture capture;
  const auto flags2 = ClassAwareOutliers(x2, labels2, per_class, base, 1);
  EXPECT_TRUE(capture.Contains("trailer"));
  EXPECT_EQ(flags2[90], 0);
  EXPECT_TRUE(std::equal(flags.begin(), flags.end(), flags2.begin()));
}

}  // namespace
}  // namespace raremine
