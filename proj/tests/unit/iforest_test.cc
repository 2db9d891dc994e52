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
#include <functional>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "raremine/iforest.h"
#include "raremine/rng.h"
#include "test_util.h"

namespace raremine {
namespace {

using testing::RandomMatrix;

TEST(CFactor, DegenerateSizes) {
  EXPECT_EQ(CFactor(0), 0.0);
  EXPECT_EQ(CFactor(1), 0.0);
}

TEST(CFactor, TwoIsTwiceGammaMinusOne) {
  EXPECT_NEAR(CFactor(2), 2 * 0.5772156649 - 1.0, 1e-15);
  EXPECT_NEAR(CFactor(2), 0.1544313298, 1e-12);
}

TEST(CFactor, MatchesExtendedPrecisionUpTo1024) {
  for (std::size_t n = 2; n <= 1024; ++n) {
    EXPECT_NEAR(CFactor(n), static_cast<double>(oracle::CFactor(n)), 1e-12) << n;
  }
}

TEST(CFactor, MatchesFrozenHighPrecisionValues) {
  for (const auto& [n, value] : oracle::FrozenCFactors()) {
    EXPECT_NEAR(CFactor(n), static_cast<double>(value), 1e-12) << n;
    EXPECT_NEAR(static_cast<double>(oracle::CFactor(n)), static_cast<double>(value), 1e-14)
        << n;
  }
}

TEST(CFactor, MonotoneFromTwo) {
  for (std::size_t n = 2; n < 5000; ++n) EXPECT_LE(CFactor(n), CFactor(n + 1)) << n;
}

TEST(MaxTreeDepth, CeilLog2) {
  EXPECT_EQ(MaxTreeDepth(1), 0u);
  EXPECT_EQ(MaxTreeDepth(2), 1u);
  EXPECT_EQ(MaxTreeDepth(3), 2u);
  EXPECT_EQ(MaxTreeDepth(256), 8u);
  EXPECT_EQ(MaxTreeDepth(257), 9u);
}

TEST(FitIsolationForest, TwoDistinctPointsForceOneSplit) {
  const Matrix x(2, 3, std::vector<double>{0, 0, 0, 1, 2, 3});
  IForestParams p;
  p.n_trees = 50;
  p.seed = 4;
  const auto model = FitIsolationForest(x, p, 1);
  EXPECT_EQ(model.psi, 2u);
  EXPECT_EQ(model.max_depth, 1u);
  ASSERT_EQ(model.trees.size(), 50u);
  for (const auto& t : model.trees) {
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_FALSE(t.nodes[0].is_leaf());
    EXPECT_EQ(t.nodes[t.nodes[0].left].size, 1u);
    EXPECT_EQ(t.nodes[t.nodes[0].right].size, 1u);
  }
}

// Routes the subsample through the tree and checks every split lies strictly
// inside its node's range.
void CheckSplitsInsideRange(const IsolationTree& tree, const Matrix& x) {
  std::function<void(std::size_t, std::vector<std::uint32_t>)> visit =
      [&](std::size_t node, std::vector<std::uint32_t> rows) {
        const auto& n = tree.nodes[node];
        ASSERT_EQ(n.size, rows.size());
        if (n.is_leaf()) return;
        const auto d = static_cast<std::size_t>(n.split_dim);
        double lo = x(rows[0], d), hi = lo;
        for (const auto r : rows) {
          lo = std::min(lo, x(r, d));
          hi = std::max(hi, x(r, d));
        }
        EXPECT_GT(n.split_value, lo);
        EXPECT_LT(n.split_value, hi);
        std::vector<std::uint32_t> left, right;
        for (const auto r : rows) (x(r, d) < n.split_value ? left : right).push_back(r);
        visit(static_cast<std::size_t>(n.left), left);
        visit(static_cast<std::size_t>(n.right), right);
      };
  visit(0, tree.subsample);
}

TEST(FitIsolationForest, TreeInvariants) {
  Rng rng(21);
  const Matrix x = RandomMatrix(600, 5, rng);
  IForestParams p;
  p.seed = 77;
  const auto model = FitIsolationForest(x, p);
  EXPECT_EQ(model.psi, 256u);
  EXPECT_EQ(model.max_depth, 8u);
  for (const auto& t : model.trees) {
    EXPECT_LE(t.Depth(), model.max_depth);
    std::vector<std::uint32_t> sorted = t.subsample;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    EXPECT_EQ(sorted.size(), 256u);
    CheckSplitsInsideRange(t, x);
  }
}

TEST(FitIsolationForest, ConstantDataGivesSingleLeafTrees) {
  const Matrix x(10, 2, 3.0);
  IForestParams p;
  const auto model = FitIsolationForest(x, p, 1);
  for (const auto& t : model.trees) EXPECT_EQ(t.nodes.size(), 1u);
  const auto scores = AnomalyScores(model, x, 1);
  for (const double s : scores) EXPECT_EQ(s, scores[0]);
  const auto flags = ThresholdByContamination(scores, 0.2);
  EXPECT_EQ(flags, (FlagVector{1, 1, 0, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(FitIsolationForest, RejectsBadInput) {
  IForestParams p;
  EXPECT_THROW(FitIsolationForest(Matrix(1, 2), p), Error);
  p.contamination = 1.0;
  EXPECT_THROW(FitIsolationForest(Matrix(5, 2), p), Error);
  p.contamination = 0.2;
  p.n_trees = 0;
  EXPECT_THROW(FitIsolationForest(Matrix(5, 2), p), Error);
}

TEST(FitIsolationForest, IndependentOfWorkerCount) {
  Rng rng(8);
  const Matrix x = RandomMatrix(400, 6, rng);
  IForestParams p;
  p.seed = 99;
  const auto a = AnomalyScores(FitIsolationForest(x, p, 1), x, 1);
  const auto b = AnomalyScores(FitIsolationForest(x, p, 8), x, 8);
  EXPECT_EQ(a, b);
}

TEST(AnomalyScores, InUnitIntervalAndPathLengthOfLeafIsCFactor) {
  Rng rng(2);
  const Matrix x = RandomMatrix(300, 3, rng);
  IForestParams p;
  const auto model = FitIsolationForest(x, p, 1);
  for (const double s : AnomalyScores(model, x, 1)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  IsolationTree leaf;
  leaf.nodes.push_back({});
  leaf.nodes[0].size = 17;
  const std::vector<double> point = {0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(PathLength(leaf, point), CFactor(17));
}

TEST(AnomalyScores, PlantedOutlierScoresHighest) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 1000);
    Matrix x(256, 1);
    for (std::size_t i = 0; i < 255; ++i) x(i, 0) = rng.Uniform01();
    x(255, 0) = 100.0;
    IForestParams p;
    p.seed = seed;
    const auto s = AnomalyScores(FitIsolationForest(x, p, 1), x, 1);
    if (std::max_element(s.begin(), s.end()) - s.begin() == 255) ++wins;
  }
  EXPECT_GE(wins, 99);
}

TEST(ThresholdByContamination, FlagsExactQuota) {
  Rng rng(3);
  for (const std::size_t n : {1u, 2u, 5u, 10u, 99u, 100u, 1001u}) {
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.Uniform01();
    const auto flags = ThresholdByContamination(scores, 0.2);
    EXPECT_EQ(std::accumulate(flags.begin(), flags.end(), std::size_t{0}), n / 5) << n;
    // Every flagged score is at least every unflagged one.
    double min_flagged = 2.0, max_unflagged = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (flags[i]) {
        min_flagged = std::min(min_flagged, scores[i]);
      } else {
        max_unflagged = std::max(max_unflagged, scores[i]);
      }
    }
    if (n >= 5) EXPECT_GE(min_flagged, max_unflagged);
  }
}

TEST(ThresholdByContamination, TiesGoToLowerIndex) {
  const std::vector<double> scores = {0.5, 0.9, 0.5, 0.5, 0.1};
  EXPECT_EQ(ThresholdByContamination(scores, 0.4), (FlagVector{1, 1, 0, 0, 0}));
}

TEST(FitThenScoreSplit, ScoresApplySetOnly) {
  Rng rng(12);
  const Matrix train = RandomMatrix(200, 2, rng);
  Matrix apply = RandomMatrix(50, 2, rng);
  apply(7, 0) = 40.0;
  IForestParams p;
  const auto flags = FitThenScoreSplit(train, apply, p, 1);
  ASSERT_EQ(flags.size(), 50u);
  EXPECT_EQ(std::accumulate(flags.begin(), flags.end(), 0), 10);
  EXPECT_EQ(flags[7], 1);
  EXPECT_TRUE(FitThenScoreSplit(train, Matrix(0, 2), p, 1).empty());
}

}  // namespace
}  // namespace raremine
