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

// Isolation Forest anomaly detector.
//
// Each tree is grown on a subsample of psi rows drawn without replacement.
// A node picks a split dimension uniformly among the dimensions that are not
// constant on the node's rows and a split value uniformly inside the open
// interval (min, max) of that dimension. Growth stops at depth
// ceil(log2(psi)) or when a node holds one row. A row's path length is the
// number of edges to its leaf plus c(leaf size), and its score is
// 2^(-E[h] / c(psi)).

#ifndef RAREMINE_IFOREST_H_
#define RAREMINE_IFOREST_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "raremine/common.h"

namespace raremine {

struct IForestParams {
  std::size_t n_trees = 100;
  // Clamped to the row count at fit time.
  std::size_t subsample_size = 256;
  double contamination = 0.20;
  std::uint64_t seed = 0;
};

struct IsolationTree {
  struct Node {
    // -1 on leaves.
    std::int32_t split_dim = -1;
    double split_value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    // Rows of the subsample that reached this node.
    std::uint32_t size = 0;
    std::uint32_t depth = 0;

    bool is_leaf() const { return left < 0; }
  };

  // nodes[0] is the root.
  std::vector<Node> nodes;
  // Subsample row indices the tree was grown on, in draw order.
  std::vector<std::uint32_t> subsample;

  std::uint32_t Depth() const;
};

struct IsolationForestModel {
  std::vector<IsolationTree> trees;
  std::size_t psi = 0;
  std::size_t max_depth = 0;
  std::size_t dim = 0;
  IForestParams params;
};

// Average unsuccessful-search path length of a binary search tree on n keys:
// c(n) = 2 H(n-1) - 2 (n-1) / n with H(i) = ln(i) + 0.5772156649, and
// c(0) = c(1) = 0.
double CFactor(std::size_t n);

// ceil(log2(psi)) for psi >= 1.
std::size_t MaxTreeDepth(std::size_t psi);

// Throws Error when x has fewer than 2 rows or params are out of range. Trees
// use seeds DeriveSeed(params.seed, tree_index), so the forest does not depend
// on the worker count.
IsolationForestModel FitIsolationForest(const Matrix& x,
                                        const IForestParams& params,
                                        int workers = -1);

double PathLength(const IsolationTree& tree, std::span<const double> x);

std::vector<double> AnomalyScores(const IsolationForestModel& model,
                                  const Matrix& x, int workers = -1);

// Flags exactly QuotaOf(contamination, N) rows with the highest scores. At
// the cut, equal scores go to the lower row index first.
FlagVector ThresholdByContamination(std::span<const double> scores,
                                    double contamination);

// Fits on `train`, scores `apply`, thresholds on the `apply` scores.
FlagVector FitThenScoreSplit(const Matrix& train, const Matrix& apply,
                             const IForestParams& params, int workers = -1);

}  // namespace raremine

#endif  // RAREMINE_IFOREST_H_
