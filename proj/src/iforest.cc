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

#include "raremine/iforest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "raremine/parallel.h"
#include "raremine/rng.h"

namespace raremine {
namespace {

constexpr double kEulerGamma = 0.5772156649;

int ResolveWorkers(int workers) { return workers > 0 ? workers : WorkerCount(); }

void CheckParams(const IForestParams& params) {
  if (params.n_trees < 1) throw Error("iforest: n_trees must be >= 1");
  if (params.subsample_size < 2) {
    throw Error("iforest: subsample_size must be >= 2");
  }
  if (!(params.contamination > 0.0 && params.contamination < 1.0)) {
    throw Error(fmt::format("iforest: contamination {} outside (0, 1)",
                            params.contamination));
  }
}

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::size_t max_depth, Rng& rng)
      : x_(x), max_depth_(max_depth), rng_(rng) {}

  IsolationTree Grow(std::vector<std::uint32_t> rows) {
    IsolationTree tree;
    tree.subsample = rows;
    Build(tree, rows, 0, rows.size(), 0);
    return tree;
  }

 private:
  // Grows the node covering rows[begin, end) and returns its index.
  std::int32_t Build(IsolationTree& tree, std::vector<std::uint32_t>& rows,
                     std::size_t begin, std::size_t end, std::uint32_t depth) {
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[index].size = static_cast<std::uint32_t>(end - begin);
    tree.nodes[index].depth = depth;
    if (end - begin <= 1 || depth >= max_depth_) return index;

    // Dimensions with a non-degenerate range on this node.
    splittable_.clear();
    lows_.assign(x_.cols(), 0.0);
    highs_.assign(x_.cols(), 0.0);
    for (std::size_t d = 0; d < x_.cols(); ++d) {
      double lo = x_(rows[begin], d);
      double hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = x_(rows[i], d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      lows_[d] = lo;
      highs_[d] = hi;
      // Needs a representable value strictly inside (lo, hi).
      if (lo < hi && std::nextafter(lo, hi) < hi) splittable_.push_back(d);
    }
    if (splittable_.empty()) return index;

    const std::size_t dim = splittable_[rng_.UniformIndex(splittable_.size())];
    const double lo = lows_[dim];
    const double hi = highs_[dim];
    double split = lo;
    while (!(split > lo && split < hi)) split = rng_.Uniform(lo, hi);

    const auto mid = std::partition(
        rows.begin() + static_cast<std::ptrdiff_t>(begin),
        rows.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::uint32_t r) { return x_(r, dim) < split; });
    const auto split_at = static_cast<std::size_t>(mid - rows.begin());

    const std::int32_t left = Build(tree, rows, begin, split_at, depth + 1);
    const std::int32_t right = Build(tree, rows, split_at, end, depth + 1);
    auto& node = tree.nodes[index];
    node.split_dim = static_cast<std::int32_t>(dim);
    node.split_value = split;
    node.left = left;
    node.right = right;
    return index;
  }

  const Matrix& x_;
  std::size_t max_depth_;
  Rng& rng_;
  std::vector<std::size_t> splittable_;
  std::vector<double> lows_;
  std::vector<double> highs_;
};

}  // namespace

double CFactor(std::size_t n) {
  if (n <= 1) return 0.0;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + kEulerGamma) - 2.0 * m / static_cast<double>(n);
}

std::size_t MaxTreeDepth(std::size_t psi) {
  std::size_t depth = 0;
  while ((std::size_t{1} << depth) < psi) ++depth;
  return depth;
}

std::uint32_t IsolationTree::Depth() const {
  std::uint32_t depth = 0;
  for (const auto& n : nodes) depth = std::max(depth, n.depth);
  return depth;
}

IsolationForestModel FitIsolationForest(const Matrix& x,
                                        const IForestParams& params,
                                        int workers) {
  CheckParams(params);
  if (x.rows() < 2) {
    throw Error(fmt::format("iforest: need at least 2 rows, got {}", x.rows()));
  }
  IsolationForestModel model;
  model.params = params;
  model.psi = std::min(params.subsample_size, x.rows());
  model.max_depth = MaxTreeDepth(model.psi);
  model.dim = x.cols();
  model.trees.resize(params.n_trees);

  ParallelFor(
      params.n_trees,
      [&](std::size_t t) {
        Rng rng(DeriveSeed(params.seed, static_cast<std::uint64_t>(t)));
        // Partial Fisher-Yates draw of psi distinct rows.
        std::vector<std::uint32_t> pool(x.rows());
        std::iota(pool.begin(), pool.end(), 0u);
        for (std::size_t i = 0; i < model.psi; ++i) {
          const std::size_t j = i + rng.UniformIndex(pool.size() - i);
          std::swap(pool[i], pool[j]);
        }
        pool.resize(model.psi);
        TreeGrower grower(x, model.max_depth, rng);
        model.trees[t] = grower.Grow(std::move(pool));
      },
      ResolveWorkers(workers));
  return model;
}

double PathLength(const IsolationTree& tree, std::span<const double> x) {
  std::size_t node = 0;
  double edges = 0.0;
  while (!tree.nodes[node].is_leaf()) {
    const auto& n = tree.nodes[node];
    node = static_cast<std::size_t>(
        x[static_cast<std::size_t>(n.split_dim)] < n.split_value ? n.left : n.right);
    edges += 1.0;
  }
  return edges + CFactor(tree.nodes[node].size);
}

std::vector<double> AnomalyScores(const IsolationForestModel& model,
                                  const Matrix& x, int workers) {
  if (x.rows() > 0 && x.cols() != model.dim) {
    throw Error(fmt::format("iforest: model dim {} but input dim {}", model.dim,
                            x.cols()));
  }
  const double norm = CFactor(model.psi);
  if (!(norm > 0.0)) throw Error("iforest: c(psi) is zero; psi must be >= 2");
  std::vector<double> scores(x.rows());
  ParallelFor(
      x.rows(),
      [&](std::size_t i) {
        double total = 0.0;
        for (const auto& tree : model.trees) total += PathLength(tree, x.row(i));
        const double mean = total / static_cast<double>(model.trees.size());
        scores[i] = std::exp2(-mean / norm);
      },
      ResolveWorkers(workers));
  return scores;
}

FlagVector ThresholdByContamination(std::span<const double> scores,
                                    double contamination) {
  const std::size_t n = scores.size();
  const std::size_t quota = QuotaOf(contamination, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  FlagVector flags(n, 0);
  for (std::size_t i = 0; i < quota; ++i) flags[order[i]] = 1;
  return flags;
}

FlagVector FitThenScoreSplit(const Matrix& train, const Matrix& apply,
                             const IForestParams& params, int workers) {
  if (apply.rows() > 0 && apply.cols() != train.cols()) {
    throw Error(fmt::format("iforest: train dim {} differs from apply dim {}",
                            train.cols(), apply.cols()));
  }
  const auto model = FitIsolationForest(train, params, workers);
  if (apply.rows() == 0) return {};
  const auto scores = AnomalyScores(model, apply, workers);
  return ThresholdByContamination(scores, params.contamination);
}

}  // namespace raremine
