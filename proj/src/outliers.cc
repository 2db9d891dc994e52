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

#include "raremine/outliers.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "raremine/log.h"
#include "raremine/parallel.h"
#include "raremine/rng.h"

namespace raremine {
namespace {

int ResolveWorkers(int workers) { return workers > 0 ? workers : WorkerCount(); }

double Distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

using Neighbor = std::pair<double, std::size_t>;

// The k nearest other rows of row i, ascending by (distance, index).
std::vector<Neighbor> NearestNeighbors(const Matrix& x, std::size_t i,
                                       std::size_t k) {
  std::vector<Neighbor> all;
  all.reserve(x.rows() - 1);
  for (std::size_t j = 0; j < x.rows(); ++j) {
    if (j != i) all.emplace_back(Distance(x.row(i), x.row(j)), j);
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end());
  all.resize(k);
  return all;
}

void CheckBinary(std::span<const std::uint8_t> flags, const char* what) {
  for (const auto f : flags) {
    if (f > 1) throw Error(fmt::format("{} contains non-binary value {}", what, f));
  }
}

}  // namespace

std::vector<double> KnnMeanDistance(const Matrix& layout, std::size_t k,
                                    int workers) {
  if (k == 0) throw Error("kNN: k must be >= 1");
  if (layout.rows() <= k) {
    throw Error(fmt::format("kNN: need more than k={} rows, got {}", k,
                            layout.rows()));
  }
  std::vector<double> mean(layout.rows());
  ParallelFor(
      layout.rows(),
      [&](std::size_t i) {
        double sum = 0.0;
        for (const auto& [d, j] : NearestNeighbors(layout, i, k)) sum += d;
        mean[i] = sum / static_cast<double>(k);
      },
      ResolveWorkers(workers));
  return mean;
}

double InterpolatedQuantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty vector");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(fmt::format("quantile {} outside [0, 1]", q));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

FlagVector TsneOutlierFlags(std::span<const double> knn_distance,
                            const KnnOutlierParams& params) {
  FlagVector flags(knn_distance.size(), 0);
  if (knn_distance.empty()) return flags;
  double tau = params.tau;
  if (params.mode == ThresholdMode::kQuantile) {
    if (!(params.quantile > 0.0 && params.quantile < 1.0)) {
      throw Error(fmt::format("kNN: quantile {} outside (0, 1)", params.quantile));
    }
    tau = InterpolatedQuantile(knn_distance, params.quantile);
  } else if (!(tau > 0.0)) {
    throw Error(fmt::format("kNN: absolute threshold {} must be positive", tau));
  }
  for (std::size_t i = 0; i < knn_distance.size(); ++i) {
    flags[i] = knn_distance[i] > tau ? 1 : 0;
  }
  return flags;
}

std::vector<std::uint8_t> CombineOutliers(std::span<const std::uint8_t> o_tsne,
                                          std::span<const std::uint8_t> o_if) {
  if (o_tsne.size() != o_if.size()) {
    throw Error(fmt::format("combine: flag lengths differ ({} vs {})",
                            o_tsne.size(), o_if.size()));
  }
  CheckBinary(o_tsne, "O_tsne");
  CheckBinary(o_if, "O_IF");
  std::vector<std::uint8_t> combined(o_tsne.size());
  for (std::size_t i = 0; i < combined.size(); ++i) {
    combined[i] = static_cast<std::uint8_t>(2 * o_tsne[i] + o_if[i]);
  }
  return combined;
}

OutlierComponents DecodeCombined(std::uint8_t combined) {
  if (combined > 3) throw Error(fmt::format("combined score {} outside 0..3", combined));
  return {static_cast<std::uint8_t>(combined >> 1),
          static_cast<std::uint8_t>(combined & 1)};
}

std::vector<double> LofScores(const Matrix& x, const LofParams& params,
                              int workers) {
  const std::size_t n = x.rows();
  const std::size_t k = params.n_neighbors;
  if (k == 0) throw Error("LOF: n_neighbors must be >= 1");
  if (n <= k) {
    throw Error(fmt::format("LOF: need more than n_neighbors={} rows, got {}", k, n));
  }
  workers = ResolveWorkers(workers);
  std::vector<std::vector<Neighbor>> neighbors(n);
  std::vector<double> k_distance(n);
  ParallelFor(
      n,
      [&](std::size_t i) {
        neighbors[i] = NearestNeighbors(x, i, k);
        k_distance[i] = neighbors[i].back().first;
      },
      workers);
  // Local reachability density: inverse mean reach-dist to the neighbors.
  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double reach = 0.0;
    for (const auto& [d, j] : neighbors[i]) reach += std::max(k_distance[j], d);
    lrd[i] = reach > 0.0 ? static_cast<double>(k) / reach
                         : std::numeric_limits<double>::infinity();
  }
  std::vector<double> lof(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isinf(lrd[i])) {
      // Duplicate-point neighborhoods have infinite density; score as inlier.
      lof[i] = 1.0;
      continue;
    }
    double ratio = 0.0;
    for (const auto& [d, j] : neighbors[i]) ratio += lrd[j] / lrd[i];
    lof[i] = ratio / static_cast<double>(k);
  }
  return lof;
}

FlagVector LofFlags(const Matrix& x, const LofParams& params, int workers) {
  const auto scores = LofScores(x, params, workers);
  return ThresholdByContamination(scores, params.contamination);
}

FlagVector EnsembleCombine(std::span<const FlagVector> flag_sets,
                           EnsembleMode mode) {
  if (flag_sets.empty()) throw Error("ensemble: no flag sets given");
  FlagVector out = flag_sets.front();
  CheckBinary(out, "ensemble input");
  for (std::size_t s = 1; s < flag_sets.size(); ++s) {
    const auto& f = flag_sets[s];
    if (f.size() != out.size()) throw Error("ensemble: flag sets differ in length");
    CheckBinary(f, "ensemble input");
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = mode == EnsembleMode::kUnion ? (out[i] | f[i]) : (out[i] & f[i]);
    }
  }
  return out;
}

FlagVector ClassAwareOutliers(
    const Matrix& x, std::span<const std::string> class_labels,
    const std::map<std::string, double>& per_class_contamination,
    const IForestParams& base, int workers) {
  if (class_labels.size() != x.rows()) {
    throw Error(fmt::format("class-aware: {} labels for {} rows",
                            class_labels.size(), x.rows()));
  }
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < class_labels.size(); ++i) {
    members[class_labels[i]].push_back(i);
  }
  FlagVector flags(x.rows(), 0);
  for (const auto& [label, rows] : members) {
    if (rows.size() < 2) {
      log::Warn(fmt::format("class-aware: class '{}' has {} member(s); skipped",
                            label, rows.size()));
      continue;
    }
    IForestParams params = base;
    params.seed = DeriveSeed(base.seed, label);
    if (const auto it = per_class_contamination.find(label);
        it != per_class_contamination.end()) {
      params.contamination = it->second;
    }
    const Matrix sub = x.SelectRows(rows);
    const auto model = FitIsolationForest(sub, params, workers);
    const auto class_flags =
        ThresholdByContamination(AnomalyScores(model, sub, workers), params.contamination);
    for (std::size_t r = 0; r < rows.size(); ++r) flags[rows[r]] = class_flags[r];
  }
  return flags;
}

}  // namespace raremine
