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

// Outlier detectors on top of the embedding and the 2-D layout, and the
// rules that fuse their binary verdicts.

#ifndef RAREMINE_OUTLIERS_H_
#define RAREMINE_OUTLIERS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "raremine/common.h"
#include "raremine/iforest.h"

namespace raremine {

enum class ThresholdMode { kAbsolute, kQuantile };

struct KnnOutlierParams {
  std::size_t k = 10;
  ThresholdMode mode = ThresholdMode::kQuantile;
  // Used in kAbsolute mode.
  double tau = 0.0;
  // Used in kQuantile mode: tau is the linear-interpolated q-quantile of D.
  double quantile = 0.80;
};

struct LofParams {
  std::size_t n_neighbors = 20;
  double contamination = 0.20;
};

enum class EnsembleMode { kUnion, kIntersection };

// D_i: mean Euclidean distance from row i to its k nearest other rows. Equal
// distances rank the lower row index first; the k distances are summed in
// ascending order. Throws Error when N <= k or k == 0.
std::vector<double> KnnMeanDistance(const Matrix& layout, std::size_t k,
                                    int workers = -1);

// Empirical quantile with linear interpolation between order statistics:
// position h = (n - 1) q on the sorted values.
double InterpolatedQuantile(std::span<const double> values, double q);

// O_tsne_i = 1 iff D_i > tau (strict).
FlagVector TsneOutlierFlags(std::span<const double> knn_distance,
                            const KnnOutlierParams& params);

// O_i = 2 * O_tsne_i + O_IF_i, in {0, 1, 2, 3}. Throws Error on length
// mismatch or non-binary input.
std::vector<std::uint8_t> CombineOutliers(std::span<const std::uint8_t> o_tsne,
                                          std::span<const std::uint8_t> o_if);

struct OutlierComponents {
  std::uint8_t o_tsne = 0;
  std::uint8_t o_if = 0;
};
OutlierComponents DecodeCombined(std::uint8_t combined);

// Local Outlier Factor with exactly n_neighbors neighbors per point (ties by
// lower row index). Throws Error when N <= n_neighbors.
std::vector<double> LofScores(const Matrix& x, const LofParams& params,
                              int workers = -1);

// Contamination-thresholded LOF flags, same tie rule as the isolation forest.
FlagVector LofFlags(const Matrix& x, const LofParams& params, int workers = -1);

// Elementwise OR / AND. Throws Error on an empty list or ragged inputs.
FlagVector EnsembleCombine(std::span<const FlagVector> flag_sets,
                           EnsembleMode mode);

// Isolation forest fitted and thresholded separately inside each class.
// A class uses per_class_contamination[label] when present and
// base.contamination otherwise, and seed DeriveSeed(base.seed, label), so
// adding a class never changes another class's flags. Classes with fewer
// than 2 members are skipped with a warning and stay unflagged.
FlagVector ClassAwareOutliers(const Matrix& x,
                              std::span<const std::string> class_labels,
                              const std::map<std::string, double>& per_class_contamination,
                              const IForestParams& base, int workers = -1);

}  // namespace raremine

#endif  // RAREMINE_OUTLIERS_H_
