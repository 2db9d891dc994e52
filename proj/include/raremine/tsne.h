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

// Exact O(N^2) t-SNE into two dimensions.
//
// Affinities use squared Euclidean distances in the input space. Each row's
// Gaussian precision is found by bisection so the row's Shannon entropy in
// bits equals log2(perplexity). Optimization is gradient descent with
// momentum and per-coordinate adaptive gains, starting from an isotropic
// Gaussian of standard deviation 1e-4:
//
//   iterations [0, 250)     P multiplied by early_exaggeration, momentum 0.5
//   iterations [250, n)     plain P, momentum 0.8
//
// Gains grow by 0.2 where the gradient and the previous update have opposite
// signs and shrink by a factor 0.8 elsewhere, floored at 0.01. The layout is
// re-centred after every step.

#ifndef RAREMINE_TSNE_H_
#define RAREMINE_TSNE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "raremine/common.h"

namespace raremine {

struct TsneConfig {
  double perplexity = 30.0;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iter = 250;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  int n_iters = 1000;
  double entropy_tol = 1e-5;
  int max_bisect_iters = 50;
  double init_stddev = 1e-4;
  std::uint64_t seed = 0;
};

struct Layout2D {
  Matrix y;  // N x 2
  std::vector<std::string> row_ids;
};

// min(perplexity, N - 1): the largest perplexity an N-point row can reach.
double EffectivePerplexity(double perplexity, std::size_t n);

// Row-stochastic conditional affinities P(j|i) with zero diagonal. If x holds
// duplicate rows, every row is first offset by a deterministic jitter of
// magnitude 1e-10 * (data diameter) keyed by row index, and a warning is
// emitted. Rows whose entropy misses the target after max_iters bisection
// steps are reported in a single warning.
Matrix ConditionalAffinities(const Matrix& x, double perplexity, double tol,
                             int max_iters, int workers = -1);

// P_ij = (P(j|i) + P(i|j)) / (2N).
Matrix Symmetrize(const Matrix& p_cond);

// Symmetric affinities for `x` using the config's perplexity clamped by
// EffectivePerplexity.
Matrix TsneAffinities(const Matrix& x, const TsneConfig& config,
                      int workers = -1);

// KL(P || Q) with Student-t Q_ij proportional to 1 / (1 + |y_i - y_j|^2),
// summed over i != j with 0 log 0 = 0.
double KlDivergence(const Matrix& p, const Matrix& y);

// d KL / d y_i = 4 sum_j (P_ij - Q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2).
Matrix TsneGradient(const Matrix& p, const Matrix& y, int workers = -1);

// The seeded starting layout used by RunTsne.
Matrix InitialLayout(std::size_t n, std::uint64_t seed, double stddev);

// Throws Error when x has fewer than 3 rows, and when any coordinate becomes
// non-finite (naming the iteration).
Matrix RunTsne(const Matrix& x, const TsneConfig& config, int workers = -1);

}  // namespace raremine

#endif  // RAREMINE_TSNE_H_
