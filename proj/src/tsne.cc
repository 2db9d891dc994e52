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

#include "raremine/tsne.h"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "raremine/log.h"
#include "raremine/parallel.h"
#include "raremine/rng.h"

namespace raremine {
namespace {

constexpr std::uint64_t kJitterStream = 0x6a69747465720000ULL;

int ResolveWorkers(int workers) { return workers > 0 ? workers : WorkerCount(); }

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

bool HasDuplicateRows(const Matrix& x) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a);
    const auto rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto a = x.row(order[i - 1]);
    const auto b = x.row(order[i]);
    if (std::equal(a.begin(), a.end(), b.begin())) return true;
  }
  return false;
}

Matrix Jitter(const Matrix& x) {
  double diameter2 = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      diameter2 = std::max(diameter2, SquaredDistance(x.row(i), x.row(j)));
    }
  }
  const double diameter = std::sqrt(diameter2);
  const double magnitude = 1e-10 * (diameter > 0.0 ? diameter : 1.0);
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    Rng rng(DeriveSeed(kJitterStream, static_cast<std::uint64_t>(i)));
    for (auto& v : out.row(i)) v += magnitude * rng.Uniform(-1.0, 1.0);
  }
  return out;
}

// Fills `row` with P(j|i) for one point; returns whether the entropy target
// was met.
bool SolveRow(std::span<const double> shifted, std::size_t self,
              double target_bits, double tol, int max_iters,
              std::span<double> row) {
  const std::size_t n = shifted.size();
  double mean_shift = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != self) mean_shift += shifted[j];
  }
  mean_shift /= static_cast<double>(n - 1);

  double beta = mean_shift > 0.0 ? 1.0 / mean_shift : 1.0;
  double beta_lo = 0.0;
  double beta_hi = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == self) {
        row[j] = 0.0;
        continue;
      }
      const double p = std::exp(-beta * shifted[j]);
      row[j] = p;
      sum += p;
      weighted += p * shifted[j];
    }
    const double entropy =
        std::log2(sum) + beta * weighted / (sum * std::numbers::ln2);
    const double diff = entropy - target_bits;
    if (std::abs(diff) <= tol) {
      converged = true;
      break;
    }
    if (diff > 0.0) {
      beta_lo = beta;
      beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
    } else {
      beta_hi = beta;
      beta = 0.5 * (beta + beta_lo);
    }
  }
  if (!converged) {
    // Recompute at the final beta so the row reflects the last estimate.
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = j == self ? 0.0 : std::exp(-beta * shifted[j]);
      sum += row[j];
    }
    for (auto& v : row) v /= sum;
    return false;
  }
  double sum = 0.0;
  for (const double v : row) sum += v;
  for (auto& v : row) v /= sum;
  return true;
}

// Per-row pieces of the gradient: attraction sum_j P_ij w_ij (y_i - y_j),
// repulsion sum_j w_ij^2 (y_i - y_j), and sum_j w_ij.
struct RowForces {
  double attract[2];
  double repulse[2];
  double z;
};

RowForces ComputeRowForces(const Matrix& p, const Matrix& y, std::size_t i,
                           double p_scale) {
  RowForces f{{0.0, 0.0}, {0.0, 0.0}, 0.0};
  const double yi0 = y(i, 0);
  const double yi1 = y(i, 1);
  const auto prow = p.row(i);
  const double* yd = y.data().data();
  const std::size_t n = y.rows();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const double d0 = yi0 - yd[2 * j];
    const double d1 = yi1 - yd[2 * j + 1];
    const double w = 1.0 / (1.0 + d0 * d0 + d1 * d1);
    const double pw = p_scale * prow[j] * w;
    const double ww = w * w;
    f.attract[0] += pw * d0;
    f.attract[1] += pw * d1;
    f.repulse[0] += ww * d0;
    f.repulse[1] += ww * d1;
    f.z += w;
  }
  return f;
}

void GradientInto(const Matrix& p, const Matrix& y, double p_scale,
                  std::vector<RowForces>& forces, Matrix& grad, int workers) {
  const std::size_t n = y.rows();
  ParallelFor(
      n, [&](std::size_t i) { forces[i] = ComputeRowForces(p, y, i, p_scale); },
      workers);
  double z = 0.0;
  for (const auto& f : forces) z += f.z;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      grad(i, k) = 4.0 * (forces[i].attract[k] - forces[i].repulse[k] / z);
    }
  }
}

void CheckShapes(const Matrix& p, const Matrix& y) {
  if (p.rows() != p.cols() || p.rows() != y.rows() || y.cols() != 2) {
    throw Error(fmt::format("t-SNE: P is {}x{} but Y is {}x{}", p.rows(),
                            p.cols(), y.rows(), y.cols()));
  }
}

}  // namespace

double EffectivePerplexity(double perplexity, std::size_t n) {
  if (n < 2) return perplexity;
  return std::min(perplexity, static_cast<double>(n - 1));
}

Matrix ConditionalAffinities(const Matrix& x_in, double perplexity, double tol,
                             int max_iters, int workers) {
  const std::size_t n = x_in.rows();
  if (n < 3) throw Error(fmt::format("t-SNE: need at least 3 rows, got {}", n));
  if (!(perplexity >= 1.0) || perplexity > static_cast<double>(n - 1)) {
    throw Error(fmt::format("t-SNE: perplexity {} outside [1, N-1] for N={}",
                            perplexity, n));
  }
  Matrix jittered;
  const Matrix* x = &x_in;
  if (HasDuplicateRows(x_in)) {
    log::Warn("t-SNE: duplicate input rows; applying deterministic tie-jitter");
    jittered = Jitter(x_in);
    x = &jittered;
  }

  const double target_bits = std::log2(perplexity);
  Matrix p(n, n);
  std::atomic<std::size_t> missed{0};
  ParallelFor(
      n,
      [&](std::size_t i) {
        std::vector<double> shifted(n);
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          shifted[j] = SquaredDistance(x->row(i), x->row(j));
          dmin = std::min(dmin, shifted[j]);
        }
        for (std::size_t j = 0; j < n; ++j) {
          shifted[j] = j == i ? 0.0 : shifted[j] - dmin;
        }
        if (!SolveRow(shifted, i, target_bits, tol, max_iters, p.row(i))) {
          missed.fetch_add(1, std::memory_order_relaxed);
        }
      },
      ResolveWorkers(workers));
  if (missed > 0) {
    log::Warn(fmt::format(
        "t-SNE: {} of {} rows missed the entropy target within {} bisection steps",
        missed.load(), n, max_iters));
  }
  return p;
}

Matrix Symmetrize(const Matrix& p_cond) {
  const std::size_t n = p_cond.rows();
  if (p_cond.cols() != n) throw Error("t-SNE: conditional affinities not square");
  Matrix p(n, n);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      p(i, j) = i == j ? 0.0 : (p_cond(i, j) + p_cond(j, i)) / denom;
    }
  }
  return p;
}

Matrix TsneAffinities(const Matrix& x, const TsneConfig& config, int workers) {
  const double perplexity = EffectivePerplexity(config.perplexity, x.rows());
  if (perplexity < config.perplexity) {
    log::Warn(fmt::format("t-SNE: perplexity {} clamped to {} for N={}",
                          config.perplexity, perplexity, x.rows()));
  }
  return Symmetrize(ConditionalAffinities(x, perplexity, config.entropy_tol,
                                          config.max_bisect_iters, workers));
}

double KlDivergence(const Matrix& p, const Matrix& y) {
  CheckShapes(p, y);
  const std::size_t n = y.rows();
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) z += 1.0 / (1.0 + SquaredDistance(y.row(i), y.row(j)));
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = p(i, j);
      if (i == j || pij <= 0.0) continue;
      const double q = 1.0 / (1.0 + SquaredDistance(y.row(i), y.row(j))) / z;
      kl += pij * std::log(pij / q);
    }
  }
  return std::max(0.0, kl);
}

Matrix TsneGradient(const Matrix& p, const Matrix& y, int workers) {
  CheckShapes(p, y);
  Matrix grad(y.rows(), 2);
  std::vector<RowForces> forces(y.rows());
  GradientInto(p, y, 1.0, forces, grad, ResolveWorkers(workers));
  return grad;
}

Matrix InitialLayout(std::size_t n, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  Matrix y(n, 2);
  for (auto& v : y.data()) v = stddev * rng.Normal();
  return y;
}

Matrix RunTsne(const Matrix& x, const TsneConfig& config, int workers) {
  const std::size_t n = x.rows();
  if (n < 3) throw Error(fmt::format("t-SNE: need at least 3 rows, got {}", n));
  workers = ResolveWorkers(workers);
  const Matrix p = TsneAffinities(x, config, workers);

  Matrix y = InitialLayout(n, config.seed, config.init_stddev);
  Matrix grad(n, 2);
  Matrix update(n, 2);
  Matrix gains(n, 2, 1.0);
  std::vector<RowForces> forces(n);

  for (int iter = 0; iter < config.n_iters; ++iter) {
    const double exaggeration =
        iter < config.exaggeration_iters ? config.early_exaggeration : 1.0;
    const double momentum = iter < config.momentum_switch_iter
                                ? config.initial_momentum
                                : config.final_momentum;
    GradientInto(p, y, exaggeration, forces, grad, workers);

    auto& g = grad.data();
    auto& u = update.data();
    auto& gn = gains.data();
    auto& yd = y.data();
    for (std::size_t k = 0; k < yd.size(); ++k) {
      const bool same_sign = (g[k] > 0.0) == (u[k] > 0.0);
      gn[k] = same_sign ? gn[k] * 0.8 : gn[k] + 0.2;
      if (gn[k] < 0.01) gn[k] = 0.01;
      u[k] = momentum * u[k] - config.learning_rate * gn[k] * g[k];
      yd[k] += u[k];
    }
    double mean0 = 0.0;
    double mean1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean0 += y(i, 0);
      mean1 += y(i, 1);
    }
    mean0 /= static_cast<double>(n);
    mean1 /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y(i, 0) -= mean0;
      y(i, 1) -= mean1;
      if (!std::isfinite(y(i, 0)) || !std::isfinite(y(i, 1))) {
        throw Error(fmt::format("t-SNE diverged at iteration {} (row {})", iter, i));
      }
    }
  }
  return y;
}

}  // namespace raremine
