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

#include "raremine/common.h"

#include <cmath>
#include <utility>

#include <fmt/format.h>

namespace raremine {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(fmt::format("matrix data has {} values, expected {}x{}",
                            data_.size(), rows_, cols_));
  }
}

Matrix Matrix::SelectRows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::size_t QuotaOf(double fraction, std::size_t n) {
  if (fraction <= 0.0 || n == 0) return 0;
  const double exact = fraction * static_cast<double>(n);
  const auto quota = static_cast<std::size_t>(std::floor(exact * (1.0 + 1e-9)));
  return std::min(quota, n);
}

}  // namespace raremine
