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

#ifndef RAREMINE_PARALLEL_H_
#define RAREMINE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace raremine {

// Worker count for parallel stages: hardware concurrency, capped by the
// RAREMINE_THREADS environment variable when it holds a positive integer.
int WorkerCount();

// Runs fn(i) for every i in [0, n). Indices are dealt in contiguous blocks;
// callers write only to slot i so results never depend on `workers`. The
// first exception thrown by any worker is rethrown on the caller's thread.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn,
                 int workers = WorkerCount());

}  // namespace raremine

#endif  // RAREMINE_PARALLEL_H_
