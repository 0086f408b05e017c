/*
 * Copyright 2026 The ShapNet Authors.
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

#ifndef SHAPNET_PARALLEL_H_
#define SHAPNET_PARALLEL_H_

#include <functional>

namespace shapnet {

// Runs fn(i) for every i in [0, n) on up to `threads` threads. Callers write
// results into per-index slots and reduce afterwards in index order, which
// keeps output independent of the thread count. If any call throws, the
// exception from the smallest failing index is rethrown.
void ParallelFor(int n, int threads, const std::function<void(int)>& fn);

}  // namespace shapnet

#endif  // SHAPNET_PARALLEL_H_
