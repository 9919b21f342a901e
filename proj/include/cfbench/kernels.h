// Copyright 2026 The cfbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; both perform the same floating-point operations in the
// same order per output element, so their results are bitwise identical.

#ifndef CFBENCH_KERNELS_H_
#define CFBENCH_KERNELS_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfbench/models.h"
#include "cfbench/types.h"

namespace cfbench {

enum class Statistic { kMean, kMedian, kProportion };

double ComputeStatistic(std::span<const double> values, Statistic stat);

namespace kernels {

using StringPair = std::pair<std::string, std::string>;

namespace serial {

// L x V matrix: out(p, v) = <E[v] - E[ids[p]], grads.row(p)>.
Matrix FirstOrderScores(const EmbeddingTable& embeddings, std::span<const int> ids,
                        const Matrix& grads);

std::vector<double> BatchSimilarity(std::span<const StringPair> pairs);

// Statistic of n_boot resamples, sorted ascending. Resample i draws from its
// own stream seeded by (seed, i).
std::vector<double> BootstrapDistribution(std::span<const double> values, Statistic stat,
                                          int n_boot, uint64_t seed);

}  // namespace serial

namespace parallel {

Matrix FirstOrderScores(const EmbeddingTable& embeddings, std::span<const int> ids,
                        const Matrix& grads);
std::vector<double> BatchSimilarity(std::span<const StringPair> pairs);
std::vector<double> BootstrapDistribution(std::span<const double> values, Statistic stat,
                                          int n_boot, uint64_t seed);

}  // namespace parallel
}  // namespace kernels
}  // namespace cfbench

#endif  // CFBENCH_KERNELS_H_
