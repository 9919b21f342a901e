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

#include "cfbench/kernels.h"

#include <algorithm>
#include <random>

#include "cfbench/error.h"
#include "cfbench/metrics.h"
#include "cfbench/random.h"

namespace cfbench {

double ComputeStatistic(std::span<const double> values, Statistic stat) {
  if (values.empty()) throw InvalidInput("statistic of an empty sample");
  if (stat == Statistic::kMedian) {
    std::vector<double> v(values.begin(), values.end());
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lower + upper);
  }
  double sum = 0.0;
  for (double x : values) sum += x;
  return sum / static_cast<double>(values.size());
}

namespace kernels {
namespace {

void CheckScoreShapes(const EmbeddingTable& e, std::span<const int> ids, const Matrix& g) {
  if (g.rows != ids.size() || g.cols != e.dim()) {
    throw InvalidInput("gradient matrix does not match sequence and embedding sizes");
  }
}

// Projections <E[ids[p]], g_p>, shared by both kernel variants.
std::vector<double> CurrentProjections(const EmbeddingTable& e, std::span<const int> ids,
                                       const Matrix& g) {
  std::vector<double> cur(ids.size());
  for (size_t p = 0; p < ids.size(); ++p) {
    const auto row = e.row(ids[p]);
    const auto gp = g.row(p);
    double dot = 0.0;
    for (size_t j = 0; j < row.size(); ++j) dot += double(row[j]) * gp[j];
    cur[p] = dot;
  }
  return cur;
}

inline void ScoreToken(const EmbeddingTable& e, const Matrix& g,
                       const std::vector<double>& cur, size_t v, Matrix& out) {
  const auto row = e.row(v);
  for (size_t p = 0; p < g.rows; ++p) {
    const auto gp = g.row(p);
    double dot = 0.0;
    for (size_t j = 0; j < row.size(); ++j) dot += double(row[j]) * gp[j];
    out.at(p, v) = dot - cur[p];
  }
}

std::vector<double> Resample(std::span<const double> values, uint64_t seed, uint64_t index) {
  std::mt19937_64 rng(MixSeed(seed, index));
  std::vector<double> sample(values.size());
  for (auto& x : sample) x = values[UniformIndex(rng, values.size())];
  return sample;
}

void CheckBootstrapArgs(std::span<const double> values, int n_boot) {
  if (values.empty()) throw InvalidInput("bootstrap of an empty sample");
  if (n_boot < 1) throw InvalidInput("n_boot must be positive");
}

}  // namespace

namespace serial {

Matrix FirstOrderScores(const EmbeddingTable& embeddings, std::span<const int> ids,
                        const Matrix& grads) {
  CheckScoreShapes(embeddings, ids, grads);
  const auto cur = CurrentProjections(embeddings, ids, grads);
  Matrix out(ids.size(), embeddings.vocab_size());
  for (size_t v = 0; v < embeddings.vocab_size(); ++v) {
    ScoreToken(embeddings, grads, cur, v, out);
  }
  return out;
}

std::vector<double> BatchSimilarity(std::span<const StringPair> pairs) {
  std::vector<double> out(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    out[i] = NormalizedSimilarity(pairs[i].first, pairs[i].second);
  }
  return out;
}

std::vector<double> BootstrapDistribution(std::span<const double> values, Statistic stat,
                                          int n_boot, uint64_t seed) {
  CheckBootstrapArgs(values, n_boot);
  std::vector<double> stats(n_boot);
  for (int i = 0; i < n_boot; ++i) {
    stats[i] = ComputeStatistic(Resample(values, seed, i), stat);
  }
  std::sort(stats.begin(), stats.end());
  return stats;
}

}  // namespace serial

namespace parallel {

Matrix FirstOrderScores(const EmbeddingTable& embeddings, std::span<const int> ids,
                        const Matrix& grads) {
  CheckScoreShapes(embeddings, ids, grads);
  const auto cur = CurrentProjections(embeddings, ids, grads);
  Matrix out(ids.size(), embeddings.vocab_size());
  const long vocab = static_cast<long>(embeddings.vocab_size());
#pragma omp parallel for schedule(static)
  for (long v = 0; v < vocab; ++v) {
    ScoreToken(embeddings, grads, cur, static_cast<size_t>(v), out);
  }
  return out;
}

std::vector<double> BatchSimilarity(std::span<const StringPair> pairs) {
  std::vector<double> out(pairs.size());
  const long n = static_cast<long>(pairs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    out[i] = NormalizedSimilarity(pairs[i].first, pairs[i].second);
  }
  return out;
}

std::vector<double> BootstrapDistribution(std::span<const double> values, Statistic stat,
                                          int n_boot, uint64_t seed) {
  CheckBootstrapArgs(values, n_boot);
  std::vector<double> stats(n_boot);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_boot; ++i) {
    stats[i] = ComputeStatistic(Resample(values, seed, i), stat);
  }
  std::sort(stats.begin(), stats.end());
  return stats;
}

}  // namespace parallel
}  // namespace kernels
}  // namespace cfbench
