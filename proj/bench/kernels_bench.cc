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

// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <string>
#include <vector>

#include "benchmark/benchmark.h"
#include "cfbench/kernels.h"
#include "cfbench/random.h"

namespace {

using namespace cfbench;

struct ScoreInputs {
  EmbeddingTable table;
  std::vector<int> ids;
  Matrix grads;
};

ScoreInputs MakeScoreInputs(size_t vocab, size_t dim, size_t length) {
  std::mt19937_64 rng(7);
  ScoreInputs in{EmbeddingTable(vocab, dim), std::vector<int>(length), Matrix(length, dim)};
  for (size_t v = 0; v < vocab; ++v) {
    for (auto& x : in.table.row(v)) x = static_cast<float>(Normal(rng));
  }
  for (auto& id : in.ids) id = static_cast<int>(UniformIndex(rng, vocab));
  for (auto& g : in.grads.data) g = Normal(rng);
  return in;
}

template <bool kParallel>
void BM_FirstOrderScores(benchmark::State& state) {
  const auto in = MakeScoreInputs(static_cast<size_t>(state.range(0)), 128, 32);
  for (auto _ : state) {
    auto m = kParallel ? kernels::parallel::FirstOrderScores(in.table, in.ids, in.grads)
                       : kernels::serial::FirstOrderScores(in.table, in.ids, in.grads);
    benchmark::DoNotOptimize(m.data.data());
  }
}
BENCHMARK(BM_FirstOrderScores<false>)->Arg(4096)->Arg(30522)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FirstOrderScores<true>)->Arg(4096)->Arg(30522)->Unit(benchmark::kMillisecond);

std::vector<kernels::StringPair> MakePairs(size_t n) {
  std::mt19937_64 rng(11);
  std::vector<kernels::StringPair> pairs;
  for (size_t i = 0; i < n; ++i) {
    std::string a, b;
    for (int k = 0; k < 80; ++k) a.push_back(static_cast<char>('a' + UniformIndex(rng, 26)));
    b = a;
    for (int k = 0; k < 10; ++k) b[UniformIndex(rng, b.size())] = 'z';
    pairs.emplace_back(a, b);
  }
  return pairs;
}

template <bool kParallel>
void BM_BatchSimilarity(benchmark::State& state) {
  const auto pairs = MakePairs(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    auto v = kParallel ? kernels::parallel::BatchSimilarity(pairs)
                       : kernels::serial::BatchSimilarity(pairs);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_BatchSimilarity<false>)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchSimilarity<true>)->Arg(1000)->Unit(benchmark::kMillisecond);

template <bool kParallel>
void BM_Bootstrap(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<double> values(1000);
  for (auto& v : values) v = Normal(rng);
  for (auto _ : state) {
    auto d = kParallel
                 ? kernels::parallel::BootstrapDistribution(values, Statistic::kMedian, 1000, 1)
                 : kernels::serial::BootstrapDistribution(values, Statistic::kMedian, 1000, 1);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(BM_Bootstrap<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap<true>)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
