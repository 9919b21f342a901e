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

#include "cfbench/closs.h"

#include <algorithm>
#include <chrono>
#include <exception>
#include <numeric>
#include <random>

#include "cfbench/error.h"
#include "cfbench/random.h"

namespace cfbench {
namespace {

std::vector<int> Apply(const std::vector<int>& ids, std::span<const Edit> edits) {
  std::vector<int> out = ids;
  for (const Edit& e : edits) out.at(e.position) = e.token;
  return out;
}

double Dot(std::span<const float> a, std::span<const float> b, std::span<const double> g) {
  double s = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    s += (static_cast<double>(a[i]) - static_cast<double>(b[i])) * g[i];
  }
  return s;
}

}  // namespace

bool CandidatePool::Contains(size_t position, int token) const {
  if (position >= positions.size()) return false;
  const auto& list = positions[position];
  return std::any_of(list.begin(), list.end(),
                     [token](const PoolEntry& e) { return e.token == token; });
}

CandidatePool ProposeSubstitutes(const SearchProblem& problem, const ModelGateway& gateway,
                                 int k) {
  if (k < 1) throw InvalidInput("k must be positive");
  const auto& vocab = gateway.vocab();
  const auto& table = gateway.Embeddings();
  const GradientMatrix grads =
      FlipGradients(gateway, problem.base.token_ids, problem.target_label);
  CandidatePool pool;
  pool.positions.resize(problem.base.size());
  for (size_t p = 0; p < problem.base.size(); ++p) {
    if (!problem.eligible[p]) continue;
    // Filtering can drop entries, so over-ask and trim back to k.
    size_t ask = static_cast<size_t>(k);
    std::vector<TokenProb> proposals;
    size_t kept = 0;
    while (true) {
      proposals = gateway.MlmTopK(problem.base, p, ask);
      kept = static_cast<size_t>(std::count_if(
          proposals.begin(), proposals.end(), [&](const TokenProb& t) {
            return TokenAllowedAt(vocab, problem, p, t.token);
          }));
      if (kept >= static_cast<size_t>(k) || proposals.size() < ask) break;
      ask *= 2;
    }
    const int current = problem.base.token_ids[p];
    auto& list = pool.positions[p];
    for (const TokenProb& t : proposals) {
      if (list.size() == static_cast<size_t>(k)) break;
      if (!TokenAllowedAt(vocab, problem, p, t.token) || !(t.probability > 0.0)) continue;
      PoolEntry e;
      e.token = t.token;
      e.mlm_probability = t.probability;
      e.gradient_score = Dot(table.row(t.token), table.row(current), grads.values.row(p));
      list.push_back(e);
    }
  }
  return pool;
}

std::vector<Edit> PromisingPlayers(const CandidatePool& pool, const SubstitutionState& state,
                                   const SearchProblem& problem, size_t exclude) {
  std::vector<Edit> players;
  for (size_t p = 0; p < pool.positions.size(); ++p) {
    if (p == exclude || !problem.eligible[p] || state.EditsPosition(p)) continue;
    const auto& list = pool.positions[p];
    if (list.empty()) continue;
    const auto best = std::min_element(list.begin(), list.end(),
                                       [](const PoolEntry& a, const PoolEntry& b) {
                                         if (a.gradient_score != b.gradient_score) {
                                           return a.gradient_score > b.gradient_score;
                                         }
                                         return a.token < b.token;
                                       });
    players.push_back({p, best->token});
  }
  return players;
}

double CoalitionValue(std::span<const Edit> coalition, const SubstitutionState& state,
                      int target_label, const ModelGateway& gateway) {
  return gateway.ClassifyIds(Apply(state.ids, coalition)).Margin(target_label);
}

double EstimateShapley(const Edit& candidate, std::span<const Edit> players,
                       const SubstitutionState& state, int target_label,
                       const ModelGateway& gateway, int w, uint64_t seed) {
  if (w < 1) throw InvalidInput("w must be positive");
  std::mt19937_64 rng(seed);
  const size_t n = players.size();
  // With enough draws, stratify by coalition size: draw d uses size d mod
  // (n + 1) and a uniform subset of that size. Each stratum is an unbiased
  // estimate of the mean marginal at that size, and the Shapley value is the
  // plain average over sizes. Otherwise sample whole permutations.
  const bool stratified = static_cast<size_t>(w) >= n + 1;
  std::vector<size_t> order(n + 1);
  std::vector<size_t> size_of_draw;
  std::vector<std::vector<int>> batch;
  batch.reserve(2 * static_cast<size_t>(w));
  for (int draw = 0; draw < w; ++draw) {
    std::iota(order.begin(), order.end(), size_t{0});
    size_t size = 0;
    if (stratified) {
      size = static_cast<size_t>(draw) % (n + 1);
      for (size_t i = 0; i < size; ++i) {
        std::swap(order[i], order[i + UniformIndex(rng, n - i)]);
      }
    } else {
      for (size_t i = n; i > 0; --i) {
        std::swap(order[i], order[UniformIndex(rng, i + 1)]);
      }
      // Slot n is the candidate; the coalition is everything ahead of it.
      while (order[size] != n) ++size;
    }
    size_of_draw.push_back(size);
    std::vector<Edit> coalition;
    for (size_t i = 0; i < size; ++i) coalition.push_back(players[order[i]]);
    batch.push_back(Apply(state.ids, coalition));
    coalition.push_back(candidate);
    batch.push_back(Apply(state.ids, coalition));
  }
  const auto outputs = gateway.ClassifyBatch(batch);
  if (!stratified) {
    double total = 0.0;
    for (size_t i = 0; i < outputs.size(); i += 2) {
      total += outputs[i + 1].Margin(target_label) - outputs[i].Margin(target_label);
    }
    return total / static_cast<double>(w);
  }
  std::vector<double> sums(n + 1, 0.0), counts(n + 1, 0.0);
  for (size_t d = 0; d < size_of_draw.size(); ++d) {
    sums[size_of_draw[d]] +=
        outputs[2 * d + 1].Margin(target_label) - outputs[2 * d].Margin(target_label);
    counts[size_of_draw[d]] += 1.0;
  }
  double total = 0.0;
  for (size_t k = 0; k <= n; ++k) total += sums[k] / counts[k];
  return total / static_cast<double>(n + 1);
}

CounterfactualResult ClossGenerate(const ExampleRecord& example, const SearchConfig& config,
                                   const ModelGateway& gateway) {
  config.Validate();
  if (!gateway.HasGradients()) throw CapabilityError("closs needs classifier gradients");
  if (!gateway.HasMlm()) throw CapabilityError("closs needs a masked language model");
  const auto start = std::chrono::steady_clock::now();
  const SearchProblem problem =
      MakeProblem(gateway, example.ClassifierText(), config.substitutions_after_loc);
  const CandidatePool pool = ProposeSubstitutes(problem, gateway, config.k);

  const ExpandFn expand = [&](const SubstitutionState& state) {
    struct Job {
      size_t position;
      size_t entry;
    };
    std::vector<Job> jobs;
    for (size_t p = 0; p < pool.positions.size(); ++p) {
      if (state.EditsPosition(p)) continue;
      for (size_t e = 0; e < pool.positions[p].size(); ++e) jobs.push_back({p, e});
    }
    std::vector<double> values(jobs.size());
    std::exception_ptr error;
    const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic) if (config.parallel)
    for (long i = 0; i < n; ++i) {
      try {
        const Job& job = jobs[i];
        const PoolEntry& entry = pool.positions[job.position][job.entry];
        const auto players = PromisingPlayers(pool, state, problem, job.position);
        values[i] = EstimateShapley({job.position, entry.token}, players, state,
                                    problem.target_label, gateway, config.w, config.seed);
      } catch (...) {
#pragma omp critical(cfbench_closs_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);

    CandidateLists lists(state.ids.size());
    for (size_t i = 0; i < jobs.size(); ++i) {
      lists[jobs[i].position].push_back(
          {pool.positions[jobs[i].position][jobs[i].entry].token, values[i]});
    }
    return lists;
  };

  const auto outcome = RunBeamSearch(problem, gateway, config.b, expand, config.parallel);
  auto result = FinishSearchResult(example, Method::kCloss, problem, outcome);
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace cfbench
