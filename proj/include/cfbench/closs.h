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

// MLM-proposed substitutions valued by sampled Shapley marginals.
//
// The pool is built once from the unmodified input. During the search each
// candidate c at position p is valued inside a cooperative game whose other
// players are the highest gradient-scored pool entries at every other open
// position. The characteristic function is the flip margin of the state with
// the coalition applied, the same unit as beam scores.

#ifndef CFBENCH_CLOSS_H_
#define CFBENCH_CLOSS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfbench/gateway.h"
#include "cfbench/search.h"

namespace cfbench {

struct PoolEntry {
  int token = 0;
  double mlm_probability = 0.0;
  double gradient_score = 0.0;
  std::optional<double> shapley_estimate;
};

struct CandidatePool {
  std::vector<std::vector<PoolEntry>> positions;  // index = token position

  bool Contains(size_t position, int token) const;
};

// MLM top-k per eligible position, minus the current token, special tokens
// and pieces of the wrong kind. Entries keep MLM order.
CandidatePool ProposeSubstitutes(const SearchProblem& problem, const ModelGateway& gateway,
                                 int k);

// Highest gradient-scored entry at each eligible position that `state` has not
// edited, skipping `exclude`.
std::vector<Edit> PromisingPlayers(const CandidatePool& pool, const SubstitutionState& state,
                                   const SearchProblem& problem, size_t exclude);

// Margin of `state` with `coalition` applied on top.
double CoalitionValue(std::span<const Edit> coalition, const SubstitutionState& state,
                      int target_label, const ModelGateway& gateway);

// Sampled Shapley value of `candidate`: w marginals, stratified by coalition
// size once w >= players + 1, else from random permutations. The draws depend
// only on the seed and the number of players, so symmetric candidates valued
// with the same seed get the same estimate.
double EstimateShapley(const Edit& candidate, std::span<const Edit> players,
                       const SubstitutionState& state, int target_label,
                       const ModelGateway& gateway, int w, uint64_t seed);

CounterfactualResult ClossGenerate(const ExampleRecord& example, const SearchConfig& config,
                                   const ModelGateway& gateway);

}  // namespace cfbench

#endif  // CFBENCH_CLOSS_H_
