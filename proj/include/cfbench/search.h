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

// Gradient-guided token substitution search.
//
// A substitution (p, v) is valued by the first-order change of the flip
// margin logit[target] - logit[original]:
//
//   value(p, v) = <E[v] - E[current token at p], d margin / d e_p>
//
// Beam search extends every beam by one new edit, ranks children by
// parent margin + value, keeps the best b, and re-scores survivors with a
// real classifier call. The search stops at the first depth where some
// survivor flips the label, or when the edit budget is spent.

#ifndef CFBENCH_SEARCH_H_
#define CFBENCH_SEARCH_H_

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cfbench/gateway.h"
#include "cfbench/types.h"

namespace cfbench {

struct SearchConfig {
  int w = 5;     // Shapley draws per candidate (CLOSS only)
  int b = 15;    // beam width
  int k = 30;    // candidates per position
  double t = 0.3;  // max fraction of tokens HotFlip may edit
  double substitutions_after_loc = 0.3;  // max fraction of tokens CLOSS may edit
  uint64_t seed = 0;
  bool parallel = true;

  // Throws InvalidInput on out-of-range values.
  void Validate() const;
};

void to_json(nlohmann::json& j, const SearchConfig& c);
void from_json(const nlohmann::json& j, SearchConfig& c);

// max(1, floor(fraction * length)).
int MaxEdits(size_t length, double fraction);

struct Edit {
  size_t position = 0;
  int token = 0;
  auto operator<=>(const Edit&) const = default;
};

struct SubstitutionState {
  std::vector<Edit> edits;  // sorted by position, one per position
  std::vector<int> ids;     // base ids with edits applied
  ClassifierOutput output;  // for `ids`
  double score = 0.0;

  bool EditsPosition(size_t position) const;
};

struct Candidate {
  int token = 0;
  double value = 0.0;
};

// Ranked candidates per position (index = position); empty where no
// substitution is allowed.
using CandidateLists = std::vector<std::vector<Candidate>>;

// One counterfactual search over a fixed input.
struct SearchProblem {
  TokenSequence base;
  std::vector<bool> eligible;  // substitutable positions (no special tokens)
  std::vector<bool> continuation;  // position holds a "##" piece
  ClassifierOutput original;
  int target_label = 1;
  int budget = 1;

  size_t EligibleCount() const;
  SubstitutionState Root() const;
};

SearchProblem MakeProblem(const ModelGateway& gateway, const std::string& text,
                          double edit_fraction);

// True if `token` may replace the token at `position`: not special, not the
// base token, and the same piece kind (word start or continuation).
bool TokenAllowedAt(const Vocabulary& vocab, const SearchProblem& problem, size_t position,
                    int token);

// d(logit[target] - logit[1 - target]) / d e_p.
GradientMatrix FlipGradients(const ModelGateway& gateway, std::span<const int> ids,
                             int target_label);

// Top-k candidates per unedited eligible position by first-order value;
// ties broken by token id.
CandidateLists ScoreCandidates(const SubstitutionState& state, const GradientMatrix& gradients,
                               int k, const SearchProblem& problem,
                               const ModelGateway& gateway, bool parallel = true);

// Children of every beam (one extra edit each) ranked by score, then by edit
// list; duplicates reached through different parents keep the best score.
// Returns at most `beam_width` states with `output` not yet filled in. An
// empty result means no legal extension remains.
std::vector<SubstitutionState> BeamStep(const std::vector<SubstitutionState>& beams,
                                        const std::vector<CandidateLists>& candidates,
                                        int beam_width, int budget);

// Replaces each edited token's character span with the new token text.
std::string RenderEdits(const TokenSequence& base, const std::vector<Edit>& edits,
                        const Vocabulary& vocab);

using ExpandFn = std::function<CandidateLists(const SubstitutionState&)>;

struct SearchOutcome {
  std::optional<SubstitutionState> flipped;
  std::string counterfactual_text;
  int depth_reached = 0;
};

// Shared beam-search driver. A flip is accepted only if classifying the
// rendered text from scratch also yields the target label.
SearchOutcome RunBeamSearch(const SearchProblem& problem, const ModelGateway& gateway,
                            int beam_width, const ExpandFn& expand, bool parallel = true);

CounterfactualResult HotFlipGenerate(const ExampleRecord& example, const SearchConfig& config,
                                     const ModelGateway& gateway);

// Fills the result from a finished search.
CounterfactualResult FinishSearchResult(const ExampleRecord& example, Method method,
                                        const SearchProblem& problem,
                                        const SearchOutcome& outcome);

}  // namespace cfbench

#endif  // CFBENCH_SEARCH_H_
