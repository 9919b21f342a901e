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

#include "cfbench/search.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>

#include "cfbench/error.h"
#include "cfbench/kernels.h"

namespace cfbench {
namespace {

bool RankBefore(const SubstitutionState& a, const SubstitutionState& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.edits < b.edits;
}

std::string TokenText(const Vocabulary& vocab, int token) {
  const std::string& t = vocab.Token(token);
  if (vocab.IsContinuation(token)) return t.substr(2);
  return t;
}

}  // namespace

void SearchConfig::Validate() const {
  if (w < 1 || b < 1 || k < 1) throw InvalidInput("w, b and k must be positive");
  if (!(t > 0.0 && t <= 1.0)) throw InvalidInput("t must lie in (0, 1]");
  if (!(substitutions_after_loc > 0.0 && substitutions_after_loc <= 1.0)) {
    throw InvalidInput("substitutions_after_loc must lie in (0, 1]");
  }
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
  j = nlohmann::json{{"w", c.w},
                     {"b", c.b},
                     {"k", c.k},
                     {"t", c.t},
                     {"substitutions_after_loc", c.substitutions_after_loc},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SearchConfig& c) {
  SearchConfig d;
  c.w = j.value("w", d.w);
  c.b = j.value("b", d.b);
  c.k = j.value("k", d.k);
  c.t = j.value("t", d.t);
  c.substitutions_after_loc = j.value("substitutions_after_loc", d.substitutions_after_loc);
  c.seed = j.value("seed", d.seed);
  c.Validate();
}

int MaxEdits(size_t length, double fraction) {
  // The epsilon keeps products such as 0.3 * 10 from landing just below 3.
  const auto n = static_cast<int>(std::floor(fraction * static_cast<double>(length) + 1e-9));
  return std::max(1, n);
}

bool SubstitutionState::EditsPosition(size_t position) const {
  return std::any_of(edits.begin(), edits.end(),
                     [position](const Edit& e) { return e.position == position; });
}

size_t SearchProblem::EligibleCount() const {
  return static_cast<size_t>(std::count(eligible.begin(), eligible.end(), true));
}

SubstitutionState SearchProblem::Root() const {
  SubstitutionState root;
  root.ids = base.token_ids;
  root.output = original;
  root.score = original.Margin(target_label);
  return root;
}

SearchProblem MakeProblem(const ModelGateway& gateway, const std::string& text,
                          double edit_fraction) {
  SearchProblem problem;
  problem.base = gateway.Tokenize(text);
  const auto& vocab = gateway.vocab();
  problem.eligible.resize(problem.base.size());
  problem.continuation.resize(problem.base.size());
  for (size_t p = 0; p < problem.base.size(); ++p) {
    const int id = problem.base.token_ids[p];
    problem.eligible[p] = !vocab.IsSpecial(id) || id == vocab.unk_id();
    problem.continuation[p] = vocab.IsContinuation(id);
  }
  problem.original = gateway.ClassifyIds(problem.base.token_ids);
  problem.target_label = 1 - problem.original.label;
  problem.budget = MaxEdits(problem.EligibleCount(), edit_fraction);
  return problem;
}

bool TokenAllowedAt(const Vocabulary& vocab, const SearchProblem& problem, size_t position,
                    int token) {
  if (vocab.IsSpecial(token)) return false;
  if (token == problem.base.token_ids[position]) return false;
  return vocab.IsContinuation(token) == problem.continuation[position];
}

GradientMatrix FlipGradients(const ModelGateway& gateway, std::span<const int> ids,
                             int target_label) {
  GradientMatrix toward = gateway.EmbeddingGradients(ids, target_label);
  const GradientMatrix away = gateway.EmbeddingGradients(ids, 1 - target_label);
  for (size_t i = 0; i < toward.values.data.size(); ++i) {
    toward.values.data[i] -= away.values.data[i];
  }
  return toward;
}

CandidateLists ScoreCandidates(const SubstitutionState& state, const GradientMatrix& gradients,
                               int k, const SearchProblem& problem,
                               const ModelGateway& gateway, bool parallel) {
  const auto& embeddings = gateway.Embeddings();
  const auto& vocab = gateway.vocab();
  const Matrix scores =
      parallel ? kernels::parallel::FirstOrderScores(embeddings, state.ids, gradients.values)
               : kernels::serial::FirstOrderScores(embeddings, state.ids, gradients.values);
  CandidateLists lists(state.ids.size());
  const size_t vocab_size = std::min(vocab.size(), embeddings.vocab_size());
  for (size_t p = 0; p < state.ids.size(); ++p) {
    if (!problem.eligible[p] || state.EditsPosition(p)) continue;
    auto& list = lists[p];
    for (size_t v = 0; v < vocab_size; ++v) {
      const int token = static_cast<int>(v);
      if (token == state.ids[p] || !TokenAllowedAt(vocab, problem, p, token)) continue;
      list.push_back({token, scores.at(p, v)});
    }
    const size_t keep = std::min(list.size(), static_cast<size_t>(k));
    std::partial_sort(list.begin(), list.begin() + static_cast<long>(keep), list.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.value != b.value) return a.value > b.value;
                        return a.token < b.token;
                      });
    list.resize(keep);
  }
  return lists;
}

std::vector<SubstitutionState> BeamStep(const std::vector<SubstitutionState>& beams,
                                        const std::vector<CandidateLists>& candidates,
                                        int beam_width, int budget) {
  if (beams.empty()) throw InvalidInput("beam step needs at least one beam");
  if (candidates.size() != beams.size()) {
    throw InvalidInput("one candidate list per beam is required");
  }
  std::map<std::vector<Edit>, SubstitutionState> children;
  for (size_t i = 0; i < beams.size(); ++i) {
    const auto& beam = beams[i];
    if (static_cast<int>(beam.edits.size()) >= budget) continue;
    const auto& lists = candidates[i];
    for (size_t p = 0; p < lists.size(); ++p) {
      if (beam.EditsPosition(p)) continue;
      for (const Candidate& c : lists[p]) {
        SubstitutionState child;
        child.edits = beam.edits;
        const Edit edit{p, c.token};
        child.edits.insert(std::upper_bound(child.edits.begin(), child.edits.end(), edit),
                           edit);
        child.score = beam.score + c.value;
        auto it = children.find(child.edits);
        if (it != children.end()) {
          if (child.score > it->second.score) it->second.score = child.score;
          continue;
        }
        child.ids = beam.ids;
        child.ids[p] = c.token;
        children.emplace(child.edits, std::move(child));
      }
    }
  }
  std::vector<SubstitutionState> ranked;
  ranked.reserve(children.size());
  for (auto& [edits, state] : children) ranked.push_back(std::move(state));
  const size_t keep = std::min(ranked.size(), static_cast<size_t>(beam_width));
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(keep), ranked.end(),
                    RankBefore);
  ranked.resize(keep);
  return ranked;
}

std::string RenderEdits(const TokenSequence& base, const std::vector<Edit>& edits,
                        const Vocabulary& vocab) {
  std::string text = base.text;
  auto ordered = edits;
  std::sort(ordered.begin(), ordered.end(),
            [](const Edit& a, const Edit& b) { return a.position > b.position; });
  for (const Edit& e : ordered) {
    const auto [begin, end] = base.char_offsets.at(e.position);
    text.replace(begin, end - begin, TokenText(vocab, e.token));
  }
  return text;
}

SearchOutcome RunBeamSearch(const SearchProblem& problem, const ModelGateway& gateway,
                            int beam_width, const ExpandFn& expand, bool parallel) {
  SearchOutcome outcome;
  if (problem.EligibleCount() == 0) return outcome;
  std::vector<SubstitutionState> beams = {problem.Root()};
  for (int depth = 1; depth <= problem.budget; ++depth) {
    std::vector<CandidateLists> candidates(beams.size());
    std::exception_ptr error;
    const long n = static_cast<long>(beams.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long i = 0; i < n; ++i) {
      try {
        candidates[i] = expand(beams[i]);
      } catch (...) {
#pragma omp critical(cfbench_search_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);

    auto children = BeamStep(beams, candidates, beam_width, problem.budget);
    if (children.empty()) break;
    std::vector<std::vector<int>> batch;
    batch.reserve(children.size());
    for (const auto& c : children) batch.push_back(c.ids);
    const auto outputs = gateway.ClassifyBatch(batch);
    for (size_t i = 0; i < children.size(); ++i) {
      children[i].output = outputs[i];
      children[i].score = outputs[i].Margin(problem.target_label);
    }
    outcome.depth_reached = depth;

    std::vector<const SubstitutionState*> flipped;
    for (const auto& c : children) {
      if (c.output.label == problem.target_label) flipped.push_back(&c);
    }
    std::sort(flipped.begin(), flipped.end(),
              [&](const SubstitutionState* a, const SubstitutionState* b) {
                const double pa = a->output.probabilities[problem.target_label];
                const double pb = b->output.probabilities[problem.target_label];
                if (pa != pb) return pa > pb;
                return a->edits < b->edits;
              });
    for (const auto* c : flipped) {
      std::string text = RenderEdits(problem.base, c->edits, gateway.vocab());
      if (gateway.Classify(text).label == problem.target_label) {
        outcome.flipped = *c;
        outcome.counterfactual_text = std::move(text);
        return outcome;
      }
    }
    beams = std::move(children);
  }
  return outcome;
}

CounterfactualResult FinishSearchResult(const ExampleRecord& example, Method method,
                                        const SearchProblem& problem,
                                        const SearchOutcome& outcome) {
  CounterfactualResult result;
  result.example_id = example.id;
  result.dataset = example.dataset;
  result.method = method;
  result.original_text = problem.base.text;
  result.original_label = problem.original.label;
  result.token_count = static_cast<int>(problem.EligibleCount());
  result.edit_budget = problem.budget;
  result.metadata["depth_reached"] = std::to_string(outcome.depth_reached);
  if (problem.base.truncated) result.metadata["warning"] = "input truncated";
  if (outcome.flipped) {
    result.edits_made = static_cast<int>(outcome.flipped->edits.size());
    SetOutcome(result, outcome.counterfactual_text, problem.target_label);
  } else {
    SetFailure(result, problem.EligibleCount() == 0 ? "no_substitutable_tokens"
                                                    : "budget_exhausted");
  }
  return result;
}

CounterfactualResult HotFlipGenerate(const ExampleRecord& example, const SearchConfig& config,
                                     const ModelGateway& gateway) {
  config.Validate();
  if (!gateway.HasGradients()) {
    throw CapabilityError("hotflip needs classifier gradients");
  }
  const auto start = std::chrono::steady_clock::now();
  const SearchProblem problem = MakeProblem(gateway, example.ClassifierText(), config.t);
  const ExpandFn expand = [&](const SubstitutionState& state) {
    // Nested beams already run in parallel; keep the inner kernel serial then.
    const GradientMatrix grads = FlipGradients(gateway, state.ids, problem.target_label);
    return ScoreCandidates(state, grads, config.k, problem, gateway, config.parallel);
  };
  const auto outcome = RunBeamSearch(problem, gateway, config.b, expand, config.parallel);
  auto result = FinishSearchResult(example, Method::kHotFlip, problem, outcome);
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace cfbench
