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

// Value types shared by every module: classifier outputs, token sequences,
// dataset records and counterfactual results.

#ifndef CFBENCH_TYPES_H_
#define CFBENCH_TYPES_H_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cfbench {

enum class Dataset { kSst2, kQnli };

std::string_view DatasetName(Dataset d);
// Throws InvalidInput for unknown names.
Dataset ParseDataset(std::string_view name);

enum class Method { kHotFlip, kCloss, kPolyjuice, kFizleNaive, kFizleGuided };

std::string_view MethodName(Method m);
Method ParseMethod(std::string_view name);
const std::vector<Method>& AllMethods();

// Binary classifier output. label == argmax(probabilities); ties go to 0.
struct ClassifierOutput {
  int label = 0;
  std::array<double, 2> probabilities{0.5, 0.5};
  std::array<double, 2> logits{0.0, 0.0};

  static ClassifierOutput FromLogits(std::array<double, 2> logits);

  // logit[target] - logit[1 - target]; positive iff `target` wins.
  double Margin(int target) const { return logits[target] - logits[1 - target]; }
};

struct TokenSequence {
  std::vector<int> token_ids;
  std::vector<std::string> surface_tokens;
  std::vector<std::pair<size_t, size_t>> char_offsets;
  // Source text the offsets point into.
  std::string text;
  bool truncated = false;

  size_t size() const { return token_ids.size(); }
};

// Dense row-major matrix.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(size_t r) const {
    return {data.data() + r * cols, cols};
  }
  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
};

// Gradient of one label's logit with respect to each input embedding.
struct GradientMatrix {
  Matrix values;  // L x d
  int target_label = 0;
};

struct ExampleRecord {
  std::string id;
  Dataset dataset = Dataset::kSst2;
  std::string text;      // SST-2
  std::string question;  // QNLI
  std::string sentence;  // QNLI
  int gold_label = 0;

  // Text fed to the classifier: the sentence for SST-2, the encoded pair for
  // QNLI.
  std::string ClassifierText() const;
};

void to_json(nlohmann::json& j, const ExampleRecord& r);
void from_json(const nlohmann::json& j, ExampleRecord& r);

struct CounterfactualResult {
  std::string example_id;
  Dataset dataset = Dataset::kSst2;
  Method method = Method::kHotFlip;
  std::string original_text;
  std::optional<std::string> counterfactual_text;
  int original_label = 0;
  std::optional<int> counterfactual_label;
  bool flipped = false;
  std::optional<int> edits_made;
  // Substitutable token count and the edit budget derived from it; set by the
  // search methods.
  std::optional<int> token_count;
  std::optional<int> edit_budget;
  // Perplexity of counterfactual_text under the report scorer, filled in by
  // the harness so reports can be rebuilt from the results file alone.
  std::optional<double> perplexity;
  double wall_time = 0.0;
  std::optional<std::string> failure_reason;
  std::map<std::string, std::string> metadata;
};

inline constexpr const char* kResultSchema = "cfbench.result/1";

// Serialization excludes wall_time; timings are persisted separately so the
// results file is reproducible byte for byte.
void to_json(nlohmann::json& j, const CounterfactualResult& r);
void from_json(const nlohmann::json& j, CounterfactualResult& r);

// Classifies `counterfactual` against `original_label` and fills the
// flip-related fields consistently.
void SetOutcome(CounterfactualResult& result, const std::string& counterfactual,
                int counterfactual_label);
void SetFailure(CounterfactualResult& result, std::string reason);

}  // namespace cfbench

#endif  // CFBENCH_TYPES_H_
