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

// Self-contained offline backend built from the loaded corpus: a
// whole-word vocabulary, a lexicon-driven linear classifier, bigram masked
// and causal LMs, and a rule-based negation generator. Good for smoke runs
// and tests; its numbers say nothing about real models.

#ifndef CFBENCH_STUB_BACKEND_H_
#define CFBENCH_STUB_BACKEND_H_

#include <filesystem>
#include <string>
#include <vector>

#include "cfbench/gateway.h"

namespace cfbench {

struct StubLexicon {
  // Words pushing the classifier toward label 1 and label 0.
  std::vector<std::string> label1;
  std::vector<std::string> label0;
  double strength = 1.0;  // lexicon word projection on the decision axis
  double noise = 0.05;    // spread of other words on the decision axis
  double scale = 6.0;     // logit gap per unit of mean projection
  size_t dim = 16;

  static StubLexicon FromJson(const nlohmann::json& j);
  static StubLexicon FromFile(const std::filesystem::path& path, Dataset dataset);
};

// Lower-cased words and punctuation, split like the tokenizer does.
std::vector<std::string> SplitWords(std::string_view text);

// Everything but the chat client. `corpus` supplies the vocabulary and the
// bigram statistics.
GatewayParts MakeStubParts(const std::vector<std::string>& corpus, const StubLexicon& lexicon,
                           uint64_t seed);

}  // namespace cfbench

#endif  // CFBENCH_STUB_BACKEND_H_
