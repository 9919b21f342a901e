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

// Single entry point the methods use to reach models: the classifier under
// explanation, a masked LM, a causal LM for perplexity, a controlled
// generator and a chat endpoint. Any part may be absent; asking for an absent
// part raises a gateway-unavailable or capability error.

#ifndef CFBENCH_GATEWAY_H_
#define CFBENCH_GATEWAY_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cfbench/chat.h"
#include "cfbench/models.h"
#include "cfbench/tokenizer.h"
#include "cfbench/types.h"

namespace cfbench {

struct GatewayParts {
  std::shared_ptr<const WordPieceTokenizer> tokenizer;
  std::shared_ptr<const Classifier> classifier;
  std::shared_ptr<const MaskedLm> mlm;
  std::shared_ptr<const CausalLm> scorer;
  std::shared_ptr<const ControlledGenerator> generator;
  std::shared_ptr<ChatClient> chat;
  std::string chat_model_id = "gpt-4-turbo";
  DecodingParams decoding;
};

class ModelGateway {
 public:
  explicit ModelGateway(GatewayParts parts);

  // Tokenizes and truncates to the classifier's maximum length; truncation
  // sets TokenSequence::truncated and logs a warning.
  TokenSequence Tokenize(std::string_view text) const;

  ClassifierOutput Classify(std::string_view text) const;
  ClassifierOutput ClassifyIds(std::span<const int> ids) const;
  std::vector<ClassifierOutput> ClassifyBatch(const std::vector<std::vector<int>>& batch) const;

  // Gradient of logit[target_label] with respect to each input embedding.
  GradientMatrix EmbeddingGradients(const TokenSequence& tokens, int target_label) const;
  GradientMatrix EmbeddingGradients(std::span<const int> ids, int target_label) const;
  bool HasGradients() const;
  const EmbeddingTable& Embeddings() const;

  // Top-k substitutes for `position` with that token masked.
  std::vector<TokenProb> MlmTopK(const TokenSequence& tokens, size_t position, size_t k) const;
  bool HasMlm() const { return parts_.mlm != nullptr; }

  double SequencePerplexity(std::string_view text) const;
  std::string ScorerModelId() const;
  bool HasScorer() const { return parts_.scorer != nullptr; }
  bool HasChat() const { return parts_.chat != nullptr; }

  std::string ChatComplete(std::string_view system_prompt, std::string_view user_prompt) const;
  std::string ChatComplete(std::string_view system_prompt, std::string_view user_prompt,
                           const DecodingParams& decoding) const;
  const std::string& chat_model_id() const { return parts_.chat_model_id; }

  const ControlledGenerator& Generator() const;
  bool HasGenerator() const { return parts_.generator != nullptr; }

  const Vocabulary& vocab() const { return parts_.tokenizer->vocab(); }
  const Classifier& classifier() const;
  std::string ClassifierModelId() const;

 private:
  GatewayParts parts_;
};

}  // namespace cfbench

#endif  // CFBENCH_GATEWAY_H_
