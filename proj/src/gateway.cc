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

#include "cfbench/gateway.h"

#include "cfbench/error.h"
#include "cfbench/text.h"
#include "spdlog/spdlog.h"

namespace cfbench {

ModelGateway::ModelGateway(GatewayParts parts) : parts_(std::move(parts)) {
  if (!parts_.tokenizer) throw ConfigurationError("gateway needs a tokenizer");
}

const Classifier& ModelGateway::classifier() const {
  if (!parts_.classifier) {
    throw Error(ErrorKind::kGatewayUnavailable, "no classifier loaded");
  }
  return *parts_.classifier;
}

std::string ModelGateway::ClassifierModelId() const {
  return parts_.classifier ? parts_.classifier->ModelId() : "none";
}

TokenSequence ModelGateway::Tokenize(std::string_view text) const {
  if (Preprocess(text).empty()) throw InvalidInput("empty text");
  TokenSequence seq = parts_.tokenizer->Tokenize(text);
  const size_t limit = parts_.classifier ? parts_.classifier->MaxLength() : seq.size();
  if (seq.size() > limit) {
    spdlog::warn("input of {} tokens truncated to {}", seq.size(), limit);
    seq.token_ids.resize(limit);
    seq.surface_tokens.resize(limit);
    seq.char_offsets.resize(limit);
    seq.truncated = true;
  }
  return seq;
}

ClassifierOutput ModelGateway::Classify(std::string_view text) const {
  const auto& clf = classifier();
  const TokenSequence seq = Tokenize(text);
  return ClassifierOutput::FromLogits(clf.Forward(seq.token_ids));
}

ClassifierOutput ModelGateway::ClassifyIds(std::span<const int> ids) const {
  if (ids.empty()) throw InvalidInput("empty token sequence");
  return ClassifierOutput::FromLogits(classifier().Forward(ids));
}

std::vector<ClassifierOutput> ModelGateway::ClassifyBatch(
    const std::vector<std::vector<int>>& batch) const {
  std::vector<ClassifierOutput> out;
  if (batch.empty()) return out;
  out.reserve(batch.size());
  for (const auto& logits : classifier().ForwardBatch(batch)) {
    out.push_back(ClassifierOutput::FromLogits(logits));
  }
  return out;
}

bool ModelGateway::HasGradients() const {
  return parts_.classifier && parts_.classifier->Embeddings() != nullptr &&
         parts_.classifier->Embeddings()->dim() > 0;
}

const EmbeddingTable& ModelGateway::Embeddings() const {
  if (!HasGradients()) {
    throw CapabilityError("classifier " + ClassifierModelId() + " is not white-box");
  }
  return *parts_.classifier->Embeddings();
}

GradientMatrix ModelGateway::EmbeddingGradients(const TokenSequence& tokens,
                                                int target_label) const {
  return EmbeddingGradients(tokens.token_ids, target_label);
}

GradientMatrix ModelGateway::EmbeddingGradients(std::span<const int> ids,
                                                int target_label) const {
  if (ids.empty()) throw InvalidInput("empty token sequence");
  if (target_label != 0 && target_label != 1) throw InvalidInput("label must be 0 or 1");
  if (!HasGradients()) {
    throw CapabilityError("classifier " + ClassifierModelId() + " does not expose gradients");
  }
  GradientMatrix g;
  g.target_label = target_label;
  g.values = classifier().InputGradients(ids, target_label);
  if (g.values.rows != ids.size() || g.values.cols != Embeddings().dim()) {
    throw Error(ErrorKind::kGatewayUnavailable, "gradient shape mismatch");
  }
  return g;
}

std::vector<TokenProb> ModelGateway::MlmTopK(const TokenSequence& tokens, size_t position,
                                             size_t k) const {
  if (!parts_.mlm) throw CapabilityError("no masked language model loaded");
  if (position >= tokens.size()) throw InvalidInput("position out of range");
  if (k == 0) throw InvalidInput("k must be positive");
  return parts_.mlm->Predict(tokens.token_ids, position, k);
}

double ModelGateway::SequencePerplexity(std::string_view text) const {
  if (!parts_.scorer) throw Error(ErrorKind::kGatewayUnavailable, "no perplexity scorer loaded");
  if (Preprocess(text).empty()) throw InvalidInput("cannot score empty text");
  return parts_.scorer->Perplexity(text);
}

std::string ModelGateway::ScorerModelId() const {
  return parts_.scorer ? parts_.scorer->ModelId() : "none";
}

std::string ModelGateway::ChatComplete(std::string_view system_prompt,
                                       std::string_view user_prompt) const {
  return ChatComplete(system_prompt, user_prompt, parts_.decoding);
}

std::string ModelGateway::ChatComplete(std::string_view system_prompt,
                                       std::string_view user_prompt,
                                       const DecodingParams& decoding) const {
  if (!parts_.chat) throw ConfigurationError("no chat client configured");
  ChatRequest req{parts_.chat_model_id, std::string(system_prompt), std::string(user_prompt),
                  decoding};
  return parts_.chat->Complete(req);
}

const ControlledGenerator& ModelGateway::Generator() const {
  if (!parts_.generator) throw CapabilityError("no controlled generator loaded");
  return *parts_.generator;
}

}  // namespace cfbench
