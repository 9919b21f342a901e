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

// Backend interfaces behind the model gateway. Token ids passed to a
// classifier never include [CLS]; backends add whatever framing they need.

#ifndef CFBENCH_MODELS_H_
#define CFBENCH_MODELS_H_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfbench/types.h"

namespace cfbench {

using Logits = std::array<double, 2>;

// Input embedding table, V x d, float storage.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(size_t vocab_size, size_t dim)
      : vocab_size_(vocab_size), dim_(dim), data_(vocab_size * dim, 0.0f) {}

  // Raw little-endian float32, row-major.
  static EmbeddingTable FromRawFile(const std::filesystem::path& path,
                                    size_t vocab_size, size_t dim);

  size_t vocab_size() const { return vocab_size_; }
  size_t dim() const { return dim_; }
  std::span<const float> row(size_t id) const { return {data_.data() + id * dim_, dim_}; }
  std::span<float> row(size_t id) { return {data_.data() + id * dim_, dim_}; }
  const float* data() const { return data_.data(); }

 private:
  size_t vocab_size_ = 0;
  size_t dim_ = 0;
  std::vector<float> data_;
};

class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string ModelId() const = 0;
  virtual size_t MaxLength() const { return 512; }
  virtual Logits Forward(std::span<const int> ids) const = 0;
  virtual std::vector<Logits> ForwardBatch(const std::vector<std::vector<int>>& batch) const;

  // White-box surface; the defaults report that gradients are unavailable.
  virtual const EmbeddingTable* Embeddings() const { return nullptr; }
  // d logit[label] / d embedding(position), L x d.
  virtual Matrix InputGradients(std::span<const int> ids, int label) const;
};

struct TokenProb {
  int token;
  double probability;
};

class MaskedLm {
 public:
  virtual ~MaskedLm() = default;
  virtual std::string ModelId() const = 0;
  // Distribution over the token at `position` with that token masked; at
  // most k entries, sorted by probability descending then token id.
  virtual std::vector<TokenProb> Predict(std::span<const int> ids, size_t position,
                                         size_t k) const = 0;
};

class CausalLm {
 public:
  virtual ~CausalLm() = default;
  virtual std::string ModelId() const = 0;
  // exp(mean negative log-likelihood). Single-token text is scored under the
  // unconditional first-token distribution.
  virtual double Perplexity(std::string_view text) const = 0;
};

class ControlledGenerator {
 public:
  virtual ~ControlledGenerator() = default;
  virtual std::string ModelId() const = 0;
  // Empty control code means the generator picks one itself.
  virtual std::vector<std::string> Generate(std::string_view text,
                                            const std::optional<std::string>& control_code) const = 0;
};

// Sorts descending by probability, ties by ascending token id, and keeps k.
void SortAndTruncate(std::vector<TokenProb>& probs, size_t k);

}  // namespace cfbench

#endif  // CFBENCH_MODELS_H_
