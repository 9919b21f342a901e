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

// Small in-process models: differentiable toy classifiers with analytic
// gradients, count-based language models, and fixed-table stubs.

#ifndef CFBENCH_TOY_MODELS_H_
#define CFBENCH_TOY_MODELS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfbench/models.h"

namespace cfbench {

// logits[c] = bias[c] + scale * sum_p <weights[c], E[id_p]>, where scale is 1
// (sum pooling) or 1/L (mean pooling). Linear in the input embeddings, so
// first-order substitution estimates are exact.
class BagOfEmbeddingsClassifier : public Classifier {
 public:
  enum class Pooling { kSum, kMean };

  BagOfEmbeddingsClassifier(std::string model_id, EmbeddingTable embeddings,
                            Matrix weights, Logits bias, Pooling pooling = Pooling::kSum);

  // Random N(0, 1/d) embeddings and N(0, 1) weights.
  static BagOfEmbeddingsClassifier Random(size_t vocab_size, size_t dim, uint64_t seed,
                                          Logits bias = {0.0, 0.0});

  std::string ModelId() const override { return model_id_; }
  Logits Forward(std::span<const int> ids) const override;
  const EmbeddingTable* Embeddings() const override { return &embeddings_; }
  Matrix InputGradients(std::span<const int> ids, int label) const override;

  // Forward pass on explicit (possibly perturbed) input embeddings.
  Logits ForwardEmbeddings(const Matrix& inputs) const;

  const Matrix& weights() const { return weights_; }
  EmbeddingTable& mutable_embeddings() { return embeddings_; }

 private:
  std::string model_id_;
  EmbeddingTable embeddings_;
  Matrix weights_;  // 2 x d
  Logits bias_;
  Pooling pooling_;
};

// Nonlinear differentiable classifier:
//   x = sum_p decay^p * e_p,  h = tanh(A x + a),  logits = U h + u.
class TanhMlpClassifier : public Classifier {
 public:
  static TanhMlpClassifier Random(size_t vocab_size, size_t dim, size_t hidden,
                                  uint64_t seed);

  std::string ModelId() const override { return "toy-tanh-mlp"; }
  Logits Forward(std::span<const int> ids) const override;
  const EmbeddingTable* Embeddings() const override { return &embeddings_; }
  Matrix InputGradients(std::span<const int> ids, int label) const override;

  Logits ForwardEmbeddings(const Matrix& inputs) const;
  Matrix Lookup(std::span<const int> ids) const;

 private:
  TanhMlpClassifier() = default;

  EmbeddingTable embeddings_;
  Matrix hidden_weights_;  // H x d
  std::vector<double> hidden_bias_;
  Matrix output_weights_;  // 2 x H
  Logits output_bias_{};
  double decay_ = 0.9;
};

// Fixed candidate lists per position, independent of context.
class TableMaskedLm : public MaskedLm {
 public:
  explicit TableMaskedLm(std::map<size_t, std::vector<TokenProb>> table)
      : table_(std::move(table)) {}

  std::string ModelId() const override { return "stub-table-mlm"; }
  std::vector<TokenProb> Predict(std::span<const int> ids, size_t position,
                                 size_t k) const override;

 private:
  std::map<size_t, std::vector<TokenProb>> table_;
};

// P(v | left, right) proportional to P(v | left) * P(right | v) under an
// add-alpha smoothed bigram model over token ids. Special tokens are never
// proposed.
class BigramMaskedLm : public MaskedLm {
 public:
  BigramMaskedLm(size_t vocab_size, std::vector<bool> proposable,
                 const std::vector<std::vector<int>>& corpus, double alpha = 0.1);

  std::string ModelId() const override { return "stub-bigram-mlm"; }
  std::vector<TokenProb> Predict(std::span<const int> ids, size_t position,
                                 size_t k) const override;

 private:
  double Conditional(int prev, int next) const;

  size_t vocab_size_;
  std::vector<bool> proposable_;
  double alpha_;
  // Index vocab_size_ stands for the sentence boundary.
  std::unordered_map<uint64_t, double> pair_counts_;
  std::vector<double> context_counts_;
};

// Uniform over V symbols: perplexity is exactly V for any text.
class UniformLm : public CausalLm {
 public:
  explicit UniformLm(size_t vocab_size) : vocab_size_(vocab_size) {}
  std::string ModelId() const override { return "stub-uniform-lm"; }
  double Perplexity(std::string_view text) const override;

 private:
  size_t vocab_size_;
};

// Add-k smoothed word bigram model trained on a text corpus. Words are split
// on whitespace; unseen words share one <unk> slot.
class BigramLm : public CausalLm {
 public:
  BigramLm(const std::vector<std::string>& corpus, double add_k = 0.5);

  std::string ModelId() const override { return "stub-bigram-lm"; }
  double Perplexity(std::string_view text) const override;

 private:
  int WordId(const std::string& w) const;
  double LogProb(int prev, int word) const;

  std::unordered_map<std::string, int> words_;
  std::vector<double> unigram_;
  double total_ = 0.0;
  std::unordered_map<uint64_t, double> bigram_;
  std::vector<double> context_;
  double add_k_;
};

// Generator backed by a callback; used for tests and offline runs.
class FunctionGenerator : public ControlledGenerator {
 public:
  using Fn = std::function<std::vector<std::string>(std::string_view,
                                                    const std::optional<std::string>&)>;
  FunctionGenerator(std::string model_id, Fn fn)
      : model_id_(std::move(model_id)), fn_(std::move(fn)) {}

  std::string ModelId() const override { return model_id_; }
  std::vector<std::string> Generate(std::string_view text,
                                    const std::optional<std::string>& code) const override {
    return fn_(text, code);
  }

 private:
  std::string model_id_;
  Fn fn_;
};

// Rule-based stand-in for a controlled generator: applies the first matching
// negation rewrite ("is" -> "is not", "not" removed, ...).
class RuleNegationGenerator : public ControlledGenerator {
 public:
  std::string ModelId() const override { return "stub-rule-negation"; }
  std::vector<std::string> Generate(std::string_view text,
                                    const std::optional<std::string>& code) const override;

 private:
  static std::string Join(const std::vector<std::string>& words);
};

}  // namespace cfbench

#endif  // CFBENCH_TOY_MODELS_H_
