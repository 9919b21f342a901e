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

#include "cfbench/toy_models.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "cfbench/error.h"
#include "cfbench/random.h"

namespace cfbench {
namespace {

EmbeddingTable RandomTable(size_t vocab, size_t dim, std::mt19937_64& rng) {
  EmbeddingTable table(vocab, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (size_t v = 0; v < vocab; ++v) {
    for (auto& x : table.row(v)) x = static_cast<float>(Normal(rng) * scale);
  }
  return table;
}

uint64_t PairKey(uint64_t a, uint64_t b) { return (a << 32) | b; }

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

BagOfEmbeddingsClassifier::BagOfEmbeddingsClassifier(std::string model_id,
                                                     EmbeddingTable embeddings,
                                                     Matrix weights, Logits bias,
                                                     Pooling pooling)
    : model_id_(std::move(model_id)),
      embeddings_(std::move(embeddings)),
      weights_(std::move(weights)),
      bias_(bias),
      pooling_(pooling) {
  if (weights_.rows != 2 || weights_.cols != embeddings_.dim()) {
    throw InvalidInput("classifier weights must be 2 x embedding dim");
  }
}

BagOfEmbeddingsClassifier BagOfEmbeddingsClassifier::Random(size_t vocab_size, size_t dim,
                                                            uint64_t seed, Logits bias) {
  std::mt19937_64 rng(seed);
  auto table = RandomTable(vocab_size, dim, rng);
  Matrix w(2, dim);
  for (auto& x : w.data) x = Normal(rng);
  return BagOfEmbeddingsClassifier("toy-bag-of-embeddings", std::move(table), std::move(w),
                                   bias);
}

Logits BagOfEmbeddingsClassifier::ForwardEmbeddings(const Matrix& inputs) const {
  Logits out = bias_;
  const double scale =
      pooling_ == Pooling::kMean && inputs.rows > 0 ? 1.0 / inputs.rows : 1.0;
  for (size_t p = 0; p < inputs.rows; ++p) {
    const auto e = inputs.row(p);
    for (int c = 0; c < 2; ++c) {
      const auto w = weights_.row(c);
      double dot = 0.0;
      for (size_t j = 0; j < e.size(); ++j) dot += w[j] * e[j];
      out[c] += scale * dot;
    }
  }
  return out;
}

Logits BagOfEmbeddingsClassifier::Forward(std::span<const int> ids) const {
  Matrix inputs(ids.size(), embeddings_.dim());
  for (size_t p = 0; p < ids.size(); ++p) {
    const auto src = embeddings_.row(ids[p]);
    std::copy(src.begin(), src.end(), inputs.row(p).begin());
  }
  return ForwardEmbeddings(inputs);
}

Matrix BagOfEmbeddingsClassifier::InputGradients(std::span<const int> ids, int label) const {
  Matrix g(ids.size(), embeddings_.dim());
  const double scale =
      pooling_ == Pooling::kMean && !ids.empty() ? 1.0 / ids.size() : 1.0;
  const auto w = weights_.row(label);
  for (size_t p = 0; p < ids.size(); ++p) {
    auto row = g.row(p);
    for (size_t j = 0; j < row.size(); ++j) row[j] = scale * w[j];
  }
  return g;
}

TanhMlpClassifier TanhMlpClassifier::Random(size_t vocab_size, size_t dim, size_t hidden,
                                            uint64_t seed) {
  std::mt19937_64 rng(seed);
  TanhMlpClassifier m;
  m.embeddings_ = RandomTable(vocab_size, dim, rng);
  m.hidden_weights_ = Matrix(hidden, dim);
  for (auto& x : m.hidden_weights_.data) x = Normal(rng) / std::sqrt(double(dim));
  m.hidden_bias_.resize(hidden);
  for (auto& x : m.hidden_bias_) x = 0.1 * Normal(rng);
  m.output_weights_ = Matrix(2, hidden);
  for (auto& x : m.output_weights_.data) x = Normal(rng);
  m.output_bias_ = {0.0, 0.0};
  return m;
}

Matrix TanhMlpClassifier::Lookup(std::span<const int> ids) const {
  Matrix inputs(ids.size(), embeddings_.dim());
  for (size_t p = 0; p < ids.size(); ++p) {
    const auto src = embeddings_.row(ids[p]);
    std::copy(src.begin(), src.end(), inputs.row(p).begin());
  }
  return inputs;
}

Logits TanhMlpClassifier::ForwardEmbeddings(const Matrix& inputs) const {
  std::vector<double> x(inputs.cols, 0.0);
  double w = 1.0;
  for (size_t p = 0; p < inputs.rows; ++p, w *= decay_) {
    const auto e = inputs.row(p);
    for (size_t j = 0; j < x.size(); ++j) x[j] += w * e[j];
  }
  Logits out = output_bias_;
  for (size_t h = 0; h < hidden_weights_.rows; ++h) {
    const auto a = hidden_weights_.row(h);
    double z = hidden_bias_[h];
    for (size_t j = 0; j < x.size(); ++j) z += a[j] * x[j];
    const double act = std::tanh(z);
    out[0] += output_weights_.at(0, h) * act;
    out[1] += output_weights_.at(1, h) * act;
  }
  return out;
}

Logits TanhMlpClassifier::Forward(std::span<const int> ids) const {
  return ForwardEmbeddings(Lookup(ids));
}

Matrix TanhMlpClassifier::InputGradients(std::span<const int> ids, int label) const {
  const Matrix inputs = Lookup(ids);
  const size_t d = embeddings_.dim();
  std::vector<double> x(d, 0.0);
  double w = 1.0;
  for (size_t p = 0; p < inputs.rows; ++p, w *= decay_) {
    const auto e = inputs.row(p);
    for (size_t j = 0; j < d; ++j) x[j] += w * e[j];
  }
  // dlogit/dx = A^T (U[label] * (1 - tanh^2)).
  std::vector<double> dx(d, 0.0);
  for (size_t h = 0; h < hidden_weights_.rows; ++h) {
    const auto a = hidden_weights_.row(h);
    double z = hidden_bias_[h];
    for (size_t j = 0; j < d; ++j) z += a[j] * x[j];
    const double t = std::tanh(z);
    const double delta = output_weights_.at(label, h) * (1.0 - t * t);
    for (size_t j = 0; j < d; ++j) dx[j] += delta * a[j];
  }
  Matrix g(ids.size(), d);
  w = 1.0;
  for (size_t p = 0; p < ids.size(); ++p, w *= decay_) {
    auto row = g.row(p);
    for (size_t j = 0; j < d; ++j) row[j] = w * dx[j];
  }
  return g;
}

std::vector<TokenProb> TableMaskedLm::Predict(std::span<const int> ids, size_t position,
                                              size_t k) const {
  if (position >= ids.size()) throw InvalidInput("mask position out of range");
  auto it = table_.find(position);
  if (it == table_.end()) return {};
  auto out = it->second;
  SortAndTruncate(out, k);
  return out;
}

BigramMaskedLm::BigramMaskedLm(size_t vocab_size, std::vector<bool> proposable,
                               const std::vector<std::vector<int>>& corpus, double alpha)
    : vocab_size_(vocab_size),
      proposable_(std::move(proposable)),
      alpha_(alpha),
      context_counts_(vocab_size + 1, 0.0) {
  const int boundary = static_cast<int>(vocab_size_);
  for (const auto& sentence : corpus) {
    int prev = boundary;
    for (size_t i = 0; i <= sentence.size(); ++i) {
      const int next = i < sentence.size() ? sentence[i] : boundary;
      pair_counts_[PairKey(prev, next)] += 1.0;
      context_counts_[prev] += 1.0;
      prev = next;
    }
  }
}

double BigramMaskedLm::Conditional(int prev, int next) const {
  auto it = pair_counts_.find(PairKey(prev, next));
  const double c = it == pair_counts_.end() ? 0.0 : it->second;
  return (c + alpha_) / (context_counts_[prev] + alpha_ * (vocab_size_ + 1));
}

std::vector<TokenProb> BigramMaskedLm::Predict(std::span<const int> ids, size_t position,
                                               size_t k) const {
  if (position >= ids.size()) throw InvalidInput("mask position out of range");
  const int boundary = static_cast<int>(vocab_size_);
  const int left = position == 0 ? boundary : ids[position - 1];
  const int right = position + 1 == ids.size() ? boundary : ids[position + 1];
  std::vector<TokenProb> probs;
  double total = 0.0;
  for (size_t v = 0; v < vocab_size_; ++v) {
    if (!proposable_[v]) continue;
    const double p = Conditional(left, static_cast<int>(v)) *
                     Conditional(static_cast<int>(v), right);
    probs.push_back({static_cast<int>(v), p});
    total += p;
  }
  for (auto& tp : probs) tp.probability /= total;
  SortAndTruncate(probs, k);
  return probs;
}

double UniformLm::Perplexity(std::string_view text) const {
  if (SplitWords(text).empty()) throw InvalidInput("cannot score empty text");
  return static_cast<double>(vocab_size_);
}

BigramLm::BigramLm(const std::vector<std::string>& corpus, double add_k) : add_k_(add_k) {
  words_.emplace("<unk>", 0);
  std::vector<std::vector<int>> sentences;
  for (const auto& line : corpus) {
    std::vector<int> ids;
    for (const auto& w : SplitWords(line)) {
      auto [it, inserted] = words_.emplace(w, static_cast<int>(words_.size()));
      ids.push_back(it->second);
    }
    sentences.push_back(std::move(ids));
  }
  unigram_.assign(words_.size(), 0.0);
  context_.assign(words_.size(), 0.0);
  for (const auto& ids : sentences) {
    for (size_t i = 0; i < ids.size(); ++i) {
      unigram_[ids[i]] += 1.0;
      total_ += 1.0;
      if (i > 0) {
        bigram_[PairKey(ids[i - 1], ids[i])] += 1.0;
        context_[ids[i - 1]] += 1.0;
      }
    }
  }
}

int BigramLm::WordId(const std::string& w) const {
  auto it = words_.find(w);
  return it == words_.end() ? 0 : it->second;
}

double BigramLm::LogProb(int prev, int word) const {
  const double v = static_cast<double>(words_.size());
  if (prev < 0) return std::log((unigram_[word] + add_k_) / (total_ + add_k_ * v));
  auto it = bigram_.find(PairKey(prev, word));
  const double c = it == bigram_.end() ? 0.0 : it->second;
  return std::log((c + add_k_) / (context_[prev] + add_k_ * v));
}

double BigramLm::Perplexity(std::string_view text) const {
  const auto words = SplitWords(text);
  if (words.empty()) throw InvalidInput("cannot score empty text");
  if (words.size() == 1) return std::exp(-LogProb(-1, WordId(words[0])));
  double nll = 0.0;
  for (size_t i = 1; i < words.size(); ++i) {
    nll -= LogProb(WordId(words[i - 1]), WordId(words[i]));
  }
  return std::exp(nll / static_cast<double>(words.size() - 1));
}

std::vector<std::string> RuleNegationGenerator::Generate(
    std::string_view text, const std::optional<std::string>&) const {
  auto words = SplitWords(text);
  if (words.empty()) return {};
  static const char* kAux[] = {"is", "was", "are", "were", "does", "did", "can", "will", "has"};
  for (size_t i = 0; i < words.size(); ++i) {
    if (words[i] == "not" || words[i] == "never") {
      words.erase(words.begin() + static_cast<long>(i));
      return {Join(words)};
    }
  }
  for (size_t i = 0; i < words.size(); ++i) {
    for (const char* aux : kAux) {
      if (words[i] == aux) {
        words.insert(words.begin() + static_cast<long>(i) + 1, "not");
        return {Join(words)};
      }
    }
  }
  words.insert(words.begin() + (words.size() > 1 ? 1 : 0), "not");
  return {Join(words)};
}

std::string RuleNegationGenerator::Join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace cfbench
