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

#ifndef CFBENCH_TOKENIZER_H_
#define CFBENCH_TOKENIZER_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfbench/types.h"

namespace cfbench {

// Token <-> id table in BERT vocab.txt layout (one token per line, id = line
// number). The five BERT special tokens must be present.
class Vocabulary {
 public:
  static Vocabulary FromFile(const std::filesystem::path& path);
  // Special tokens are prepended when missing.
  static Vocabulary FromTokens(const std::vector<std::string>& tokens);

  std::optional<int> Find(std::string_view token) const;
  const std::string& Token(int id) const { return tokens_.at(id); }
  size_t size() const { return tokens_.size(); }

  int pad_id() const { return pad_; }
  int unk_id() const { return unk_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }
  int mask_id() const { return mask_; }

  bool IsSpecial(int id) const {
    return id == pad_ || id == unk_ || id == cls_ || id == sep_ || id == mask_;
  }
  // "##" continuation piece.
  bool IsContinuation(int id) const;

  void Save(const std::filesystem::path& path) const;

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int pad_ = -1, unk_ = -1, cls_ = -1, sep_ = -1, mask_ = -1;
};

// Uncased WordPiece: splits on whitespace and punctuation, then greedy
// longest-match-first into vocabulary pieces. A literal "[SEP]" in the text
// maps to the separator token. Out-of-vocabulary words become [UNK] whose
// surface form is the original word, so detokenize/retokenize is stable.
class WordPieceTokenizer {
 public:
  explicit WordPieceTokenizer(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  TokenSequence Tokenize(std::string_view text) const;

  // Joins surface tokens; "##" pieces attach to their predecessor.
  static std::string Detokenize(std::span<const std::string> surface);

  const Vocabulary& vocab() const { return vocab_; }

 private:
  Vocabulary vocab_;
};

}  // namespace cfbench

#endif  // CFBENCH_TOKENIZER_H_
