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

#include "cfbench/tokenizer.h"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "cfbench/error.h"

namespace cfbench {
namespace {

constexpr const char* kSpecials[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

bool IsPunct(unsigned char c) { return c < 128 && std::ispunct(c); }

bool MatchesSep(std::string_view text, size_t pos) {
  if (pos + 5 > text.size()) return false;
  for (size_t i = 0; i < 5; ++i) {
    if (std::toupper(static_cast<unsigned char>(text[pos + i])) != "[SEP]"[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
  auto need = [&](const char* t) {
    auto it = index_.find(t);
    if (it == index_.end()) {
      throw InvalidInput(std::string("vocabulary lacks special token ") + t);
    }
    return it->second;
  };
  pad_ = need("[PAD]");
  unk_ = need("[UNK]");
  cls_ = need("[CLS]");
  sep_ = need("[SEP]");
  mask_ = need("[MASK]");
}

Vocabulary Vocabulary::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> all;
  for (const char* s : kSpecials) {
    if (std::find(tokens.begin(), tokens.end(), s) == tokens.end()) all.emplace_back(s);
  }
  all.insert(all.end(), tokens.begin(), tokens.end());
  return Vocabulary(std::move(all));
}

std::optional<int> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::IsContinuation(int id) const {
  const auto& t = tokens_.at(id);
  return t.size() > 2 && t[0] == '#' && t[1] == '#';
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

TokenSequence WordPieceTokenizer::Tokenize(std::string_view text) const {
  if (text.empty()) throw InvalidInput("cannot tokenize empty text");
  TokenSequence seq;
  seq.text = std::string(text);

  auto emit_word = [&](size_t begin, size_t end) {
    std::string word;
    for (size_t i = begin; i < end; ++i) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    }
    std::vector<std::pair<int, size_t>> pieces;  // (id, end offset within word)
    size_t start = 0;
    while (start < word.size()) {
      size_t stop = word.size();
      std::optional<int> found;
      while (stop > start) {
        std::string piece = word.substr(start, stop - start);
        if (start > 0) piece = "##" + piece;
        if ((found = vocab_.Find(piece))) break;
        --stop;
      }
      if (!found) {
        pieces.clear();
        break;
      }
      pieces.emplace_back(*found, stop);
      start = stop;
    }
    if (pieces.empty()) {
      seq.token_ids.push_back(vocab_.unk_id());
      seq.surface_tokens.push_back(word);
      seq.char_offsets.emplace_back(begin, end);
      return;
    }
    size_t piece_begin = 0;
    for (auto [id, piece_end] : pieces) {
      seq.token_ids.push_back(id);
      seq.surface_tokens.push_back(vocab_.Token(id));
      seq.char_offsets.emplace_back(begin + piece_begin, begin + piece_end);
      piece_begin = piece_end;
    }
  };

  size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (MatchesSep(text, i)) {
      seq.token_ids.push_back(vocab_.sep_id());
      seq.surface_tokens.emplace_back("[SEP]");
      seq.char_offsets.emplace_back(i, i + 5);
      i += 5;
      continue;
    }
    if (IsPunct(c)) {
      emit_word(i, i + 1);
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size()) {
      const auto d = static_cast<unsigned char>(text[j]);
      if (std::isspace(d) || IsPunct(d)) break;
      ++j;
    }
    emit_word(i, j);
    i = j;
  }
  if (seq.token_ids.empty()) throw InvalidInput("text has no tokens");
  return seq;
}

std::string WordPieceTokenizer::Detokenize(std::span<const std::string> surface) {
  std::string out;
  for (const auto& t : surface) {
    if (t.size() > 2 && t[0] == '#' && t[1] == '#') {
      out += t.substr(2);
      continue;
    }
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace cfbench
