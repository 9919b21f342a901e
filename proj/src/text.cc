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

#include "cfbench/text.h"

#include <cctype>

#include "cfbench/error.h"

namespace cfbench {

std::string Preprocess(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  // Restore the separator spelling.
  size_t pos = 0;
  while ((pos = out.find("[sep]", pos)) != std::string::npos) {
    out.replace(pos, kSepToken.size(), kSepToken);
    pos += kSepToken.size();
  }
  return out;
}

std::string EncodePair(std::string_view question, std::string_view sentence) {
  if (question.empty() || sentence.empty()) {
    throw InvalidInput("both parts of a sentence pair must be non-empty");
  }
  std::string out(question);
  out += kPairSeparator;
  out += sentence;
  return out;
}

std::pair<std::string, std::string> SplitPair(std::string_view encoded) {
  const size_t pos = encoded.find(kPairSeparator);
  if (pos == std::string_view::npos) {
    throw InvalidInput("encoded pair has no separator");
  }
  return {std::string(encoded.substr(0, pos)),
          std::string(encoded.substr(pos + kPairSeparator.size()))};
}

size_t CountOccurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  size_t count = 0;
  for (size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace cfbench
