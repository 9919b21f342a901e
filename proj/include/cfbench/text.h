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

#ifndef CFBENCH_TEXT_H_
#define CFBENCH_TEXT_H_

#include <string>
#include <string_view>
#include <utility>

namespace cfbench {

// Separator joining a QNLI question and sentence into one classifier input.
inline constexpr std::string_view kPairSeparator = " [SEP] ";
inline constexpr std::string_view kSepToken = "[SEP]";

// Lowercases, collapses whitespace runs to one space and strips both ends.
// The separator token keeps its upper-case spelling so that preprocessing an
// encoded pair is a no-op. Idempotent.
std::string Preprocess(std::string_view text);

// "<question> [SEP] <sentence>". Throws InvalidInput if either part is empty.
std::string EncodePair(std::string_view question, std::string_view sentence);

// Inverse of EncodePair: splits on the first separator. Throws InvalidInput
// when no separator is present.
std::pair<std::string, std::string> SplitPair(std::string_view encoded);

size_t CountOccurrences(std::string_view haystack, std::string_view needle);

}  // namespace cfbench

#endif  // CFBENCH_TEXT_H_
