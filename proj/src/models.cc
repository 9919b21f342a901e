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

#include "cfbench/models.h"

#include <algorithm>
#include <fstream>

#include "cfbench/error.h"

namespace cfbench {

EmbeddingTable EmbeddingTable::FromRawFile(const std::filesystem::path& path,
                                           size_t vocab_size, size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read embeddings " + path.string());
  EmbeddingTable table(vocab_size, dim);
  const auto bytes = static_cast<std::streamsize>(table.data_.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(table.data_.data()), bytes);
  if (in.gcount() != bytes) {
    throw IoError("embedding file " + path.string() + " is shorter than " +
                  std::to_string(vocab_size) + "x" + std::to_string(dim));
  }
  return table;
}

std::vector<Logits> Classifier::ForwardBatch(
    const std::vector<std::vector<int>>& batch) const {
  std::vector<Logits> out;
  out.reserve(batch.size());
  for (const auto& ids : batch) out.push_back(Forward(ids));
  return out;
}

Matrix Classifier::InputGradients(std::span<const int>, int) const {
  throw CapabilityError("classifier " + ModelId() + " does not expose gradients");
}

void SortAndTruncate(std::vector<TokenProb>& probs, size_t k) {
  std::sort(probs.begin(), probs.end(), [](const TokenProb& a, const TokenProb& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.token < b.token;
  });
  if (probs.size() > k) probs.resize(k);
}

}  // namespace cfbench
