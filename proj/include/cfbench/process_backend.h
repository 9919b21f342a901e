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

// Models hosted by a child process speaking one JSON object per line on
// stdin/stdout (see tools/model_server.py). Requests:
//
//   {"op": "info"}
//   {"op": "classify", "batch": [[ids...], ...]}         -> {"logits": [[a, b], ...]}
//   {"op": "gradients", "ids": [...], "label": 0|1}       -> {"gradients": [[...], ...]}
//   {"op": "mlm", "ids": [...], "position": p, "k": k}    -> {"candidates": [[id, p], ...]}
//   {"op": "perplexity", "text": "..."}                    -> {"perplexity": x}
//   {"op": "generate", "text": "...", "code": "..."|null} -> {"generations": [...]}
//
// Every reply carries "ok"; failures set "ok": false and "error". The info
// reply describes the classifier (vocab file, raw float32 embedding file,
// dimensions) and names the other hosted models, or null when absent.

#ifndef CFBENCH_PROCESS_BACKEND_H_
#define CFBENCH_PROCESS_BACKEND_H_

#include <sys/types.h>

#include <cstdio>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cfbench/models.h"
#include "json.hpp"

namespace cfbench {

class ModelServer {
 public:
  explicit ModelServer(const std::vector<std::string>& argv);
  ~ModelServer();
  ModelServer(const ModelServer&) = delete;
  ModelServer& operator=(const ModelServer&) = delete;

  // One request/reply exchange; serialized because the child is sequential.
  nlohmann::json Call(const nlohmann::json& request);

  const nlohmann::json& info() const { return info_; }

 private:
  pid_t pid_ = -1;
  FILE* to_child_ = nullptr;
  FILE* from_child_ = nullptr;
  std::mutex mu_;
  nlohmann::json info_;
};

class ServerClassifier : public Classifier {
 public:
  explicit ServerClassifier(std::shared_ptr<ModelServer> server);

  std::string ModelId() const override { return model_id_; }
  size_t MaxLength() const override { return max_length_; }
  Logits Forward(std::span<const int> ids) const override;
  std::vector<Logits> ForwardBatch(const std::vector<std::vector<int>>& batch) const override;
  const EmbeddingTable* Embeddings() const override { return &embeddings_; }
  Matrix InputGradients(std::span<const int> ids, int label) const override;

  const std::string& vocab_file() const { return vocab_file_; }

 private:
  std::shared_ptr<ModelServer> server_;
  std::string model_id_;
  std::string vocab_file_;
  size_t max_length_ = 512;
  EmbeddingTable embeddings_;
};

class ServerMaskedLm : public MaskedLm {
 public:
  explicit ServerMaskedLm(std::shared_ptr<ModelServer> server);
  std::string ModelId() const override { return model_id_; }
  std::vector<TokenProb> Predict(std::span<const int> ids, size_t position,
                                 size_t k) const override;

 private:
  std::shared_ptr<ModelServer> server_;
  std::string model_id_;
};

class ServerCausalLm : public CausalLm {
 public:
  explicit ServerCausalLm(std::shared_ptr<ModelServer> server);
  std::string ModelId() const override { return model_id_; }
  double Perplexity(std::string_view text) const override;

 private:
  std::shared_ptr<ModelServer> server_;
  std::string model_id_;
};

class ServerGenerator : public ControlledGenerator {
 public:
  explicit ServerGenerator(std::shared_ptr<ModelServer> server);
  std::string ModelId() const override { return model_id_; }
  std::vector<std::string> Generate(std::string_view text,
                                    const std::optional<std::string>& code) const override;

 private:
  std::shared_ptr<ModelServer> server_;
  std::string model_id_;
};

}  // namespace cfbench

#endif  // CFBENCH_PROCESS_BACKEND_H_
