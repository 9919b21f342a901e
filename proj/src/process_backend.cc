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

#include "cfbench/process_backend.h"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "cfbench/error.h"

namespace cfbench {
namespace {

std::string ReadLine(FILE* f) {
  std::string line;
  int c;
  while ((c = std::fgetc(f)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
  if (c == EOF && line.empty()) {
    throw Error(ErrorKind::kGatewayUnavailable, "model server closed its output");
  }
  return line;
}

std::string RequireModel(const nlohmann::json& info, const char* role) {
  auto it = info.find(role);
  if (it == info.end() || it->is_null()) {
    throw CapabilityError(std::string("model server hosts no ") + role);
  }
  return it->at("model_id").get<std::string>();
}

}  // namespace

ModelServer::ModelServer(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ConfigurationError("empty model server command");
  // A dead child must surface as a write error, not kill this process.
  signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw Error(ErrorKind::kGatewayUnavailable, "pipe() failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw Error(ErrorKind::kGatewayUnavailable, "fork() failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");
  info_ = Call({{"op", "info"}});
}

ModelServer::~ModelServer() {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }
}

nlohmann::json ModelServer::Call(const nlohmann::json& request) {
  std::lock_guard lock(mu_);
  const std::string line = request.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), to_child_) != line.size() ||
      std::fflush(to_child_) != 0) {
    throw Error(ErrorKind::kGatewayUnavailable, "cannot write to model server");
  }
  auto reply = nlohmann::json::parse(ReadLine(from_child_), nullptr, false);
  if (reply.is_discarded()) {
    throw Error(ErrorKind::kGatewayUnavailable, "model server sent invalid JSON");
  }
  if (!reply.value("ok", false)) {
    throw Error(ErrorKind::kGatewayUnavailable,
                "model server error: " + reply.value("error", std::string("unknown")));
  }
  return reply;
}

ServerClassifier::ServerClassifier(std::shared_ptr<ModelServer> server)
    : server_(std::move(server)) {
  const auto& info = server_->info();
  model_id_ = RequireModel(info, "classifier");
  const auto& c = info.at("classifier");
  vocab_file_ = c.at("vocab_file").get<std::string>();
  max_length_ = c.value("max_length", size_t{512});
  if (c.contains("embedding_file") && !c["embedding_file"].is_null()) {
    embeddings_ = EmbeddingTable::FromRawFile(c.at("embedding_file").get<std::string>(),
                                              c.at("vocab_size").get<size_t>(),
                                              c.at("embedding_dim").get<size_t>());
  }
}

Logits ServerClassifier::Forward(std::span<const int> ids) const {
  return ForwardBatch({std::vector<int>(ids.begin(), ids.end())}).at(0);
}

std::vector<Logits> ServerClassifier::ForwardBatch(
    const std::vector<std::vector<int>>& batch) const {
  const auto reply = server_->Call({{"op", "classify"}, {"batch", batch}});
  std::vector<Logits> out;
  for (const auto& l : reply.at("logits")) out.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
  if (out.size() != batch.size()) {
    throw Error(ErrorKind::kGatewayUnavailable, "model server returned wrong batch size");
  }
  return out;
}

Matrix ServerClassifier::InputGradients(std::span<const int> ids, int label) const {
  if (embeddings_.dim() == 0) return Classifier::InputGradients(ids, label);
  const auto reply = server_->Call(
      {{"op", "gradients"}, {"ids", std::vector<int>(ids.begin(), ids.end())}, {"label", label}});
  const auto& rows = reply.at("gradients");
  Matrix g(ids.size(), embeddings_.dim());
  if (rows.size() != ids.size()) {
    throw Error(ErrorKind::kGatewayUnavailable, "gradient rows do not match token count");
  }
  for (size_t p = 0; p < rows.size(); ++p) {
    for (size_t j = 0; j < g.cols; ++j) g.at(p, j) = rows[p].at(j).get<double>();
  }
  return g;
}

ServerMaskedLm::ServerMaskedLm(std::shared_ptr<ModelServer> server)
    : server_(std::move(server)), model_id_(RequireModel(server_->info(), "mlm")) {}

std::vector<TokenProb> ServerMaskedLm::Predict(std::span<const int> ids, size_t position,
                                               size_t k) const {
  const auto reply = server_->Call({{"op", "mlm"},
                                    {"ids", std::vector<int>(ids.begin(), ids.end())},
                                    {"position", position},
                                    {"k", k}});
  std::vector<TokenProb> out;
  for (const auto& c : reply.at("candidates")) {
    out.push_back({c.at(0).get<int>(), c.at(1).get<double>()});
  }
  SortAndTruncate(out, k);
  return out;
}

ServerCausalLm::ServerCausalLm(std::shared_ptr<ModelServer> server)
    : server_(std::move(server)), model_id_(RequireModel(server_->info(), "lm")) {}

double ServerCausalLm::Perplexity(std::string_view text) const {
  return server_->Call({{"op", "perplexity"}, {"text", text}}).at("perplexity").get<double>();
}

ServerGenerator::ServerGenerator(std::shared_ptr<ModelServer> server)
    : server_(std::move(server)), model_id_(RequireModel(server_->info(), "generator")) {}

std::vector<std::string> ServerGenerator::Generate(
    std::string_view text, const std::optional<std::string>& code) const {
  nlohmann::json req = {{"op", "generate"}, {"text", text}};
  req["code"] = code ? nlohmann::json(*code) : nlohmann::json(nullptr);
  return server_->Call(req).at("generations").get<std::vector<std::string>>();
}

}  // namespace cfbench
