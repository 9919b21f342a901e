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

// Chat-completion access for the prompting methods. Every exchange goes
// through an append-only response cache so runs can be replayed offline.

#ifndef CFBENCH_CHAT_H_
#define CFBENCH_CHAT_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace cfbench {

inline constexpr const char* kDefaultApiKeyEnv = "OPENAI_API_KEY";

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 256;
};

struct ChatRequest {
  std::string model_id;
  std::string system_prompt;
  std::string user_prompt;
  DecodingParams decoding;
};

// Hex SHA-256 over the canonical JSON of (model, prompts, decoding).
std::string CacheKey(const ChatRequest& request);

struct ChatExchange {
  std::string cache_key;
  std::string model_id;
  std::string system_prompt;
  std::string user_prompt;
  std::string response;
  std::string timestamp;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string Complete(const ChatRequest& request) = 0;
};

// Line-delimited store of ChatExchange records keyed by cache_key. Safe for
// concurrent readers and writers; the first record for a key wins.
class ResponseCache {
 public:
  // An empty path keeps the cache in memory only.
  explicit ResponseCache(std::filesystem::path path = {});

  std::optional<std::string> Lookup(const std::string& key) const;
  void Store(const ChatExchange& exchange);
  size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

// Bounds the number of requests in flight.
class RateLimiter {
 public:
  explicit RateLimiter(int max_in_flight) : available_(max_in_flight) {}

  void Acquire();
  void Release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
};

// OpenAI-compatible /v1/chat/completions client.
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(std::string base_url, std::string api_key, RetryPolicy retry,
                 std::shared_ptr<RateLimiter> limiter);

  std::string Complete(const ChatRequest& request) override;

  int attempts() const { return attempts_.load(); }

 private:
  std::string base_url_;
  std::string api_key_;
  RetryPolicy retry_;
  std::shared_ptr<RateLimiter> limiter_;
  std::atomic<int> attempts_{0};
};

// Cache in front of an optional upstream. A cache miss with no upstream is a
// configuration error (no credential, or replay-only mode). Concurrent
// identical requests share one upstream call.
class CachedChatClient : public ChatClient {
 public:
  CachedChatClient(std::shared_ptr<ResponseCache> cache, std::shared_ptr<ChatClient> upstream);

  std::string Complete(const ChatRequest& request) override;

  int upstream_calls() const { return upstream_calls_.load(); }

 private:
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<ChatClient> upstream_;
  std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<std::string>> in_flight_;
  std::atomic<int> upstream_calls_{0};
};

// Answers from a callback and counts calls.
class MockChatClient : public ChatClient {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;
  explicit MockChatClient(Responder responder) : responder_(std::move(responder)) {}

  std::string Complete(const ChatRequest& request) override {
    ++calls_;
    return responder_(request);
  }
  int calls() const { return calls_.load(); }

 private:
  Responder responder_;
  std::atomic<int> calls_{0};
};

struct ChatSettings {
  std::string model_id = "gpt-4-turbo";
  std::string base_url = "https://api.openai.com";
  std::string api_key_env = kDefaultApiKeyEnv;
  std::filesystem::path cache_file;
  DecodingParams decoding;
  int max_in_flight = 4;
  RetryPolicy retry;
  // Replay from cache only; never contact the upstream.
  bool replay_only = false;
};

// Cache-fronted client; the HTTP upstream is attached only when the credential
// variable is set and replay_only is false.
std::shared_ptr<CachedChatClient> MakeChatClient(const ChatSettings& settings);

}  // namespace cfbench

#endif  // CFBENCH_CHAT_H_
