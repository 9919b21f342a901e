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

#include "cfbench/chat.h"


#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "cfbench/digest.h"
#include "cfbench/error.h"
#include "httplib.h"
#include "json.hpp"
#include "spdlog/spdlog.h"

namespace cfbench {
namespace {

std::string UtcTimestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class LimiterGuard {
 public:
  explicit LimiterGuard(RateLimiter* l) : l_(l) {
    if (l_) l_->Acquire();
  }
  ~LimiterGuard() {
    if (l_) l_->Release();
  }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;

 private:
  RateLimiter* l_;
};

}  // namespace

std::string CacheKey(const ChatRequest& request) {
  const nlohmann::json canonical = {
      {"model", request.model_id},
      {"system", request.system_prompt},
      {"user", request.user_prompt},
      {"temperature", request.decoding.temperature},
      {"max_tokens", request.decoding.max_tokens},
  };
  return Sha256Hex(canonical.dump());
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    // A torn final line from an interrupted write is skipped.
    if (j.is_discarded() || !j.contains("cache_key") || !j.contains("response")) continue;
    entries_.emplace(j["cache_key"].get<std::string>(), j["response"].get<std::string>());
  }
}

std::optional<std::string> ResponseCache::Lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::Store(const ChatExchange& e) {
  std::lock_guard lock(mu_);
  if (!entries_.emplace(e.cache_key, e.response).second) return;
  if (path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to cache " + path_.string());
  const nlohmann::json j = {{"cache_key", e.cache_key},       {"model_id", e.model_id},
                            {"system_prompt", e.system_prompt}, {"user_prompt", e.user_prompt},
                            {"response", e.response},         {"timestamp", e.timestamp}};
  out << j.dump() << '\n';
}

size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void RateLimiter::Acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return available_ > 0; });
  --available_;
}

void RateLimiter::Release() {
  {
    std::lock_guard lock(mu_);
    ++available_;
  }
  cv_.notify_one();
}

HttpChatClient::HttpChatClient(std::string base_url, std::string api_key, RetryPolicy retry,
                               std::shared_ptr<RateLimiter> limiter)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      retry_(retry),
      limiter_(std::move(limiter)) {}

std::string HttpChatClient::Complete(const ChatRequest& request) {
  const nlohmann::json body = {
      {"model", request.model_id},
      {"temperature", request.decoding.temperature},
      {"max_tokens", request.decoding.max_tokens},
      {"messages",
       {{{"role", "system"}, {"content", request.system_prompt}},
        {{"role", "user"}, {"content", request.user_prompt}}}},
  };
  const std::string payload = body.dump();
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

  auto backoff = retry_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, retry_.max_backoff);
    }
    ++attempts_;
    httplib::Result res;
    {
      LimiterGuard guard(limiter_.get());
      httplib::Client client(base_url_);
      client.set_connection_timeout(30);
      client.set_read_timeout(120);
      res = client.Post("/v1/chat/completions", headers, payload, "application/json");
    }
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorKind::kUpstreamUnavailable,
                  "chat endpoint returned HTTP " + std::to_string(res->status));
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorKind::kMalformedOutput, "chat endpoint returned non-JSON body");
    }
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::kMalformedOutput, "chat response lacks choices[0].message.content");
    }
  }
  throw Error(ErrorKind::kUpstreamUnavailable, "retries exhausted (" + last_error + ")");
}

CachedChatClient::CachedChatClient(std::shared_ptr<ResponseCache> cache,
                                   std::shared_ptr<ChatClient> upstream)
    : cache_(std::move(cache)), upstream_(std::move(upstream)) {}

std::string CachedChatClient::Complete(const ChatRequest& request) {
  const std::string key = CacheKey(request);
  if (auto hit = cache_->Lookup(key)) return *hit;
  if (!upstream_) {
    throw ConfigurationError("no chat credential or replay-only mode, and no cached response");
  }

  std::promise<std::string> promise;
  std::shared_future<std::string> shared;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    if (auto hit = cache_->Lookup(key)) return *hit;
    auto it = in_flight_.find(key);
    if (it != in_flight_.end()) {
      shared = it->second;
    } else {
      shared = promise.get_future().share();
      in_flight_.emplace(key, shared);
      owner = true;
    }
  }
  if (!owner) return shared.get();

  try {
    ++upstream_calls_;
    std::string response = upstream_->Complete(request);
    cache_->Store({key, request.model_id, request.system_prompt, request.user_prompt,
                   response, UtcTimestamp()});
    promise.set_value(response);
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
  }
  return shared.get();
}

std::shared_ptr<CachedChatClient> MakeChatClient(const ChatSettings& settings) {
  auto cache = std::make_shared<ResponseCache>(settings.cache_file);
  std::shared_ptr<ChatClient> upstream;
  if (!settings.replay_only) {
    const char* key = std::getenv(settings.api_key_env.c_str());
    if (key && *key) {
      upstream = std::make_shared<HttpChatClient>(
          settings.base_url, key, settings.retry,
          std::make_shared<RateLimiter>(settings.max_in_flight));
    } else {
      spdlog::warn("{} is not set; chat requests are served from cache only",
                   settings.api_key_env);
    }
  }
  return std::make_shared<CachedChatClient>(std::move(cache), std::move(upstream));
}

}  // namespace cfbench
