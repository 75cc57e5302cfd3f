#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tagctd/graph.hpp"

namespace tagctd {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

enum class ResponseFormat { FreeText, JsonObject };

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;  // non-empty, first message is the system role
  double temperature = 0.0;
  int max_tokens = 1024;
  ResponseFormat response_format = ResponseFormat::FreeText;
};

struct ChatResponse {
  std::string content;
  std::optional<std::uint64_t> prompt_tokens;
  std::optional<std::uint64_t> completion_tokens;
  int attempts = 1;
  bool from_cache = false;
};

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 250;  // doubled per attempt, capped below
  int max_delay_ms = 4000;
};

// Raw POST outcome, injectable for tests.
struct HttpResult {
  int status = 0;
  std::string body;
  bool transport_error = false;
  std::string error;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;
using Transport = std::function<HttpResult(const std::string& url, const HeaderList& headers,
                                           const std::string& body)>;

// One response body per key, written once; concurrent readers, serialized
// writers.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::string dir);

  bool enabled() const { return !dir_.empty(); }
  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& body);
  std::size_t purge();

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  mutable std::mutex mu_;
};

// Minimal chat-completions client. Transient transport failures and 5xx
// (plus 408/429) responses are retried with exponential backoff; auth
// rejections are not. Cache hits return the stored body with no network I/O.
class ChatClient {
 public:
  ChatClient(std::string endpoint, std::string api_key, RetryPolicy policy = {},
             ResponseCache* cache = nullptr, Transport transport = {});

  ChatResponse chat(const ChatRequest& request, CallStats* stats = nullptr);

  // Deterministic digest of (endpoint, model, messages, temperature,
  // response_format). max_tokens is deliberately excluded.
  static std::string cache_key(const std::string& endpoint, const ChatRequest& request);

  static std::string request_payload(const ChatRequest& request);
  static ChatResponse parse_response_body(const std::string& body);

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  std::string api_key_;
  RetryPolicy policy_;
  ResponseCache* cache_ = nullptr;
  Transport transport_;
};

}  // namespace tagctd
