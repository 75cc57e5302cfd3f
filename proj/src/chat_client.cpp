#include "tagctd/chat_client.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tagctd/util.hpp"

namespace tagctd {

namespace fs = std::filesystem;

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) fs::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  std::lock_guard<std::mutex> lock(mu_);
  fs::path path = fs::path(dir_) / (key + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ResponseCache::put(const std::string& key, const std::string& body) {
  if (!enabled()) return;
  std::lock_guard<std::mutex> lock(mu_);
  fs::path path = fs::path(dir_) / (key + ".json");
  if (fs::exists(path)) return;  // a retry or a racing worker already stored it
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot write cache entry " + path.string());
    out << body;
  }
  fs::rename(tmp, path);
}

std::size_t ResponseCache::purge() {
  if (!enabled()) return 0;
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t removed = 0;
  if (!fs::exists(dir_)) return 0;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      fs::remove(entry.path());
      ++removed;
    }
  }
  return removed;
}

namespace {

const char* to_string(ResponseFormat f) {
  return f == ResponseFormat::JsonObject ? "json_object" : "text";
}

void validate_request(const ChatRequest& request) {
  if (request.messages.empty()) fail(Errc::InvalidArgument, "chat request has no messages");
  if (request.messages.front().role != "system")
    fail(Errc::InvalidArgument, "first chat message must use the system role");
  for (const ChatMessage& m : request.messages)
    if (m.role != "system" && m.role != "user" && m.role != "assistant")
      fail(Errc::InvalidArgument, "unknown chat role '" + m.role + "'");
  if (request.temperature < 0.0) fail(Errc::InvalidArgument, "temperature must be >= 0");
}

// Splits "http://host:port/path" into the httplib client origin and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    fail(Errc::ConfigError, "endpoint must be an http(s) URL: " + endpoint);
  auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

HttpResult default_transport(const std::string& url, const HeaderList& headers,
                             const std::string& body) {
  auto [origin, path] = split_endpoint(url);
  httplib::Client client(origin);
  client.set_connection_timeout(15);
  client.set_read_timeout(120);
  httplib::Headers hl;
  for (const auto& [k, v] : headers) hl.emplace(k, v);
  auto res = client.Post(path, hl, body, "application/json");
  if (!res) return {0, "", true, httplib::to_string(res.error())};
  return {res->status, res->body, false, ""};
}

}  // namespace

ChatClient::ChatClient(std::string endpoint, std::string api_key, RetryPolicy policy,
                       ResponseCache* cache, Transport transport)
    : endpoint_(std::move(endpoint)),
      api_key_(std::move(api_key)),
      policy_(policy),
      cache_(cache),
      transport_(transport ? std::move(transport) : Transport(default_transport)) {
  if (endpoint_.empty()) fail(Errc::ConfigError, "provider.endpoint is not configured");
  if (policy_.max_attempts < 1) fail(Errc::InvalidArgument, "max_attempts must be >= 1");
}

std::string ChatClient::request_payload(const ChatRequest& request) {
  nlohmann::ordered_json doc;
  doc["model"] = request.model;
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const ChatMessage& m : request.messages)
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  doc["messages"] = std::move(msgs);
  doc["temperature"] = request.temperature;
  doc["max_tokens"] = request.max_tokens;
  doc["response_format"] = {{"type", to_string(request.response_format)}};
  return doc.dump();
}

std::string ChatClient::cache_key(const std::string& endpoint, const ChatRequest& request) {
  nlohmann::ordered_json doc;
  doc["endpoint"] = endpoint;
  doc["model"] = request.model;
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const ChatMessage& m : request.messages)
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  doc["messages"] = std::move(msgs);
  doc["temperature"] = request.temperature;
  doc["response_format"] = to_string(request.response_format);
  return hex64(fnv1a64(doc.dump()));
}

ChatResponse ChatClient::parse_response_body(const std::string& body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("choices") ||
      !doc["choices"].is_array() || doc["choices"].empty())
    fail(Errc::MalformedProviderOutput, "response has no choices");
  const auto& first = doc["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string())
    fail(Errc::MalformedProviderOutput, "response choice has no message content");
  ChatResponse out;
  out.content = first["message"]["content"].get<std::string>();
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const auto& u = doc["usage"];
    if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_unsigned())
      out.prompt_tokens = u["prompt_tokens"].get<std::uint64_t>();
    if (u.contains("completion_tokens") && u["completion_tokens"].is_number_unsigned())
      out.completion_tokens = u["completion_tokens"].get<std::uint64_t>();
  }
  return out;
}

ChatResponse ChatClient::chat(const ChatRequest& request, CallStats* stats) {
  validate_request(request);
  const std::string key = cache_key(endpoint_, request);

  if (cache_ && cache_->enabled()) {
    if (auto stored = cache_->get(key)) {
      ChatResponse out = parse_response_body(*stored);
      out.attempts = 0;
      out.from_cache = true;
      if (stats) stats->cache_hits += 1;
      return out;
    }
  }

  HeaderList headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  const std::string payload = request_payload(request);

  std::string last_error;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    HttpResult res = transport_(endpoint_, headers, payload);
    bool retryable = false;
    if (res.transport_error) {
      retryable = true;
      last_error = res.error.empty() ? "transport failure" : res.error;
    } else if (res.status == 401 || res.status == 403) {
      fail(Errc::AuthFailure, "endpoint rejected the credential (HTTP " +
                                  std::to_string(res.status) + ")");
    } else if (res.status >= 500 || res.status == 429 || res.status == 408) {
      retryable = true;
      last_error = "HTTP " + std::to_string(res.status);
    } else if (res.status >= 200 && res.status < 300) {
      ChatResponse out = parse_response_body(res.body);
      out.attempts = attempt;
      if (cache_ && cache_->enabled()) cache_->put(key, res.body);
      return out;
    } else {
      fail(Errc::ProviderUnavailable, "endpoint returned HTTP " + std::to_string(res.status));
    }

    if (retryable && attempt < policy_.max_attempts && policy_.base_delay_ms > 0) {
      std::int64_t delay = static_cast<std::int64_t>(policy_.base_delay_ms) << (attempt - 1);
      delay = std::min<std::int64_t>(delay, policy_.max_delay_ms);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
  }
  fail(Errc::ProviderUnavailable,
       "gave up after " + std::to_string(policy_.max_attempts) + " attempts: " + last_error);
}

}  // namespace tagctd
