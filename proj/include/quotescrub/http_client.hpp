#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "quotescrub/errors.hpp"
#include "quotescrub/scrub.hpp"

namespace quotescrub {

// Operator-supplied settings for a chat-completions-compatible endpoint.
// The API key is never stored in the file; the file names an environment
// variable instead.
struct HttpClientConfig {
  std::string endpoint_url;  // e.g. http://localhost:8080/v1/chat/completions
  std::string model;
  double temperature = 0.0;
  double timeout_seconds = 120.0;
  std::string api_key_env;    // name of the env var holding the key, if any
  std::string system_prompt;  // optional fixed system message
  int max_retries = 2;        // transport-level retries on 429/5xx/connect
  int retry_backoff_ms = 500;
};

inline HttpClientConfig load_http_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open http config: " + path);
  nlohmann::json obj = nlohmann::json::parse(in, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw FormatError(FormatError::Kind::bad_value,
                      "http config: invalid JSON in " + path);
  }
  HttpClientConfig cfg;
  if (!obj.contains("endpoint_url") || !obj["endpoint_url"].is_string()) {
    throw FormatError(FormatError::Kind::bad_value,
                      "http config: endpoint_url (string) is required");
  }
  cfg.endpoint_url = obj["endpoint_url"].get<std::string>();
  cfg.model = obj.value("model", std::string{});
  cfg.temperature = obj.value("temperature", 0.0);
  cfg.timeout_seconds = obj.value("timeout_seconds", 120.0);
  cfg.api_key_env = obj.value("api_key_env", std::string{});
  cfg.system_prompt = obj.value("system_prompt", std::string{});
  cfg.max_retries = obj.value("max_retries", 2);
  cfg.retry_backoff_ms = obj.value("retry_backoff_ms", 500);
  return cfg;
}

// Chat-completions client: one POST per complete() call, body
// {"model", "temperature", "messages": [...]}; the completion is the first
// choice's message content. A fresh connection per request keeps the client
// safe for concurrent use; callers cap parallelism with a semaphore.
class HttpCompletionClient : public CompletionClient {
 public:
  explicit HttpCompletionClient(HttpClientConfig cfg) : cfg_(std::move(cfg)) {
    split_url();
    if (!cfg_.api_key_env.empty()) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw ConfigError("http client: environment variable " +
                          cfg_.api_key_env + " is not set");
      }
      api_key_ = key;
    }
  }

  std::string complete(const std::string& instruction,
                       const std::string& input) override {
    nlohmann::json messages = nlohmann::json::array();
    if (!cfg_.system_prompt.empty()) {
      messages.push_back({{"role", "system"}, {"content", cfg_.system_prompt}});
    }
    messages.push_back(
        {{"role", "user"}, {"content", instruction.empty() ? input : instruction}});
    nlohmann::json body = {{"model", cfg_.model},
                           {"temperature", cfg_.temperature},
                           {"messages", messages}};
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            cfg_.retry_backoff_ms * (1 << (attempt - 1))));
      }
      httplib::Client client(base_url_);
      client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
      client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
      if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

      httplib::Result res = client.Post(path_, payload, "application/json");
      if (!res) {
        last_error = "connection error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw TransportError("http client: status " + std::to_string(res->status) +
                             ": " + res->body.substr(0, 200));
      }
      return parse_completion(res->body);
    }
    throw TransportError("http client: retries exhausted (" + last_error + ")");
  }

 private:
  static std::string parse_completion(const std::string& body) {
    nlohmann::json obj = nlohmann::json::parse(body, nullptr, false);
    if (obj.is_discarded()) {
      throw TransportError("http client: response is not JSON");
    }
    if (!obj.contains("choices") || !obj["choices"].is_array() ||
        obj["choices"].empty()) {
      throw TransportError("http client: response has no choices");
    }
    const nlohmann::json& first = obj["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
      throw TransportError("http client: malformed choice message");
    }
    return first["message"]["content"].get<std::string>();
  }

  void split_url() {
    const std::string& url = cfg_.endpoint_url;
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw ConfigError("http client: endpoint_url needs a scheme: " + url);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_url_ = url;
      path_ = "/";
    } else {
      base_url_ = url.substr(0, path_start);
      path_ = url.substr(path_start);
    }
  }

  HttpClientConfig cfg_;
  std::string api_key_;
  std::string base_url_;
  std::string path_;
};

}  // namespace quotescrub
