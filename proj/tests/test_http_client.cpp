#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include <catch_amalgamated.hpp>
#include <httplib.h>
#include <json.hpp>

#include "quotescrub/http_client.hpp"

using nlohmann::json;
using quotescrub::HttpClientConfig;
using quotescrub::HttpCompletionClient;
using quotescrub::TransportError;

namespace {

// Minimal chat-completions endpoint running on a loopback port.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(int fail_first_n = 0) : fail_remaining_(fail_first_n) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      ++requests_;
      last_body_ = req.body;
      if (fail_remaining_ > 0) {
        --fail_remaining_;
        res.status = 503;
        res.set_content("busy", "text/plain");
        return;
      }
      const json body = json::parse(req.body, nullptr, false);
      std::string user_content;
      if (body.is_object() && body.contains("messages")) {
        for (const json& msg : body["messages"]) {
          if (msg.value("role", "") == "user") {
            user_content = msg.value("content", "");
          }
        }
      }
      const json reply = {
          {"choices",
           {{{"message",
              {{"role", "assistant"},
               {"content", "rewritten: " + user_content.substr(0, 16)}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  int port() const { return port_; }
  int requests() const { return requests_; }
  std::string last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> fail_remaining_;
  std::string last_body_;
};

HttpClientConfig config_for(int port) {
  HttpClientConfig cfg;
  cfg.endpoint_url =
      "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "test-model";
  cfg.temperature = 0.0;
  cfg.timeout_seconds = 10;
  cfg.max_retries = 2;
  cfg.retry_backoff_ms = 10;
  return cfg;
}

}  // namespace

TEST_CASE("completes against a chat-completions endpoint") {
  FakeEndpoint endpoint;
  HttpCompletionClient client(config_for(endpoint.port()));
  const std::string out = client.complete("please rewrite this text", "raw");
  CHECK(out == "rewritten: please rewrite t");

  const json body = json::parse(endpoint.last_body());
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == 0.0);
  REQUIRE(body["messages"].is_array());
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "please rewrite this text");
}

TEST_CASE("empty instruction falls back to the input as the user message") {
  FakeEndpoint endpoint;
  HttpCompletionClient client(config_for(endpoint.port()));
  client.complete("", "generate from this prompt");
  const json body = json::parse(endpoint.last_body());
  CHECK(body["messages"][0]["content"] == "generate from this prompt");
}

TEST_CASE("system prompt is prepended when configured") {
  FakeEndpoint endpoint;
  HttpClientConfig cfg = config_for(endpoint.port());
  cfg.system_prompt = "be terse";
  HttpCompletionClient client(cfg);
  client.complete("inst", "in");
  const json body = json::parse(endpoint.last_body());
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][0]["content"] == "be terse");
  CHECK(body["messages"][1]["role"] == "user");
}

TEST_CASE("retries through transient 5xx") {
  FakeEndpoint endpoint(/*fail_first_n=*/2);
  HttpCompletionClient client(config_for(endpoint.port()));
  const std::string out = client.complete("x", "");
  CHECK(out.rfind("rewritten:", 0) == 0);
  CHECK(endpoint.requests() == 3);
}

TEST_CASE("gives up after the retry budget") {
  FakeEndpoint endpoint(/*fail_first_n=*/10);
  HttpClientConfig cfg = config_for(endpoint.port());
  cfg.max_retries = 1;
  HttpCompletionClient client(cfg);
  CHECK_THROWS_AS(client.complete("x", ""), TransportError);
  CHECK(endpoint.requests() == 2);
}

TEST_CASE("non-retryable status is fatal immediately") {
  FakeEndpoint endpoint;
  HttpClientConfig cfg = config_for(endpoint.port());
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(endpoint.port()) +
                     "/wrong/path";
  HttpCompletionClient client(cfg);
  CHECK_THROWS_AS(client.complete("x", ""), TransportError);
  CHECK(endpoint.requests() == 0);
}

TEST_CASE("connection refusal surfaces as a transport error") {
  HttpClientConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";  // discard port
  cfg.max_retries = 0;
  cfg.timeout_seconds = 2;
  HttpCompletionClient client(cfg);
  CHECK_THROWS_AS(client.complete("x", ""), TransportError);
}

TEST_CASE("api key env handling") {
  FakeEndpoint endpoint;
  HttpClientConfig cfg = config_for(endpoint.port());
  cfg.api_key_env = "QUOTESCRUB_TEST_KEY_UNSET";
  unsetenv("QUOTESCRUB_TEST_KEY_UNSET");
  CHECK_THROWS_AS(HttpCompletionClient(cfg), quotescrub::ConfigError);

  setenv("QUOTESCRUB_TEST_KEY_UNSET", "sk-test", 1);
  HttpCompletionClient client(cfg);
  client.complete("x", "");
  CHECK(endpoint.requests() == 1);
  unsetenv("QUOTESCRUB_TEST_KEY_UNSET");
}

TEST_CASE("config file parsing") {
  SECTION("round trip") {
    const std::string path = "http_cfg_test.json";
    {
      std::ofstream out(path);
      out << R"({"endpoint_url": "http://h:1/p", "model": "m", "temperature": 0.5,
                 "timeout_seconds": 7, "api_key_env": "K", "max_retries": 4})";
    }
    const HttpClientConfig cfg = quotescrub::load_http_config(path);
    CHECK(cfg.endpoint_url == "http://h:1/p");
    CHECK(cfg.model == "m");
    CHECK(cfg.temperature == 0.5);
    CHECK(cfg.timeout_seconds == 7);
    CHECK(cfg.api_key_env == "K");
    CHECK(cfg.max_retries == 4);
    std::remove(path.c_str());
  }
  SECTION("missing endpoint is a format error") {
    const std::string path = "http_cfg_bad.json";
    {
      std::ofstream out(path);
      out << R"({"model": "m"})";
    }
    CHECK_THROWS_AS(quotescrub::load_http_config(path), quotescrub::FormatError);
    std::remove(path.c_str());
  }
  SECTION("missing file is an io error") {
    CHECK_THROWS_AS(quotescrub::load_http_config("nope.json"), quotescrub::IoError);
  }
}
