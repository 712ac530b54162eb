#pragma once

// HTTP chat-completions client. Kept out of llm.hpp so offline binaries do
// not compile the HTTP stack.

#include <memory>
#include <semaphore>
#include <string>

#include "shieldsql/llm.hpp"

#include <httplib.h>
#include <json.hpp>

namespace shieldsql {

// POSTs the conventional chat-completions payload and reads the choices
// array. In-flight requests are bounded (default 4).
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(LlmEndpointConfig config, int max_in_flight = 4)
      : config_(std::move(config)), slots_(max_in_flight) {
    if (!config_.configured()) throw EndpointError("SHIELD_LLM_URL is not configured");
    auto scheme_end = config_.url.find("://");
    std::string rest = scheme_end == std::string::npos ? config_.url
                                                       : config_.url.substr(scheme_end + 3);
    auto slash = rest.find('/');
    host_ = (scheme_end == std::string::npos ? "http://" : config_.url.substr(0, scheme_end + 3)) +
            (slash == std::string::npos ? rest : rest.substr(0, slash));
    path_ = slash == std::string::npos ? "/v1/chat/completions" : rest.substr(slash);
  }

  std::vector<std::string> complete_n(const std::string& prompt,
                                      const SamplingParams& params) override {
    params.check();
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{&slots_};

    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = params.temperature;
    body["top_k"] = params.top_k;
    body["n"] = params.n;

    httplib::Client cli(host_);
    cli.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!config_.key.empty()) headers.emplace("Authorization", "Bearer " + config_.key);

    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw EndpointError("endpoint unreachable: " + host_);
    if (res->status == 429) throw QuotaError("quota exhausted (HTTP 429)");
    if (res->status != 200)
      throw EndpointError("endpoint error: HTTP " + std::to_string(res->status));

    nlohmann::json j = nlohmann::json::parse(res->body);
    std::vector<std::string> out;
    for (const auto& choice : j.at("choices"))
      out.push_back(choice.at("message").at("content").get<std::string>());
    return out;
  }

  std::string model_id() const override { return config_.model; }

 private:
  LlmEndpointConfig config_;
  std::string host_, path_;
  std::counting_semaphore<> slots_;
};

// Installs the remote-mode embedder against the conventional /v1/embeddings
// endpoint. Returns false (leaving fallback-only behavior) when no endpoint
// is configured.
inline bool install_remote_embedder(const LlmEndpointConfig& config) {
  if (!config.configured()) return false;
  remote_embedder_slot() = [config](const std::vector<std::string>& texts) {
    auto scheme_end = config.url.find("://");
    std::string rest =
        scheme_end == std::string::npos ? config.url : config.url.substr(scheme_end + 3);
    auto slash = rest.find('/');
    std::string host =
        (scheme_end == std::string::npos ? "http://" : config.url.substr(0, scheme_end + 3)) +
        (slash == std::string::npos ? rest : rest.substr(0, slash));

    httplib::Client cli(host);
    httplib::Headers headers;
    if (!config.key.empty()) headers.emplace("Authorization", "Bearer " + config.key);
    nlohmann::json body;
    body["model"] = config.model;
    body["input"] = texts;
    auto res = cli.Post("/v1/embeddings", headers, body.dump(), "application/json");
    if (!res) throw EndpointError("embedding endpoint unreachable: " + host);
    if (res->status == 429) throw QuotaError("quota exhausted (HTTP 429)");
    if (res->status != 200)
      throw EndpointError("embedding endpoint error: HTTP " + std::to_string(res->status));
    nlohmann::json j = nlohmann::json::parse(res->body);
    std::vector<std::vector<double>> out;
    for (const auto& item : j.at("data"))
      out.push_back(item.at("embedding").get<std::vector<double>>());
    return out;
  };
  return true;
}

}  // namespace shieldsql
