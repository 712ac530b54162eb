#pragma once

// Chat-completion and embedding access with caching, retries and a
// deterministic offline fallback. Every LLM-backed step takes an injected
// client, so the whole pipeline runs offline against mocks.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "shieldsql/common.hpp"

#include <json.hpp>

namespace shieldsql {

struct SamplingParams {
  double temperature = 1.0;
  int top_k = 50;
  int n = 1;  // candidate count

  void check() const {
    if (n < 1) throw std::invalid_argument("SamplingParams.n must be >= 1");
    if (temperature < 0) throw std::invalid_argument("SamplingParams.temperature must be >= 0");
  }

  std::string digest_part() const {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "t%.4f|k%d|n%d", temperature, top_k, n);
    return buf;
  }
};

struct QuotaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EndpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//===--------------------------------------------------------------------===//
// Clients
//===--------------------------------------------------------------------===//

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns exactly params.n completions for the prompt.
  virtual std::vector<std::string> complete_n(const std::string& prompt,
                                              const SamplingParams& params) = 0;
  virtual std::string model_id() const = 0;
};

// Scripted client for tests and offline runs. Responses can be keyed by
// prompt digest or served from a default list (cycled to fill n).
class MockChatClient : public ChatClient {
 public:
  MockChatClient() = default;
  MockChatClient(const MockChatClient& o)
      : canned_(o.canned_),
        defaults_(o.defaults_),
        calls_(o.calls_.load()),
        fail_next_(o.fail_next_.load()) {}

  void add_canned(const std::string& prompt, std::vector<std::string> replies) {
    canned_[hex64(fnv1a(prompt))] = std::move(replies);
  }
  void add_canned_digest(const std::string& digest, std::vector<std::string> replies) {
    canned_[digest] = std::move(replies);
  }
  void set_default(std::vector<std::string> replies) { defaults_ = std::move(replies); }
  void set_transient_failures(int n) { fail_next_ = n; }

  // File form: JSON object {prompt_digest: [replies...]}, "*" = default.
  static MockChatClient from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read mock fixture: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    MockChatClient c;
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::vector<std::string> replies = it.value().get<std::vector<std::string>>();
      if (it.key() == "*")
        c.set_default(std::move(replies));
      else
        c.add_canned_digest(it.key(), std::move(replies));
    }
    return c;
  }

  std::vector<std::string> complete_n(const std::string& prompt,
                                      const SamplingParams& params) override {
    params.check();
    calls_.fetch_add(1);
    if (fail_next_.load() > 0) {
      fail_next_.fetch_sub(1);
      throw EndpointError("simulated transient failure");
    }
    const std::vector<std::string>* source = &defaults_;
    auto it = canned_.find(hex64(fnv1a(prompt)));
    if (it != canned_.end()) source = &it->second;
    std::vector<std::string> out;
    if (source->empty()) {
      // Deterministic filler keeps pipelines running with no fixture.
      for (int i = 0; i < params.n; ++i)
        out.push_back("mock-reply-" + std::to_string(i) + "-" + hex64(fnv1a(prompt)).substr(0, 8));
      return out;
    }
    for (int i = 0; i < params.n; ++i) out.push_back((*source)[i % source->size()]);
    return out;
  }

  std::string model_id() const override { return "mock"; }
  int call_count() const { return calls_.load(); }

 private:
  // Canned maps are set up before sharing; only the counters are touched
  // concurrently.
  std::map<std::string, std::vector<std::string>> canned_;
  std::vector<std::string> defaults_;
  std::atomic<int> calls_{0};
  std::atomic<int> fail_next_{0};
};

//===--------------------------------------------------------------------===//
// Disk cache + retry wrapper
//===--------------------------------------------------------------------===//

// Wraps any client with an on-disk response cache and retry-with-backoff.
// Cache entries are keyed by (model id, prompt digest, sampling params);
// individual candidates are addressed by index inside the entry.
class CachingClient : public ChatClient {
 public:
  CachingClient(std::shared_ptr<ChatClient> inner, std::string cache_dir, int max_retries = 3,
                double backoff_seconds = 0.25)
      : inner_(std::move(inner)),
        cache_dir_(std::move(cache_dir)),
        max_retries_(max_retries),
        backoff_seconds_(backoff_seconds) {
    std::filesystem::create_directories(cache_dir_);
  }

  std::vector<std::string> complete_n(const std::string& prompt,
                                      const SamplingParams& params) override {
    params.check();
    std::string key = entry_key(prompt, params);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto cached = read_entry(key);
      if (cached && cached->size() >= static_cast<size_t>(params.n)) {
        cached->resize(static_cast<size_t>(params.n));
        return *cached;
      }
    }
    std::vector<std::string> out = call_with_retries(prompt, params);
    if (out.size() != static_cast<size_t>(params.n))
      throw EndpointError("endpoint returned " + std::to_string(out.size()) + " completions, want " +
                          std::to_string(params.n));
    {
      std::lock_guard<std::mutex> lock(mu_);
      write_entry(key, out);
    }
    return out;
  }

  std::string model_id() const override { return inner_->model_id(); }

 private:
  std::shared_ptr<ChatClient> inner_;
  std::string cache_dir_;
  int max_retries_;
  double backoff_seconds_;
  std::mutex mu_;

  std::string entry_key(const std::string& prompt, const SamplingParams& params) const {
    uint64_t h = fnv1a(inner_->model_id());
    h = fnv1a(prompt, h);
    h = fnv1a(params.digest_part(), h);
    return hex64(h);
  }

  std::filesystem::path entry_path(const std::string& key) const {
    return std::filesystem::path(cache_dir_) / (key + ".json");
  }

  std::optional<std::vector<std::string>> read_entry(const std::string& key) const {
    std::ifstream in(entry_path(key));
    if (!in) return std::nullopt;
    try {
      nlohmann::json j = nlohmann::json::parse(in);
      return j.at("completions").get<std::vector<std::string>>();
    } catch (const std::exception&) {
      return std::nullopt;  // corrupt entry: treat as miss
    }
  }

  void write_entry(const std::string& key, const std::vector<std::string>& completions) const {
    nlohmann::json j;
    j["completions"] = completions;
    auto tmp = entry_path(key);
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << j.dump();
    }
    std::filesystem::rename(tmp, entry_path(key));
  }

  std::vector<std::string> call_with_retries(const std::string& prompt,
                                             const SamplingParams& params) {
    double backoff = backoff_seconds_;
    for (int attempt = 0;; ++attempt) {
      try {
        return inner_->complete_n(prompt, params);
      } catch (const QuotaError&) {
        throw;  // quota problems are not transient
      } catch (const EndpointError&) {
        if (attempt + 1 >= max_retries_) throw;
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        backoff *= 2;
      }
    }
  }
};

//===--------------------------------------------------------------------===//
// HTTP client (de-facto chat-completions convention)
//===--------------------------------------------------------------------===//
// Endpoint configuration comes from SHIELD_LLM_URL / SHIELD_LLM_MODEL /
// SHIELD_LLM_KEY. Definition lives in llm_http.hpp so offline builds and
// tests never pull in the HTTP stack; only the CLI includes it.

struct LlmEndpointConfig {
  std::string url, model, key;

  static LlmEndpointConfig from_env() {
    LlmEndpointConfig c;
    if (const char* u = std::getenv("SHIELD_LLM_URL")) c.url = u;
    if (const char* m = std::getenv("SHIELD_LLM_MODEL")) c.model = m;
    if (const char* k = std::getenv("SHIELD_LLM_KEY")) c.key = k;
    return c;
  }
  bool configured() const { return !url.empty(); }
};

//===--------------------------------------------------------------------===//
// Embeddings
//===--------------------------------------------------------------------===//

enum class EmbedMode { Remote, Fallback };

// Character-trigram term-frequency embedding, unit norm. Dimensions come
// from the joint trigram vocabulary of the call, so vectors within one call
// are directly comparable; the mapping is deterministic.
inline std::vector<std::vector<double>> embed_fallback(const std::vector<std::string>& texts) {
  auto trigrams = [](const std::string& text) {
    std::map<std::string, double> tf;
    std::string s = to_lower(text);
    if (s.size() < 3) {
      if (!s.empty()) tf[s] += 1.0;
      return tf;
    }
    for (size_t i = 0; i + 3 <= s.size(); ++i) tf[s.substr(i, 3)] += 1.0;
    return tf;
  };

  std::vector<std::map<std::string, double>> tfs;
  tfs.reserve(texts.size());
  std::map<std::string, size_t> vocab;  // ordered -> deterministic dimension order
  for (const auto& t : texts) {
    tfs.push_back(trigrams(t));
    for (const auto& [g, _] : tfs.back()) vocab.emplace(g, 0);
  }
  size_t dim = 0;
  for (auto& [g, idx] : vocab) idx = dim++;
  if (dim == 0) dim = 1;  // all-empty call still yields fixed-dimension vectors

  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& tf : tfs) {
    std::vector<double> v(dim, 0.0);
    for (const auto& [g, count] : tf) v[vocab.at(g)] = count;
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (double& x : v) x /= norm;
    else
      v[0] = 1.0;  // empty text: fixed unit vector
    out.push_back(std::move(v));
  }
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Batch embedder signature shared by selection and the SQD defense.
using Embedder = std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;

inline Embedder fallback_embedder() {
  return [](const std::vector<std::string>& texts) { return embed_fallback(texts); };
}

// Remote-mode implementation hook; installed by the HTTP layer so offline
// binaries never link it. Unset remote mode fails with an endpoint error.
inline Embedder& remote_embedder_slot() {
  static Embedder slot;
  return slot;
}

inline std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                              EmbedMode mode) {
  if (mode == EmbedMode::Fallback) return embed_fallback(texts);
  if (!remote_embedder_slot())
    throw EndpointError("remote embedding endpoint is not configured");
  auto vectors = remote_embedder_slot()(texts);
  for (auto& v : vectors) {  // normalization contract holds in both modes
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (double& x : v) x /= norm;
  }
  return vectors;
}

}  // namespace shieldsql
