#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

namespace progshot {

inline constexpr int kDefaultMaxTokens = 600;
inline constexpr std::size_t kDefaultConcurrency = 4;

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = kDefaultMaxTokens;
  std::vector<std::string> stop_sequences;
  std::string model_id;
  int n_samples = 1;
  // Which recorded sample to use for this request. Not part of the digest.
  // When unset, a per-digest cursor supplies it.
  std::optional<std::uint64_t> ordinal;
};

struct CompletionResponse {
  std::vector<std::string> choices;
  double latency_ms = 0.0;
  bool from_cache = false;
};

struct EmbeddingRequest {
  std::vector<std::string> inputs;
  std::string model_id;
};

struct EmbeddingResponse {
  std::vector<std::vector<float>> vectors;
};

std::string request_digest(const CompletionRequest& req);
std::string request_digest(const EmbeddingRequest& req);

// Deterministic offline embedder: lowercased word unigrams and bigrams are
// hashed into `dim` buckets, counted, then L2-normalized.
class HashingEmbedder {
 public:
  explicit HashingEmbedder(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const { return dim_; }
  std::vector<float> embed(const std::string& text) const;

 private:
  std::size_t dim_;
};

// Scales v to unit L2 norm in place. Throws ZeroVector for a zero or non-finite vector.
void normalize(std::vector<float>& v);

struct HttpReply {
  int status = 0;  // 0 for a transport failure
  std::string body;
};

// Moves request bodies to an endpoint. The default uses cpp-httplib; tests
// substitute in-process fakes.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const std::string& path, const std::string& body) = 0;
};

std::shared_ptr<Transport> make_http_transport(const std::string& base_url,
                                               const std::string& bearer_token,
                                               double timeout_s);

enum class GatewayMode { http, replay, stub };
enum class EmbeddingProvider { local, remote };

std::string_view to_string(GatewayMode m);
GatewayMode gateway_mode_from_string(std::string_view s);
std::string_view to_string(EmbeddingProvider p);
EmbeddingProvider embedding_provider_from_string(std::string_view s);

struct GatewayConfig {
  GatewayMode mode = GatewayMode::stub;
  std::string base_url;
  std::string api_key_env;  // environment variable holding the bearer token
  double timeout_s = 60.0;
  std::filesystem::path cache_dir;  // empty disables the cache
  std::filesystem::path fixtures;   // replay input
  std::filesystem::path record_to;  // when set, http responses are written here as fixtures
  std::string stub_completion;
  int max_retries = 3;
  int backoff_initial_ms = 200;
  std::size_t max_concurrency = kDefaultConcurrency;
  EmbeddingProvider embedding_provider = EmbeddingProvider::local;
  std::size_t embedding_dim = 384;
};

struct GatewayStats {
  std::uint64_t backend_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
};

class Gateway {
 public:
  explicit Gateway(GatewayConfig cfg, std::shared_ptr<Transport> transport = nullptr);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  CompletionResponse complete(const CompletionRequest& req);
  EmbeddingResponse embed(const EmbeddingRequest& req);

  // Writes recorded fixtures sorted by (digest, ordinal). Also runs on destruction.
  void flush_recording();

  // Keeps temperature-0 completions in memory so repeated prompts skip the backend.
  void set_memoize_greedy(bool on) { memoize_greedy_ = on; }

  const GatewayConfig& config() const { return cfg_; }
  GatewayStats stats() const;

 private:
  struct Fixture {
    std::vector<std::string> choices;
    std::vector<std::vector<float>> embeddings;
  };

  static std::map<std::string, std::map<std::uint64_t, Fixture>> load_fixtures(
      const std::filesystem::path& path);
  std::uint64_t next_ordinal(const std::string& digest);
  CompletionResponse complete_uncached(const CompletionRequest& req, const std::string& digest);
  std::vector<std::string> backend_complete(const CompletionRequest& req);
  std::vector<std::vector<float>> backend_embed(const EmbeddingRequest& req);
  HttpReply post_with_retry(const std::string& path, const std::string& body);
  std::optional<std::string> cache_get(const std::string& key);
  void cache_put(const std::string& key, const std::string& value);
  const Fixture& replay_lookup(const std::string& digest, std::uint64_t ordinal,
                               bool allow_last);
  void record(const std::string& digest, std::uint64_t ordinal, Fixture f);

  GatewayConfig cfg_;
  std::shared_ptr<Transport> transport_;
  HashingEmbedder local_;
  std::counting_semaphore<1024> slots_;

  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> cursors_;
  std::map<std::string, std::map<std::uint64_t, Fixture>> fixtures_;
  std::map<std::pair<std::string, std::uint64_t>, Fixture> recorded_;
  bool recording_dirty_ = false;
  std::atomic<bool> memoize_greedy_{false};
  std::map<std::string, std::vector<std::string>> greedy_memo_;

  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
};

}  // namespace progshot
