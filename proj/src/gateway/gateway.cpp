#include <progshot/gateway.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>
#include <progshot/error.hpp>

#include "common/util.hpp"

namespace progshot {

using nlohmann::json;
namespace fs = std::filesystem;

std::string request_digest(const CompletionRequest& req) {
  json j = {{"kind", "completion"},
            {"model", req.model_id},
            {"prompt", req.prompt},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens},
            {"stop", req.stop_sequences},
            {"n", req.n_samples}};
  return detail::sha256_hex(j.dump());
}

std::string request_digest(const EmbeddingRequest& req) {
  json j = {{"kind", "embedding"}, {"model", req.model_id}, {"input", req.inputs}};
  return detail::sha256_hex(j.dump());
}

void normalize(std::vector<float>& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (!(sq > 0.0) || !std::isfinite(sq)) {
    throw Error(ErrorCode::zero_vector, "cannot normalize a zero or non-finite vector");
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

std::vector<float> HashingEmbedder::embed(const std::string& text) const {
  std::vector<float> v(dim_, 0.0f);
  const auto words = detail::word_tokens(text);
  auto bump = [&](std::string_view feature) {
    v[detail::fnv1a64(feature) % dim_] += 1.0f;
  };
  for (std::size_t i = 0; i < words.size(); ++i) {
    bump(words[i]);
    if (i + 1 < words.size()) bump(words[i] + " " + words[i + 1]);
  }
  if (words.empty()) bump("\x01<empty>");
  normalize(v);
  return v;
}

std::string_view to_string(GatewayMode m) {
  switch (m) {
    case GatewayMode::http: return "http";
    case GatewayMode::replay: return "replay";
    case GatewayMode::stub: return "stub";
  }
  return "stub";
}

GatewayMode gateway_mode_from_string(std::string_view s) {
  if (s == "http") return GatewayMode::http;
  if (s == "replay") return GatewayMode::replay;
  if (s == "stub") return GatewayMode::stub;
  throw Error(ErrorCode::config_error, "unknown gateway mode '" + std::string(s) + "'");
}

std::string_view to_string(EmbeddingProvider p) {
  return p == EmbeddingProvider::local ? "local" : "remote";
}

EmbeddingProvider embedding_provider_from_string(std::string_view s) {
  if (s == "local") return EmbeddingProvider::local;
  if (s == "remote") return EmbeddingProvider::remote;
  throw Error(ErrorCode::config_error, "unknown embedding provider '" + std::string(s) + "'");
}

Gateway::Gateway(GatewayConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      local_(cfg_.embedding_dim),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(cfg_.max_concurrency, 1, 1024))) {
  if (cfg_.embedding_dim == 0) throw Error(ErrorCode::config_error, "embedding_dim must be >= 1");
  if (cfg_.mode == GatewayMode::http && !transport_) {
    std::string token;
    if (!cfg_.api_key_env.empty()) {
      if (const char* v = std::getenv(cfg_.api_key_env.c_str())) token = v;
    }
    if (cfg_.base_url.empty()) throw Error(ErrorCode::config_error, "http mode needs base_url");
    transport_ = make_http_transport(cfg_.base_url, token, cfg_.timeout_s);
  }
  if (!cfg_.record_to.empty() && fs::exists(cfg_.record_to)) {
    // Recording extends an existing fixture file.
    for (auto& [digest, by_ordinal] : load_fixtures(cfg_.record_to)) {
      for (auto& [ordinal, f] : by_ordinal) recorded_[{digest, ordinal}] = std::move(f);
    }
  }
  if (cfg_.mode == GatewayMode::replay) fixtures_ = load_fixtures(cfg_.fixtures);
}

std::map<std::string, std::map<std::uint64_t, Gateway::Fixture>> Gateway::load_fixtures(
    const fs::path& path) {
  std::map<std::string, std::map<std::uint64_t, Fixture>> out;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::file_missing, "fixtures: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.contains("digest")) {
        throw Error(ErrorCode::malformed_record, path.string() + ":" + std::to_string(lineno));
      }
      Fixture f;
      if (rec.contains("response_choices")) {
        f.choices = rec["response_choices"].get<std::vector<std::string>>();
      }
      if (rec.contains("response_embeddings")) {
        f.embeddings = rec["response_embeddings"].get<std::vector<std::vector<float>>>();
      }
      out[rec["digest"].get<std::string>()][rec.value("ordinal", std::uint64_t{0})] =
          std::move(f);
    }
  }
  return out;
}

Gateway::~Gateway() {
  try {
    flush_recording();
  } catch (...) {
  }
}

GatewayStats Gateway::stats() const {
  return {backend_calls_.load(), cache_hits_.load(), retries_.load()};
}

std::uint64_t Gateway::next_ordinal(const std::string& digest) {
  std::lock_guard lock(mu_);
  return cursors_[digest]++;
}

std::optional<std::string> Gateway::cache_get(const std::string& key) {
  if (cfg_.cache_dir.empty()) return std::nullopt;
  const fs::path p = cfg_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::error_code ec;
  if (!fs::exists(p, ec)) return std::nullopt;
  return detail::read_file(p);
}

void Gateway::cache_put(const std::string& key, const std::string& value) {
  if (cfg_.cache_dir.empty()) return;
  detail::write_file(cfg_.cache_dir / key.substr(0, 2) / (key + ".json"), value);
}

const Gateway::Fixture& Gateway::replay_lookup(const std::string& digest, std::uint64_t ordinal,
                                               bool allow_last) {
  auto it = fixtures_.find(digest);
  if (it == fixtures_.end() || it->second.empty()) {
    throw Error(ErrorCode::fixture_miss, digest);
  }
  auto f = it->second.find(ordinal);
  if (f != it->second.end()) return f->second;
  if (allow_last) return std::prev(it->second.end())->second;
  throw Error(ErrorCode::fixture_miss, digest + "#" + std::to_string(ordinal));
}

void Gateway::record(const std::string& digest, std::uint64_t ordinal, Fixture f) {
  if (cfg_.record_to.empty()) return;
  std::lock_guard lock(mu_);
  recorded_[{digest, ordinal}] = std::move(f);
  recording_dirty_ = true;
}

void Gateway::flush_recording() {
  std::lock_guard lock(mu_);
  if (cfg_.record_to.empty() || !recording_dirty_) return;
  std::string out;
  for (const auto& [key, f] : recorded_) {
    json rec = {{"digest", key.first}, {"ordinal", key.second}};
    if (!f.embeddings.empty()) {
      rec["response_embeddings"] = f.embeddings;
    } else {
      rec["response_choices"] = f.choices;
    }
    out += rec.dump();
    out.push_back('\n');
  }
  detail::write_file(cfg_.record_to, out);
  recording_dirty_ = false;
}

HttpReply Gateway::post_with_retry(const std::string& path, const std::string& body) {
  HttpReply reply;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      retries_.fetch_add(1);
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<std::int64_t>(cfg_.backoff_initial_ms) << (attempt - 1)));
    }
    slots_.acquire();
    try {
      backend_calls_.fetch_add(1);
      reply = transport_->post(path, body);
    } catch (...) {
      slots_.release();
      reply = {0, "transport exception"};
      continue;
    }
    slots_.release();
    if (reply.status >= 200 && reply.status < 300) return reply;
    const bool retryable = reply.status == 0 || reply.status == 429 || reply.status >= 500;
    if (!retryable) break;
  }
  if (reply.status == 429) {
    throw Error(ErrorCode::quota_exceeded, path + " returned 429 after retries");
  }
  throw Error(ErrorCode::backend_unavailable,
              path + " failed with status " + std::to_string(reply.status) + ": " +
                  reply.body.substr(0, 200));
}

std::vector<std::string> Gateway::backend_complete(const CompletionRequest& req) {
  json body = {{"model", req.model_id},           {"prompt", req.prompt},
               {"temperature", req.temperature},  {"max_tokens", req.max_tokens},
               {"stop", req.stop_sequences},      {"n", req.n_samples}};
  const HttpReply reply = post_with_retry("/completions", body.dump());
  json j = json::parse(reply.body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array()) {
    throw Error(ErrorCode::backend_unavailable, "completion reply lacks a choices array");
  }
  std::vector<std::string> out;
  for (const auto& c : j["choices"]) {
    if (c.is_object() && c.contains("text") && c["text"].is_string()) {
      out.push_back(c["text"].get<std::string>());
    } else if (c.is_string()) {
      out.push_back(c.get<std::string>());
    } else {
      throw Error(ErrorCode::backend_unavailable, "completion choice lacks text");
    }
  }
  return out;
}

std::vector<std::vector<float>> Gateway::backend_embed(const EmbeddingRequest& req) {
  json body = {{"model", req.model_id}, {"input", req.inputs}};
  const HttpReply reply = post_with_retry("/embeddings", body.dump());
  json j = json::parse(reply.body, nullptr, false);
  if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
    throw Error(ErrorCode::backend_unavailable, "embedding reply lacks a data array");
  }
  std::vector<std::vector<float>> out;
  for (const auto& d : j["data"]) {
    out.push_back(d.at("embedding").get<std::vector<float>>());
  }
  return out;
}

CompletionResponse Gateway::complete(const CompletionRequest& req) {
  if (req.n_samples < 1) throw Error(ErrorCode::config_error, "n_samples must be >= 1");
  if (req.max_tokens < 1) throw Error(ErrorCode::config_error, "max_tokens must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  CompletionResponse resp;
  auto finish = [&] {
    resp.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return resp;
  };

  if (cfg_.mode == GatewayMode::stub) {
    resp.choices.assign(static_cast<std::size_t>(req.n_samples), cfg_.stub_completion);
    return finish();
  }

  const std::string digest = request_digest(req);
  const bool memo = memoize_greedy_ && req.temperature == 0.0;
  if (memo) {
    std::lock_guard lock(mu_);
    if (auto it = greedy_memo_.find(digest); it != greedy_memo_.end()) {
      resp.choices = it->second;
      resp.from_cache = true;
      cache_hits_.fetch_add(1);
      return finish();
    }
  }
  resp = complete_uncached(req, digest);
  if (memo) {
    std::lock_guard lock(mu_);
    greedy_memo_.emplace(digest, resp.choices);
  }
  return finish();
}

CompletionResponse Gateway::complete_uncached(const CompletionRequest& req,
                                              const std::string& digest) {
  CompletionResponse resp;
  auto finish = [&] { return resp; };
  const std::uint64_t ordinal = req.ordinal ? *req.ordinal : next_ordinal(digest);

  if (cfg_.mode == GatewayMode::replay) {
    std::lock_guard lock(mu_);
    resp.choices = replay_lookup(digest, ordinal, req.temperature == 0.0).choices;
    return finish();
  }

  const std::string key =
      req.temperature == 0.0 ? digest : digest + "." + std::to_string(ordinal);
  if (auto hit = cache_get(key)) {
    json j = json::parse(*hit, nullptr, false);
    if (!j.is_discarded() && j.contains("choices")) {
      cache_hits_.fetch_add(1);
      resp.choices = j["choices"].get<std::vector<std::string>>();
      resp.from_cache = true;
      record(digest, ordinal, {resp.choices, {}});
      return finish();
    }
  }
  resp.choices = backend_complete(req);
  if (resp.choices.size() != static_cast<std::size_t>(req.n_samples)) {
    throw Error(ErrorCode::backend_unavailable,
                "expected " + std::to_string(req.n_samples) + " choices, got " +
                    std::to_string(resp.choices.size()));
  }
  cache_put(key, json{{"choices", resp.choices}}.dump());
  record(digest, ordinal, {resp.choices, {}});
  return finish();
}

EmbeddingResponse Gateway::embed(const EmbeddingRequest& req) {
  if (req.inputs.empty()) throw Error(ErrorCode::config_error, "embedding request has no inputs");
  EmbeddingResponse resp;
  if (cfg_.embedding_provider == EmbeddingProvider::local || cfg_.mode == GatewayMode::stub) {
    for (const auto& text : req.inputs) resp.vectors.push_back(local_.embed(text));
    return resp;
  }
  const std::string digest = request_digest(req);
  if (cfg_.mode == GatewayMode::replay) {
    std::lock_guard lock(mu_);
    resp.vectors = replay_lookup(digest, 0, true).embeddings;
  } else {
    const std::string key = "emb-" + digest;
    if (auto hit = cache_get(key)) {
      cache_hits_.fetch_add(1);
      resp.vectors = json::parse(*hit).get<std::vector<std::vector<float>>>();
    } else {
      resp.vectors = backend_embed(req);
      cache_put(key, json(resp.vectors).dump());
    }
    record(digest, 0, {{}, resp.vectors});
  }
  if (resp.vectors.size() != req.inputs.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "expected " + std::to_string(req.inputs.size()) + " vectors, got " +
                    std::to_string(resp.vectors.size()));
  }
  for (auto& v : resp.vectors) {
    if (v.size() != resp.vectors.front().size() || v.empty()) {
      throw Error(ErrorCode::dimension_mismatch, "inconsistent embedding dimensions");
    }
    for (float x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::backend_unavailable, "non-finite embedding");
    }
    normalize(v);
  }
  return resp;
}

}  // namespace progshot
