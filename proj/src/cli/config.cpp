#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include <progshot/cli.hpp>
#include <progshot/error.hpp>

#include "common/util.hpp"

namespace progshot::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::config_error, key + ": " + why);
}

std::string strip(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

template <typename T>
T number(const std::string& key, const std::string& text) {
  T v{};
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) bad(key, "expected a number, got '" + text + "'");
  return v;
}

bool boolean(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad(key, "expected a boolean, got '" + text + "'");
}

std::vector<std::string> list(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const auto& in : inputs) {
    std::size_t start = 0;
    while (start <= in.size()) {
      auto comma = in.find(',', start);
      std::string part = strip(in.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start));
      if (!part.empty()) out.push_back(part);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::file_missing, "config: " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    bad(path.string(), e.what());
  }

  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) -> fs::path {
    if (p.empty()) return {};
    fs::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  RunConfig cfg;
  std::optional<std::vector<std::string>> question_keys;
  std::optional<std::string> answer_key;
  std::optional<fs::path> seed_prompt_file;

  using Setter = std::function<void(const std::string& key, const std::vector<std::string>&)>;
  auto one = [](const std::string& key, const std::vector<std::string>& v) {
    if (v.size() != 1) bad(key, "expected a single value");
    return strip(v.front());
  };
  const std::map<std::string, Setter> setters = {
      {"dataset.tag", [&](auto& k, auto& v) { cfg.dataset = dataset_from_string(one(k, v)); }},
      {"dataset.train", [&](auto& k, auto& v) { cfg.train = resolve(one(k, v)); }},
      {"dataset.test", [&](auto& k, auto& v) { cfg.test = resolve(one(k, v)); }},
      {"dataset.valid", [&](auto& k, auto& v) { cfg.valid = resolve(one(k, v)); }},
      {"dataset.question_keys", [&](auto&, auto& v) { question_keys = list(v); }},
      {"dataset.answer_key", [&](auto& k, auto& v) { answer_key = one(k, v); }},

      {"gateway.mode", [&](auto& k, auto& v) { cfg.gateway.mode = gateway_mode_from_string(one(k, v)); }},
      {"gateway.base_url", [&](auto& k, auto& v) { cfg.gateway.base_url = one(k, v); }},
      {"gateway.api_key_env", [&](auto& k, auto& v) { cfg.gateway.api_key_env = one(k, v); }},
      {"gateway.timeout_s", [&](auto& k, auto& v) { cfg.gateway.timeout_s = number<double>(k, one(k, v)); }},
      {"gateway.cache_dir", [&](auto& k, auto& v) { cfg.gateway.cache_dir = resolve(one(k, v)); }},
      {"gateway.fixtures", [&](auto& k, auto& v) { cfg.gateway.fixtures = resolve(one(k, v)); }},
      {"gateway.record", [&](auto& k, auto& v) { cfg.gateway.record_to = resolve(one(k, v)); }},
      {"gateway.stub_completion", [&](auto& k, auto& v) { cfg.gateway.stub_completion = one(k, v); }},
      {"gateway.max_retries", [&](auto& k, auto& v) { cfg.gateway.max_retries = number<int>(k, one(k, v)); }},
      {"gateway.backoff_ms", [&](auto& k, auto& v) { cfg.gateway.backoff_initial_ms = number<int>(k, one(k, v)); }},
      {"gateway.max_concurrency", [&](auto& k, auto& v) { cfg.gateway.max_concurrency = number<std::size_t>(k, one(k, v)); }},

      {"annotator.max_attempts", [&](auto& k, auto& v) { cfg.annotator.max_attempts = number<int>(k, one(k, v)); }},
      {"annotator.resample_temperature", [&](auto& k, auto& v) { cfg.annotator.resample_temperature = number<double>(k, one(k, v)); }},
      {"annotator.temperature_step", [&](auto& k, auto& v) { cfg.annotator.temperature_step = number<double>(k, one(k, v)); }},
      {"annotator.max_tokens", [&](auto& k, auto& v) { cfg.annotator.max_tokens = number<int>(k, one(k, v)); }},
      {"annotator.model", [&](auto& k, auto& v) { cfg.annotator.model_id = one(k, v); }},
      {"annotator.seed_prompt", [&](auto& k, auto& v) { seed_prompt_file = resolve(one(k, v)); }},
      {"annotator.step_budget", [&](auto& k, auto& v) { cfg.annotator.step_budget = number<std::uint64_t>(k, one(k, v)); }},

      {"retrieval.m", [&](auto& k, auto& v) { cfg.M = number<std::size_t>(k, one(k, v)); }},
      {"retrieval.strategy", [&](auto& k, auto& v) { cfg.strategy = one(k, v); }},
      {"retrieval.seed", [&](auto& k, auto& v) { cfg.seed = number<std::uint64_t>(k, one(k, v)); }},
      {"retrieval.seeds", [&](auto& k, auto& v) {
         cfg.seeds.clear();
         for (const auto& s : list(v)) cfg.seeds.push_back(number<std::uint64_t>(k, s));
       }},
      {"retrieval.embedding_provider", [&](auto& k, auto& v) {
         cfg.embedding.provider = embedding_provider_from_string(one(k, v));
       }},
      {"retrieval.embedding_model", [&](auto& k, auto& v) { cfg.embedding.model_id = one(k, v); }},
      {"retrieval.embedding_dim", [&](auto& k, auto& v) { cfg.gateway.embedding_dim = number<std::size_t>(k, one(k, v)); }},
      {"retrieval.order", [&](auto& k, auto& v) {
         const std::string o = one(k, v);
         if (o == "ascending") cfg.order = ExemplarOrder::ascending;
         else if (o == "descending") cfg.order = ExemplarOrder::descending;
         else bad(k, "expected ascending or descending");
       }},
      {"retrieval.exclude_self", [&](auto& k, auto& v) { cfg.exclude_self = boolean(k, one(k, v)); }},

      {"eval.split", [&](auto& k, auto& v) { cfg.eval_split = one(k, v); }},
      {"eval.model", [&](auto& k, auto& v) { cfg.eval_model = one(k, v); }},
      {"eval.max_tokens", [&](auto& k, auto& v) { cfg.eval_max_tokens = number<int>(k, one(k, v)); }},

      {"run.dir", [&](auto& k, auto& v) { cfg.run_dir = resolve(one(k, v)); }},
      {"run.jobs", [&](auto& k, auto& v) { cfg.jobs = number<std::size_t>(k, one(k, v)); }},
      {"run.created_at", [&](auto& k, auto& v) { cfg.created_at = one(k, v); }},
  };

  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string key = item.fullname();
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto it = setters.find(key);
    if (it == setters.end()) bad(key, "unknown configuration key");
    it->second(key, item.inputs);
  }

  if (question_keys || answer_key) {
    FieldMap f = FieldMap::defaults(cfg.dataset);
    if (question_keys) f.question_keys = *question_keys;
    if (answer_key) f.answer_key = *answer_key;
    cfg.fields = f;
  }
  if (seed_prompt_file) cfg.annotator.seed_prompt = detail::read_file(*seed_prompt_file);
  cfg.gateway.embedding_provider = cfg.embedding.provider;
  return cfg;
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.run_dir) cfg.run_dir = *o.run_dir;
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.seeds.clear();
  }
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.strategy) cfg.strategy = *o.strategy;
  if (o.split) cfg.eval_split = *o.split;
  if (o.record) {
    cfg.gateway.mode = GatewayMode::http;
    cfg.gateway.record_to = *o.record;
  }
  if (o.replay) {
    cfg.gateway.mode = GatewayMode::replay;
    cfg.gateway.fixtures = *o.replay;
  }
  cfg.annotator.jobs = cfg.jobs;
  cfg.gateway.embedding_provider = cfg.embedding.provider;
}

void validate(const RunConfig& cfg) {
  cfg.annotator.validate();
  if (cfg.M < 1) bad("retrieval.m", "must be >= 1");
  if (cfg.strategy != "all") (void)strategy_from_string(cfg.strategy);
  (void)split_from_string(cfg.eval_split);
  if (cfg.jobs < 1) bad("run.jobs", "must be >= 1");
  if (cfg.gateway.max_concurrency < 1) bad("gateway.max_concurrency", "must be >= 1");
  if (cfg.gateway.embedding_dim < 1) bad("retrieval.embedding_dim", "must be >= 1");
  if (cfg.eval_max_tokens < 1) bad("eval.max_tokens", "must be >= 1");
  if (cfg.gateway.mode == GatewayMode::http && cfg.gateway.base_url.empty()) {
    bad("gateway.base_url", "required in http mode");
  }
  if (cfg.gateway.mode == GatewayMode::replay && cfg.gateway.fixtures.empty()) {
    bad("gateway.fixtures", "required in replay mode");
  }
  if (cfg.run_dir.empty()) bad("run.dir", "must not be empty");
}

}  // namespace progshot::cli
