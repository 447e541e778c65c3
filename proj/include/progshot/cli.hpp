#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <progshot/annotator.hpp>
#include <progshot/corpus.hpp>
#include <progshot/gateway.hpp>
#include <progshot/prompting.hpp>
#include <progshot/retrieval.hpp>

namespace progshot::cli {

struct RunConfig {
  Dataset dataset = Dataset::custom;
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path valid;
  std::optional<FieldMap> fields;

  GatewayConfig gateway;
  AnnotatorConfig annotator;

  std::size_t M = 8;
  std::string strategy = "most_similar";  // or "all"
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  // ablation seeds; empty means {seed}
  EmbeddingSpec embedding;
  ExemplarOrder order = ExemplarOrder::ascending;
  bool exclude_self = true;

  std::string eval_split = "test";
  std::string eval_model = "completion-model";
  int eval_max_tokens = kDefaultMaxTokens;

  std::filesystem::path run_dir = "run";
  std::size_t jobs = 1;
  std::string created_at;
};

// Reads an INI/TOML-style file with [dataset], [gateway], [annotator],
// [retrieval], [eval] and [run] sections. Relative paths resolve against the
// file's directory. Unknown sections or keys raise ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::filesystem::path> run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> record;
  std::optional<std::filesystem::path> replay;
  std::optional<std::size_t> jobs;
  std::optional<std::string> strategy;
  std::optional<std::string> split;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);
void validate(const RunConfig& cfg);  // throws ConfigError

// Files inside a run directory.
struct RunLayout {
  std::filesystem::path root;
  std::filesystem::path store() const { return root / "store.jsonl"; }
  std::filesystem::path discards() const { return root / "discards.jsonl"; }
  std::filesystem::path skips() const { return root / "skips.jsonl"; }
  std::filesystem::path verified() const { return root / "store.verified"; }
  std::filesystem::path index() const { return root / "index.bin"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path distill() const { return root / "distill.jsonl"; }
  std::filesystem::path card() const { return root / "dataset_card.md"; }
};

// Each returns a process exit code: 0 success, 1 verification mismatch.
// Errors propagate as progshot::Error.
int cmd_annotate(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);
int cmd_index(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_export(const RunConfig& cfg, std::ostream& out);
// Prints {status, result, steps_used, error_detail}; "-" reads stdin. Throws FileMissing.
int cmd_exec(const std::string& program_path, std::ostream& out,
             std::uint64_t step_budget = interp::kDefaultStepBudget);

}  // namespace progshot::cli
