#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <progshot/corpus.hpp>
#include <progshot/gateway.hpp>
#include <progshot/interpreter.hpp>

namespace progshot {

// A short PAL-style few-shot header used when no seed prompt file is configured.
std::string default_seed_prompt();

struct AnnotatorConfig {
  static constexpr double greedy_temperature = 0.0;

  int max_attempts = 5;  // K, including the greedy attempt
  double resample_temperature = 0.5;
  // Added per resample beyond the first. Zero keeps the schedule flat.
  double temperature_step = 0.0;
  int max_tokens = kDefaultMaxTokens;
  std::vector<std::string> stop_sequences;  // empty means the prompting defaults
  std::string seed_prompt = default_seed_prompt();
  std::string model_id = "completion-model";
  std::uint64_t step_budget = interp::kDefaultStepBudget;
  std::size_t jobs = 1;

  double temperature_for(int attempt) const;
  std::vector<std::string> stops() const;
  void validate() const;  // throws ConfigError
};

struct AnnotatedExample {
  std::string problem_id;
  std::string program;
  double verified_answer = 0.0;
  int attempt_index = 0;
  double temperature_used = 0.0;
  std::uint64_t steps_used = 0;
  friend bool operator==(const AnnotatedExample&, const AnnotatedExample&) = default;
};

struct Discarded {
  std::string problem_id;
  std::string reason;  // no_matching_program, backend_error or an execution status name
  int attempts = 0;
  friend bool operator==(const Discarded&, const Discarded&) = default;
};

using AnnotationResult = std::variant<AnnotatedExample, Discarded>;

struct StoreHeader {
  std::string dataset;
  AnnotatorConfig config;
  std::string created_at;
  std::size_t train_count = 0;
  // Stores keep only the seed prompt hash; loaded headers carry it here.
  std::string seed_prompt_sha256;
};

class AnnotationStore {
 public:
  AnnotationStore() = default;
  explicit AnnotationStore(StoreHeader header) : header_(std::move(header)) {}

  const StoreHeader& header() const { return header_; }
  const std::vector<AnnotatedExample>& examples() const { return examples_; }
  const std::vector<Discarded>& discards() const { return discards_; }
  const AnnotatedExample* find(std::string_view id) const;

  void add(AnnotatedExample e);  // throws MalformedRecord on a duplicate id
  void add_discard(Discarded d) { discards_.push_back(std::move(d)); }
  // Replaces a stored program text; used to build negative test cases.
  void set_program(std::string_view id, std::string program);

  // |examples| / train_count, or nullopt for an empty train split.
  std::optional<double> retention() const;
  // "retained 17/20 (85.0%)"
  std::string summary() const;

  // Store file: header line then one example per line. Discard file: {problem_id, reason}.
  void save(const std::filesystem::path& store_path,
            const std::filesystem::path& discard_path = {}) const;
  static AnnotationStore load(const std::filesystem::path& store_path,
                              const std::filesystem::path& discard_path = {});

 private:
  StoreHeader header_;
  std::vector<AnnotatedExample> examples_;
  std::vector<Discarded> discards_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

AnnotationResult annotate_one(const Problem& problem, const AnnotatorConfig& cfg,
                              Gateway& gateway);

// Results are assembled in corpus order whatever cfg.jobs is.
AnnotationStore annotate_corpus(const Corpus& corpus, const AnnotatorConfig& cfg,
                                Gateway& gateway, std::string created_at = {});

struct StoreMismatch {
  std::string problem_id;
  std::string detail;
};

struct VerificationReport {
  std::size_t checked = 0;
  std::vector<StoreMismatch> mismatches;
  bool clean() const { return mismatches.empty(); }
};

// Throws UnknownProblemId if a stored id is missing from the corpus.
VerificationReport verify_store(const AnnotationStore& store, const Corpus& corpus,
                                std::uint64_t step_budget = interp::kDefaultStepBudget);

struct ExportOptions {
  std::filesystem::path output;
  std::filesystem::path card;  // empty skips the dataset card
  bool wrap_input_as_stub = true;
};

struct DistillationRecord {
  std::string input;
  std::string target;
  friend bool operator==(const DistillationRecord&, const DistillationRecord&) = default;
};

// One record per stored example in store order. Returns the record count.
std::size_t export_distillation_set(const AnnotationStore& store, const Corpus& corpus,
                                    const ExportOptions& options);
std::vector<DistillationRecord> load_distillation_set(const std::filesystem::path& path);

}  // namespace progshot
