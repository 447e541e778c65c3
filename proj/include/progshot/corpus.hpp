#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace progshot {

enum class Dataset { gsm8k, svamp, mathqa, custom };
enum class Split { train, valid, test };

std::string_view to_string(Dataset d);
std::string_view to_string(Split s);
Dataset dataset_from_string(std::string_view name);  // throws ConfigError
Split split_from_string(std::string_view name);      // accepts "dev" for valid

struct Problem {
  std::string id;
  std::string question;
  double gold_answer = 0.0;
  Dataset dataset = Dataset::custom;
  Split split = Split::train;
};

struct SkipRecord {
  std::size_t line = 0;
  std::string reason;
};

// Which JSON keys hold the question and answer. Multiple question keys are
// joined with a single space (SVAMP stores Body and Question separately).
struct FieldMap {
  std::vector<std::string> question_keys;
  std::string answer_key;

  static FieldMap defaults(Dataset d);
};

class Corpus {
 public:
  Corpus() = default;

  const std::vector<Problem>& problems() const { return problems_; }
  const std::vector<SkipRecord>& skipped() const { return skipped_; }
  std::size_t size() const { return problems_.size(); }
  std::size_t count(Split s) const;
  std::vector<Problem> split(Split s) const;
  const Problem* find(std::string_view id) const;
  const Problem& at(std::string_view id) const;  // throws UnknownProblemId

  // Throws MalformedRecord on a duplicate id.
  void add(Problem p);
  void add_skip(SkipRecord s) { skipped_.push_back(std::move(s)); }
  // Appends another corpus; skip records keep their line numbers.
  void merge(const Corpus& other);

 private:
  std::vector<Problem> problems_;
  std::vector<SkipRecord> skipped_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct LoadOptions {
  std::optional<FieldMap> fields;
  // Split for records without a "split" key. When absent it is inferred from
  // the filename (train/test/valid/dev), falling back to train.
  std::optional<Split> split;
};

// Reads JSONL. Unparsable answers and empty questions are skipped and reported;
// invalid JSON or missing fields raise MalformedRecord with the line number.
Corpus load_corpus(const std::filesystem::path& path, Dataset dataset,
                   const LoadOptions& options = {});

// Extracts the final numeric token, after a "####" marker when one is present.
double parse_gold_answer(std::string_view raw);

// |pred - gold| <= 1e-6 + 1e-4 * |gold|; false for non-finite input.
bool answers_match(double pred, double gold);

// JSONL of {line, reason}.
void write_skip_report(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace progshot
