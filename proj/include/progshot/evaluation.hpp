#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <progshot/prompting.hpp>
#include <progshot/retrieval.hpp>

namespace progshot {

class AnnotationStore;
class Corpus;
struct Problem;

struct PredictionRecord {
  std::string problem_id;
  std::string program;
  std::string status;
  std::optional<double> result;
  bool correct = false;
  std::string error_detail;
  std::vector<ScoredExemplar> retrieved;
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// Error classes counted for incorrect predictions.
inline constexpr const char* kErrorClasses[] = {"parse", "runtime", "step_limit", "non_numeric",
                                                "wrong_answer"};

struct EvalReport {
  std::string dataset;
  std::string split;
  std::string strategy;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  std::size_t n_total = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  std::map<std::string, std::size_t> histogram;
  double mean_similarity = 0.0;
  std::vector<PredictionRecord> records;  // problem order

  // Rebuilds every header number from `records`.
  void recompute();
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalConfig {
  PredictConfig predict;
  std::string dataset;
  std::string split = "test";
  std::size_t jobs = 1;
  // When set, prompts/, predictions.jsonl, report.json, report.txt and overlap.json land here.
  std::filesystem::path run_dir;
};

// Throws EmptySplit for an empty problem list.
EvalReport evaluate(const std::vector<Problem>& problems, const VectorIndex& index,
                    const AnnotationStore& store, const Corpus& corpus, const EvalConfig& cfg,
                    Gateway& gateway);

// One report per (strategy, seed). Deterministic strategies are computed once
// and reused for every seed. Completions for identical prompts are shared.
// With cfg.run_dir set, each report goes to run_dir/<strategy>[-seed<N>]/ and
// an ablation.txt / ablation.json summary is written at the top.
std::vector<EvalReport> run_ablation(const std::vector<Problem>& problems,
                                     const VectorIndex& index, const AnnotationStore& store,
                                     const Corpus& corpus, const std::vector<Strategy>& strategies,
                                     const std::vector<std::uint64_t>& seeds,
                                     const EvalConfig& cfg, Gateway& gateway);

// Word-level Jaccard over lowercased alphanumeric token sets. Two empty sets give 1.
double jaccard(const std::string& a, const std::string& b);

struct OverlapEntry {
  std::string strategy;
  std::string problem_id;
  std::vector<double> overlaps;  // one per retrieved exemplar, retrieval order
};

struct OverlapReport {
  std::vector<OverlapEntry> entries;
  std::map<std::string, double> mean_by_strategy;
};

// Reads report.json + predictions.jsonl from each run directory. Throws MissingRunArtifacts.
OverlapReport overlap_report(const std::vector<std::filesystem::path>& run_dirs,
                             const Corpus& corpus);
OverlapReport overlap_report(const std::vector<EvalReport>& reports, const Corpus& corpus);

struct RunComparison {
  std::size_t n = 0;
  std::size_t both_correct = 0;
  std::size_t only_a = 0;
  std::size_t only_b = 0;
  std::size_t both_wrong = 0;
  double pct(std::size_t count) const { return n ? 100.0 * static_cast<double>(count) / n : 0.0; }
};

// Throws IdSetMismatch unless both reports cover the same problem ids.
RunComparison compare_runs(const EvalReport& a, const EvalReport& b);
std::string format_comparison(const RunComparison& c, const std::string& name_a,
                              const std::string& name_b);

void write_report(const EvalReport& report, const std::filesystem::path& dir);
EvalReport load_report(const std::filesystem::path& dir);  // throws MissingRunArtifacts
std::string format_report(const EvalReport& report);
std::string format_ablation(const std::vector<EvalReport>& reports);
void write_overlap(const OverlapReport& report, const std::filesystem::path& path);

}  // namespace progshot
