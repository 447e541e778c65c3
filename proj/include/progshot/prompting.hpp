#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <progshot/gateway.hpp>
#include <progshot/interpreter.hpp>
#include <progshot/retrieval.hpp>

namespace progshot {

class AnnotationStore;
class Corpus;
struct AnnotatedExample;
struct Problem;

// "\n\n\n" and "\n\ndef ": a blank line followed by the next block's header
// ends the generated body.
std::vector<std::string> default_stop_sequences();

// `def solution():` plus the question as a docstring, ending in a newline.
std::string render_stub(std::string_view question);

// Cuts at the earliest occurrence of any stop sequence.
std::string truncate_at_stop(std::string_view completion, const std::vector<std::string>& stops);

// stub + truncated completion, newline-terminated.
std::string splice_program(std::string_view stub, std::string_view completion,
                           const std::vector<std::string>& stops);

// Expands tabs and maps each indentation level to four spaces. Lines inside
// triple-quoted strings are left alone.
std::string normalize_indentation(std::string_view program);

// Throws RenderUnparsable if the emitted block fails to parse.
std::string render_exemplar(const AnnotatedExample& example, std::string_view question);

enum class ExemplarOrder { ascending, descending };

struct PromptConfig {
  ExemplarOrder order = ExemplarOrder::ascending;
  int max_tokens = kDefaultMaxTokens;
  std::vector<std::string> stop_sequences = default_stop_sequences();
  std::string model_id = "completion-model";
};

struct PromptBundle {
  std::vector<ScoredExemplar> exemplars;  // block order
  std::vector<std::string> blocks;
  std::string stub;
  double temperature = 0.0;
  int max_tokens = kDefaultMaxTokens;
  std::vector<std::string> stop_sequences;

  // Blocks then the stub, separated by exactly one blank line.
  std::string text() const;
};

PromptBundle build_prompt(const std::vector<ScoredExemplar>& exemplars,
                          std::string_view test_question, const AnnotationStore& store,
                          const Corpus& corpus, const PromptConfig& cfg);

struct PredictConfig {
  RetrievalConfig retrieval;
  PromptConfig prompt;
  EmbeddingSpec embedding;
  std::uint64_t step_budget = interp::kDefaultStepBudget;
};

struct Prediction {
  std::string problem_id;
  std::string prompt;
  std::string program;
  interp::ExecutionOutcome outcome;
  std::vector<ScoredExemplar> retrieved;  // retrieval order
  bool correct = false;
  bool backend_error = false;
};

// Gateway failures yield outcome runtime_error with detail "backend_error: ...".
Prediction predict(const Problem& problem, const VectorIndex& index, const AnnotationStore& store,
                   const Corpus& corpus, const PredictConfig& cfg, Gateway& gateway);

// Embeds one question the way the index expects. Throws ProviderMismatch.
std::vector<float> embed_query(std::string_view question, const VectorIndex& index,
                               const EmbeddingSpec& spec, Gateway& gateway);

}  // namespace progshot
