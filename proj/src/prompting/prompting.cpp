#include <progshot/prompting.hpp>

#include <algorithm>

#include <progshot/annotator.hpp>
#include <progshot/corpus.hpp>
#include <progshot/error.hpp>

namespace progshot {

std::vector<std::string> default_stop_sequences() { return {"\n\n\n", "\n\ndef "}; }

namespace {

std::string docstring_literal(std::string_view question) {
  std::string out = "\"\"\"";
  for (char c : question) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"\"\"";
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Tracks whether a triple-quoted string is open across lines.
struct QuoteState {
  char triple = 0;

  void scan(std::string_view line) {
    char single = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (triple) {
        if (c == '\\') {
          ++i;
        } else if (line.substr(i, 3) == std::string(3, triple)) {
          triple = 0;
          i += 2;
        }
      } else if (single) {
        if (c == '\\') {
          ++i;
        } else if (c == single) {
          single = 0;
        }
      } else if (c == '#') {
        return;
      } else if (c == '"' || c == '\'') {
        if (line.substr(i, 3) == std::string(3, c)) {
          triple = c;
          i += 2;
        } else {
          single = c;
        }
      }
    }
  }
};

void trim_trailing_blank(std::string& s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.pop_back();
  }
}

void check_parses(const std::string& block) {
  try {
    (void)interp::parse(block);
  } catch (const interp::ParseError& e) {
    throw Error(ErrorCode::render_unparsable, e.what());
  } catch (const interp::UnsupportedConstruct& e) {
    throw Error(ErrorCode::render_unparsable, e.what());
  }
}

}  // namespace

std::string render_stub(std::string_view question) {
  return "def solution():\n    " + docstring_literal(question) + "\n";
}

std::string truncate_at_stop(std::string_view completion, const std::vector<std::string>& stops) {
  std::size_t cut = completion.size();
  for (const auto& s : stops) {
    if (s.empty()) continue;
    cut = std::min(cut, completion.find(s));
  }
  return std::string(completion.substr(0, cut));
}

std::string splice_program(std::string_view stub, std::string_view completion,
                           const std::vector<std::string>& stops) {
  std::string program(stub);
  program += truncate_at_stop(completion, stops);
  trim_trailing_blank(program);
  program.push_back('\n');
  return program;
}

std::string normalize_indentation(std::string_view program) {
  std::string out;
  std::vector<std::size_t> widths{0};
  QuoteState quotes;
  for (std::string_view line : split_lines(program)) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (quotes.triple) {
      out.append(line);
      out.push_back('\n');
      quotes.scan(line);
      continue;
    }
    std::size_t width = 0;
    std::size_t i = 0;
    for (; i < line.size() && (line[i] == ' ' || line[i] == '\t'); ++i) {
      width += line[i] == '\t' ? 4 : 1;
    }
    std::string_view content = line.substr(i);
    if (content.empty()) {
      out.push_back('\n');
      continue;
    }
    if (content.front() != '#') {
      if (width > widths.back()) {
        widths.push_back(width);
      } else {
        while (widths.size() > 1 && width < widths.back()) widths.pop_back();
      }
    }
    out.append(4 * (widths.size() - 1), ' ');
    out.append(content);
    out.push_back('\n');
    quotes.scan(content);
  }
  return out;
}

std::string render_exemplar(const AnnotatedExample& example, std::string_view question) {
  std::optional<interp::ProgramAst> ast;
  try {
    ast = interp::parse(example.program);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::render_unparsable, example.problem_id + ": " + e.what());
  }
  std::string block = normalize_indentation(example.program);
  if (!ast->docstring()) {
    const std::string header = "def solution():";
    auto pos = block.find(header);
    if (pos == std::string::npos) {
      throw Error(ErrorCode::render_unparsable, example.problem_id + ": no solution header");
    }
    auto eol = block.find('\n', pos);
    if (eol == std::string::npos) eol = block.size();
    block.insert(eol, "\n    " + docstring_literal(question));
  }
  trim_trailing_blank(block);
  block.push_back('\n');
  check_parses(block);
  return block;
}

std::string PromptBundle::text() const {
  std::string out;
  for (const auto& b : blocks) {
    out += b;
    out.push_back('\n');
  }
  return out + stub;
}

PromptBundle build_prompt(const std::vector<ScoredExemplar>& exemplars,
                          std::string_view test_question, const AnnotationStore& store,
                          const Corpus& corpus, const PromptConfig& cfg) {
  PromptBundle bundle;
  bundle.exemplars = exemplars;
  const bool ascending = cfg.order == ExemplarOrder::ascending;
  std::stable_sort(bundle.exemplars.begin(), bundle.exemplars.end(),
                   [ascending](const ScoredExemplar& a, const ScoredExemplar& b) {
                     if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
                     return ascending ? a.problem_id > b.problem_id : a.problem_id < b.problem_id;
                   });
  for (const auto& ex : bundle.exemplars) {
    const AnnotatedExample* e = store.find(ex.problem_id);
    if (!e) throw Error(ErrorCode::unknown_problem_id, ex.problem_id + " is not in the store");
    bundle.blocks.push_back(render_exemplar(*e, corpus.at(ex.problem_id).question));
  }
  bundle.stub = render_stub(test_question);
  bundle.temperature = 0.0;
  bundle.max_tokens = cfg.max_tokens;
  bundle.stop_sequences = cfg.stop_sequences;
  return bundle;
}

std::vector<float> embed_query(std::string_view question, const VectorIndex& index,
                               const EmbeddingSpec& spec, Gateway& gateway) {
  if (!(index.spec() == spec) || gateway.config().embedding_provider != spec.provider) {
    throw Error(ErrorCode::provider_mismatch,
                "index built with " + std::string(to_string(index.spec().provider)) + "/" +
                    index.spec().model_id + ", query uses " +
                    std::string(to_string(gateway.config().embedding_provider)) + "/" +
                    spec.model_id);
  }
  auto resp = gateway.embed({{std::string(question)}, spec.model_id});
  return std::move(resp.vectors.front());
}

Prediction predict(const Problem& problem, const VectorIndex& index, const AnnotationStore& store,
                   const Corpus& corpus, const PredictConfig& cfg, Gateway& gateway) {
  Prediction pred;
  pred.problem_id = problem.id;
  const auto query = embed_query(problem.question, index, cfg.embedding, gateway);
  pred.retrieved = retrieve(index, query, cfg.retrieval, problem.id);
  const PromptBundle bundle =
      build_prompt(pred.retrieved, problem.question, store, corpus, cfg.prompt);
  pred.prompt = bundle.text();

  CompletionRequest req;
  req.prompt = pred.prompt;
  req.temperature = 0.0;
  req.max_tokens = bundle.max_tokens;
  req.stop_sequences = bundle.stop_sequences;
  req.model_id = cfg.prompt.model_id;
  req.n_samples = 1;
  req.ordinal = 0;
  std::string completion;
  try {
    auto resp = gateway.complete(req);
    completion = resp.choices.empty() ? std::string() : resp.choices.front();
  } catch (const Error& e) {
    pred.backend_error = true;
    pred.program = bundle.stub;
    pred.outcome.status = interp::ExecutionStatus::runtime_error;
    pred.outcome.error_detail = std::string("backend_error: ") + e.what();
    return pred;
  }
  pred.program = splice_program(bundle.stub, completion, bundle.stop_sequences);
  pred.outcome = interp::run_program(pred.program, cfg.step_budget);
  pred.correct = pred.outcome.ok() && answers_match(*pred.outcome.result, problem.gold_answer);
  return pred;
}

}  // namespace progshot
