#include <progshot/annotator.hpp>

#include <charconv>
#include <cstdio>
#include <sstream>

#include <json.hpp>
#include <progshot/error.hpp>
#include <progshot/prompting.hpp>

#include "common/util.hpp"

namespace progshot {

using nlohmann::json;

std::string default_seed_prompt() {
  return R"(def solution():
    """A baker makes 24 muffins every morning and sells them in boxes of 6. How many boxes does the baker fill in 5 mornings?"""
    muffins_per_morning = 24
    mornings = 5
    muffins_total = muffins_per_morning * mornings
    box_size = 6
    boxes = muffins_total // box_size
    result = boxes
    return result

def solution():
    """A jacket costs $80 and is discounted by 25%. Tom also pays a $4 delivery fee. How much does Tom pay in total?"""
    price = 80
    discount = price * 25 / 100
    delivery_fee = 4
    total = price - discount + delivery_fee
    result = total
    return result

def solution():
    """Mia reads 12 pages on Monday. Each following day she reads 3 more pages than the day before. How many pages has she read after Thursday?"""
    pages_today = 12
    pages_total = 0
    for day in range(4):
        pages_total += pages_today
        pages_today += 3
    result = pages_total
    return result
)";
}

double AnnotatorConfig::temperature_for(int attempt) const {
  if (attempt <= 0) return greedy_temperature;
  return resample_temperature + temperature_step * static_cast<double>(attempt - 1);
}

std::vector<std::string> AnnotatorConfig::stops() const {
  return stop_sequences.empty() ? default_stop_sequences() : stop_sequences;
}

void AnnotatorConfig::validate() const {
  if (max_attempts < 1) throw Error(ErrorCode::config_error, "max_attempts must be >= 1");
  if (!(resample_temperature > 0.0)) {
    throw Error(ErrorCode::config_error, "resample_temperature must be > 0");
  }
  if (temperature_step < 0.0) throw Error(ErrorCode::config_error, "temperature_step must be >= 0");
  if (max_tokens < 1) throw Error(ErrorCode::config_error, "max_tokens must be >= 1");
  if (step_budget < 1) throw Error(ErrorCode::config_error, "step_budget must be >= 1");
}

namespace {

json config_json(const AnnotatorConfig& c, const std::string& seed_sha) {
  return {{"max_attempts", c.max_attempts},
          {"resample_temperature", c.resample_temperature},
          {"greedy_temperature", AnnotatorConfig::greedy_temperature},
          {"temperature_step", c.temperature_step},
          {"max_tokens", c.max_tokens},
          {"stop_sequences", c.stops()},
          {"seed_prompt_sha256", seed_sha.empty() ? detail::sha256_hex(c.seed_prompt) : seed_sha},
          {"model_id", c.model_id},
          {"step_budget", c.step_budget}};
}

AnnotatorConfig config_from_json(const json& j) {
  AnnotatorConfig c;
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  c.resample_temperature = j.value("resample_temperature", c.resample_temperature);
  c.temperature_step = j.value("temperature_step", c.temperature_step);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  if (j.contains("stop_sequences")) {
    c.stop_sequences = j["stop_sequences"].get<std::vector<std::string>>();
  }
  c.model_id = j.value("model_id", c.model_id);
  c.step_budget = j.value("step_budget", c.step_budget);
  c.seed_prompt.clear();
  return c;
}

std::string annotation_prompt(const AnnotatorConfig& cfg, const std::string& stub) {
  if (cfg.seed_prompt.empty()) return stub;
  std::string prompt = cfg.seed_prompt;
  while (!prompt.empty() && (prompt.back() == '\n' || prompt.back() == ' ')) prompt.pop_back();
  return prompt + "\n\n" + stub;
}

}  // namespace

const AnnotatedExample* AnnotationStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &examples_[it->second];
}

void AnnotationStore::add(AnnotatedExample e) {
  if (by_id_.contains(e.problem_id)) {
    throw Error(ErrorCode::malformed_record, "duplicate stored id " + e.problem_id);
  }
  by_id_.emplace(e.problem_id, examples_.size());
  examples_.push_back(std::move(e));
}

void AnnotationStore::set_program(std::string_view id, std::string program) {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw Error(ErrorCode::unknown_problem_id, std::string(id));
  examples_[it->second].program = std::move(program);
}

std::optional<double> AnnotationStore::retention() const {
  if (header_.train_count == 0) return std::nullopt;
  return static_cast<double>(examples_.size()) / static_cast<double>(header_.train_count);
}

std::string AnnotationStore::summary() const {
  std::string out = "retained " + std::to_string(examples_.size()) + "/" +
                    std::to_string(header_.train_count);
  if (auto r = retention()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " (%.1f%%)", *r * 100.0);
    out += buf;
  } else {
    out += " (n/a)";
  }
  return out;
}

void AnnotationStore::save(const std::filesystem::path& store_path,
                           const std::filesystem::path& discard_path) const {
  json header = {{"dataset", header_.dataset},
                 {"config", config_json(header_.config, header_.seed_prompt_sha256)},
                 {"created_at", header_.created_at},
                 {"train_count", header_.train_count},
                 {"retained", examples_.size()}};
  std::string out = json{{"header", header}}.dump() + "\n";
  for (const auto& e : examples_) {
    out += json{{"problem_id", e.problem_id},
                {"program", e.program},
                {"verified_answer", e.verified_answer},
                {"attempt_index", e.attempt_index},
                {"temperature_used", e.temperature_used},
                {"steps_used", e.steps_used}}
               .dump();
    out.push_back('\n');
  }
  detail::write_file(store_path, out);
  if (!discard_path.empty()) {
    std::string d;
    for (const auto& x : discards_) {
      d += json{{"problem_id", x.problem_id}, {"reason", x.reason}}.dump();
      d.push_back('\n');
    }
    detail::write_file(discard_path, d);
  }
}

AnnotationStore AnnotationStore::load(const std::filesystem::path& store_path,
                                      const std::filesystem::path& discard_path) {
  std::istringstream in(detail::read_file(store_path));
  std::string line;
  std::size_t lineno = 0;
  AnnotationStore store;
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::malformed_record,
                 store_path.string() + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw bad("invalid JSON");
    try {
      if (lineno == 1) {
        if (!j.contains("header")) throw bad("missing header line");
        const json& h = j["header"];
        store.header_.dataset = h.value("dataset", "");
        store.header_.created_at = h.value("created_at", "");
        store.header_.train_count = h.value("train_count", std::size_t{0});
        if (h.contains("config")) {
          store.header_.config = config_from_json(h["config"]);
          store.header_.seed_prompt_sha256 = h["config"].value("seed_prompt_sha256", "");
        }
        continue;
      }
      AnnotatedExample e;
      e.problem_id = j.at("problem_id").get<std::string>();
      e.program = j.at("program").get<std::string>();
      e.verified_answer = j.at("verified_answer").get<double>();
      e.attempt_index = j.at("attempt_index").get<int>();
      e.temperature_used = j.at("temperature_used").get<double>();
      e.steps_used = j.value("steps_used", std::uint64_t{0});
      store.add(std::move(e));
    } catch (const json::exception& ex) {
      throw bad(ex.what());
    }
  }
  if (lineno == 0) throw bad("empty store file");
  if (!discard_path.empty() && std::filesystem::exists(discard_path)) {
    std::istringstream din(detail::read_file(discard_path));
    while (std::getline(din, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw Error(ErrorCode::malformed_record, discard_path.string() + ": invalid JSON");
      }
      store.add_discard({j.value("problem_id", ""), j.value("reason", ""), 0});
    }
  }
  return store;
}

namespace {

std::string number_text(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

AnnotationResult annotate_one(const Problem& problem, const AnnotatorConfig& cfg,
                              Gateway& gateway) {
  cfg.validate();
  if (problem.split != Split::train) {
    throw Error(ErrorCode::config_error, "annotate_one needs a train problem, got " + problem.id);
  }
  const std::string stub = render_stub(problem.question);
  const std::vector<std::string> stops = cfg.stops();
  CompletionRequest req;
  req.prompt = annotation_prompt(cfg, stub);
  req.max_tokens = cfg.max_tokens;
  req.stop_sequences = stops;
  req.model_id = cfg.model_id;
  req.n_samples = 1;

  std::string last_failure = "no_matching_program";
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    req.temperature = cfg.temperature_for(attempt);
    req.ordinal = static_cast<std::uint64_t>(attempt == 0 ? 0 : attempt - 1);
    std::string completion;
    try {
      auto resp = gateway.complete(req);
      completion = resp.choices.empty() ? std::string() : resp.choices.front();
    } catch (const Error&) {
      return Discarded{problem.id, "backend_error", attempt + 1};
    }
    std::string program = splice_program(stub, completion, stops);
    const auto outcome = interp::run_program(program, cfg.step_budget);
    if (outcome.ok()) {
      if (answers_match(*outcome.result, problem.gold_answer)) {
        return AnnotatedExample{problem.id,      std::move(program), *outcome.result, attempt,
                                req.temperature, outcome.steps_used};
      }
      last_failure = "no_matching_program";
    } else {
      last_failure = std::string(interp::to_string(outcome.status));
    }
  }
  return Discarded{problem.id, last_failure, cfg.max_attempts};
}

AnnotationStore annotate_corpus(const Corpus& corpus, const AnnotatorConfig& cfg,
                                Gateway& gateway, std::string created_at) {
  cfg.validate();
  const std::vector<Problem> train = corpus.split(Split::train);
  StoreHeader header;
  header.dataset = train.empty() ? std::string() : std::string(to_string(train.front().dataset));
  header.config = cfg;
  header.created_at = std::move(created_at);
  header.train_count = train.size();

  std::vector<std::optional<AnnotationResult>> results(train.size());
  detail::parallel_for(train.size(), cfg.jobs,
                       [&](std::size_t i) { results[i] = annotate_one(train[i], cfg, gateway); });

  AnnotationStore store(std::move(header));
  for (auto& r : results) {
    if (auto* e = std::get_if<AnnotatedExample>(&*r)) {
      store.add(std::move(*e));
    } else {
      store.add_discard(std::get<Discarded>(std::move(*r)));
    }
  }
  return store;
}

VerificationReport verify_store(const AnnotationStore& store, const Corpus& corpus,
                                std::uint64_t step_budget) {
  VerificationReport report;
  for (const auto& e : store.examples()) {
    const Problem& p = corpus.at(e.problem_id);
    ++report.checked;
    const auto outcome = interp::run_program(e.program, step_budget);
    if (!outcome.ok()) {
      report.mismatches.push_back(
          {e.problem_id, std::string(interp::to_string(outcome.status)) + ": " +
                             outcome.error_detail});
    } else if (!answers_match(*outcome.result, p.gold_answer)) {
      report.mismatches.push_back({e.problem_id, "result " + number_text(*outcome.result) +
                                                     " does not match gold " +
                                                     number_text(p.gold_answer)});
    } else if (!answers_match(*outcome.result, e.verified_answer)) {
      report.mismatches.push_back({e.problem_id, "result differs from verified_answer"});
    }
  }
  return report;
}

std::size_t export_distillation_set(const AnnotationStore& store, const Corpus& corpus,
                                    const ExportOptions& options) {
  std::string out;
  for (const auto& e : store.examples()) {
    const Problem& p = corpus.at(e.problem_id);
    json rec = {{"input", options.wrap_input_as_stub ? render_stub(p.question) : p.question},
                {"target", e.program}};
    out += rec.dump();
    out.push_back('\n');
  }
  detail::write_file(options.output, out);
  if (!options.card.empty()) {
    std::string card = "# Distillation set\n\n";
    card += "- dataset: " + (store.header().dataset.empty() ? "n/a" : store.header().dataset) + "\n";
    card += "- records: " + std::to_string(store.examples().size()) + "\n";
    card += "- source: " + store.summary() + "\n";
    card += "- created_at: " +
            (store.header().created_at.empty() ? "n/a" : store.header().created_at) + "\n";
    card += std::string("- input: ") +
            (options.wrap_input_as_stub ? "def-plus-docstring stub" : "question text") + "\n";
    card += "- target: verified program text\n";
    card += "- format: JSONL {input, target}\n";
    detail::write_file(options.card, card);
  }
  return store.examples().size();
}

std::vector<DistillationRecord> load_distillation_set(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<DistillationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("input") || !j.contains("target")) {
      throw Error(ErrorCode::malformed_record, path.string() + ":" + std::to_string(lineno));
    }
    out.push_back({j["input"].get<std::string>(), j["target"].get<std::string>()});
  }
  return out;
}

}  // namespace progshot
