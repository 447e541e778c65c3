#include <cstdlib>
#include <iostream>
#include <iterator>

#include <json.hpp>
#include <progshot/cli.hpp>
#include <progshot/error.hpp>
#include <progshot/evaluation.hpp>

#include "common/util.hpp"

namespace progshot::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Corpus load_all(const RunConfig& cfg, bool need_train, bool need_eval) {
  LoadOptions opts;
  opts.fields = cfg.fields;
  Corpus corpus;
  auto add = [&](const fs::path& p, Split s, bool required, const char* what) {
    if (p.empty()) {
      if (required) throw Error(ErrorCode::config_error, std::string("dataset.") + what + " is not set");
      return;
    }
    opts.split = s;
    corpus.merge(load_corpus(p, cfg.dataset, opts));
  };
  const Split eval_split = split_from_string(cfg.eval_split);
  add(cfg.train, Split::train, need_train, "train");
  add(cfg.valid, Split::valid, need_eval && eval_split == Split::valid, "valid");
  add(cfg.test, Split::test, need_eval && eval_split == Split::test, "test");
  return corpus;
}

std::string created_at(const RunConfig& cfg) {
  if (!cfg.created_at.empty()) return cfg.created_at;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) return std::string("epoch:") + epoch;
  return "unspecified";
}

PredictConfig predict_config(const RunConfig& cfg) {
  PredictConfig p;
  p.retrieval.M = cfg.M;
  p.retrieval.random_seed = cfg.seed;
  p.retrieval.exclude_self = cfg.exclude_self;
  if (cfg.strategy != "all") p.retrieval.strategy = strategy_from_string(cfg.strategy);
  p.prompt.order = cfg.order;
  p.prompt.max_tokens = cfg.eval_max_tokens;
  p.prompt.model_id = cfg.eval_model;
  p.embedding = cfg.embedding;
  p.step_budget = cfg.annotator.step_budget;
  return p;
}

void write_marker(const RunLayout& layout) {
  detail::write_file(layout.verified(), detail::sha256_hex(detail::read_file(layout.store())) + "\n");
}

int report_verification(const VerificationReport& v, const RunLayout& layout, std::ostream& out) {
  out << "verified " << v.checked << " programs, " << v.mismatches.size() << " mismatches\n";
  for (const auto& m : v.mismatches) out << "  mismatch " << m.problem_id << ": " << m.detail << "\n";
  if (!v.clean()) {
    std::error_code ec;
    fs::remove(layout.verified(), ec);
    return 1;
  }
  write_marker(layout);
  return 0;
}

}  // namespace

int cmd_annotate(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  const RunLayout layout{cfg.run_dir};
  const Corpus corpus = load_all(cfg, true, false);
  AnnotatorConfig acfg = cfg.annotator;
  acfg.jobs = cfg.jobs;
  Gateway gateway(cfg.gateway);
  const AnnotationStore store = annotate_corpus(corpus, acfg, gateway, created_at(cfg));
  gateway.flush_recording();
  store.save(layout.store(), layout.discards());
  write_skip_report(corpus, layout.skips());
  out << store.summary() << "\n";
  if (!corpus.skipped().empty()) out << "skipped " << corpus.skipped().size() << " records\n";
  return report_verification(verify_store(store, corpus, acfg.step_budget), layout, out);
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  const RunLayout layout{cfg.run_dir};
  const Corpus corpus = load_all(cfg, true, false);
  const AnnotationStore store = AnnotationStore::load(layout.store(), layout.discards());
  return report_verification(verify_store(store, corpus, cfg.annotator.step_budget), layout, out);
}

int cmd_index(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  const RunLayout layout{cfg.run_dir};
  const Corpus corpus = load_all(cfg, true, false);
  const AnnotationStore store = AnnotationStore::load(layout.store());
  Gateway gateway(cfg.gateway);
  const VectorIndex index = build_index(store, corpus, gateway, cfg.embedding);
  gateway.flush_recording();
  index.save(layout.index());
  out << "indexed " << index.size() << " records (dim " << index.dim() << ", "
      << to_string(index.spec().provider) << "/" << index.spec().model_id << ")\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  const RunLayout layout{cfg.run_dir};
  const Corpus corpus = load_all(cfg, true, true);
  const AnnotationStore store = AnnotationStore::load(layout.store());
  if (!fs::exists(layout.index())) throw Error(ErrorCode::file_missing, "index: " + layout.index().string());
  const VectorIndex index = VectorIndex::load(layout.index());
  Gateway gateway(cfg.gateway);

  EvalConfig ecfg;
  ecfg.predict = predict_config(cfg);
  ecfg.dataset = std::string(to_string(cfg.dataset));
  ecfg.split = std::string(to_string(split_from_string(cfg.eval_split)));
  ecfg.jobs = cfg.jobs;
  ecfg.run_dir = layout.eval();
  const auto problems = corpus.split(split_from_string(cfg.eval_split));

  std::vector<Strategy> strategies;
  if (cfg.strategy == "all") {
    strategies = {Strategy::most_similar, Strategy::random, Strategy::least_similar};
  } else {
    strategies = {strategy_from_string(cfg.strategy)};
  }
  const auto reports = run_ablation(problems, index, store, corpus, strategies,
                                    cfg.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : cfg.seeds,
                                    ecfg, gateway);
  gateway.flush_recording();
  out << format_ablation(reports);
  return 0;
}

int cmd_export(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  const RunLayout layout{cfg.run_dir};
  const std::string store_bytes = detail::read_file(layout.store());
  if (!fs::exists(layout.verified()) ||
      detail::read_file(layout.verified()) != detail::sha256_hex(store_bytes) + "\n") {
    throw Error(ErrorCode::verify_first, "run `verify` on " + layout.store().string() + " first");
  }
  const Corpus corpus = load_all(cfg, true, false);
  const AnnotationStore store = AnnotationStore::load(layout.store());
  const std::size_t n =
      export_distillation_set(store, corpus, {layout.distill(), layout.card(), true});
  out << "exported " << n << " records to " << layout.distill().string() << "\n";
  return 0;
}

int cmd_exec(const std::string& program_path, std::ostream& out, std::uint64_t step_budget) {
  std::string source;
  if (program_path == "-") {
    source.assign(std::istreambuf_iterator<char>(std::cin), {});
  } else {
    source = detail::read_file(program_path);
  }
  const auto o = interp::run_program(source, step_budget);
  nlohmann::ordered_json j;
  j["status"] = interp::to_string(o.status);
  j["result"] = o.result ? nlohmann::ordered_json(*o.result) : nlohmann::ordered_json(nullptr);
  j["steps_used"] = o.steps_used;
  j["error_detail"] = o.error_detail;
  out << j.dump() << "\n";
  return 0;
}

}  // namespace progshot::cli
