#include <progshot/evaluation.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>
#include <progshot/annotator.hpp>
#include <progshot/corpus.hpp>
#include <progshot/error.hpp>

#include "common/util.hpp"

namespace progshot {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string error_class(const PredictionRecord& r) {
  if (r.status == "parse_error" || r.status == "unsupported_construct") return "parse";
  if (r.status == "runtime_error") return "runtime";
  if (r.status == "step_limit_exceeded") return "step_limit";
  if (r.status == "non_numeric_result") return "non_numeric";
  return "wrong_answer";
}

std::string file_safe(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

PredictionRecord to_record(const Prediction& p) {
  PredictionRecord r;
  r.problem_id = p.problem_id;
  r.program = p.program;
  r.status = p.backend_error ? "runtime_error" : std::string(interp::to_string(p.outcome.status));
  r.result = p.outcome.result;
  r.correct = p.correct;
  r.error_detail = p.outcome.error_detail;
  r.retrieved = p.retrieved;
  return r;
}

json record_json(const PredictionRecord& r) {
  json retrieved = json::array();
  for (const auto& s : r.retrieved) retrieved.push_back({{"id", s.problem_id}, {"score", s.score}});
  json j = {{"problem_id", r.problem_id}, {"program", r.program},     {"status", r.status},
            {"correct", r.correct},       {"retrieved", retrieved}, {"error_detail", r.error_detail}};
  j["result"] = r.result ? json(*r.result) : json(nullptr);
  return j;
}

PredictionRecord record_from_json(const json& j) {
  PredictionRecord r;
  r.problem_id = j.at("problem_id").get<std::string>();
  r.program = j.at("program").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.correct = j.at("correct").get<bool>();
  r.error_detail = j.value("error_detail", "");
  if (!j.at("result").is_null()) r.result = j["result"].get<double>();
  for (const auto& s : j.at("retrieved")) {
    r.retrieved.push_back({s.at("id").get<std::string>(), s.at("score").get<double>()});
  }
  return r;
}

json header_json(const EvalReport& r) {
  return {{"dataset", r.dataset},         {"split", r.split},
          {"strategy", r.strategy},       {"M", r.M},
          {"seed", r.seed},               {"n_total", r.n_total},
          {"n_correct", r.n_correct},     {"accuracy", r.accuracy},
          {"histogram", r.histogram},     {"mean_similarity", r.mean_similarity}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool left = true) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

EvalReport evaluate_impl(const std::vector<Problem>& problems, const VectorIndex& index,
                         const AnnotationStore& store, const Corpus& corpus,
                         const EvalConfig& cfg, Gateway& gateway) {
  if (problems.empty()) throw Error(ErrorCode::empty_split, "no problems to evaluate");
  std::vector<Prediction> preds(problems.size());
  detail::parallel_for(problems.size(), cfg.jobs, [&](std::size_t i) {
    preds[i] = predict(problems[i], index, store, corpus, cfg.predict, gateway);
  });

  EvalReport report;
  report.dataset = cfg.dataset;
  report.split = cfg.split;
  report.strategy = std::string(to_string(cfg.predict.retrieval.strategy));
  report.M = cfg.predict.retrieval.M;
  report.seed = cfg.predict.retrieval.random_seed;
  for (const auto& p : preds) report.records.push_back(to_record(p));
  report.recompute();

  if (!cfg.run_dir.empty()) {
    for (const auto& p : preds) {
      detail::write_file(cfg.run_dir / "prompts" / (file_safe(p.problem_id) + ".txt"), p.prompt);
    }
    write_report(report, cfg.run_dir);
    write_overlap(overlap_report(std::vector<EvalReport>{report}, corpus),
                  cfg.run_dir / "overlap.json");
  }
  return report;
}

}  // namespace

void EvalReport::recompute() {
  n_total = records.size();
  n_correct = 0;
  histogram.clear();
  for (const char* k : kErrorClasses) histogram[k] = 0;
  double sim_sum = 0.0;
  std::size_t sim_count = 0;
  for (const auto& r : records) {
    if (r.correct) {
      ++n_correct;
    } else {
      ++histogram[error_class(r)];
    }
    for (const auto& s : r.retrieved) {
      sim_sum += s.score;
      ++sim_count;
    }
  }
  accuracy = n_total ? static_cast<double>(n_correct) / static_cast<double>(n_total) : 0.0;
  mean_similarity = sim_count ? sim_sum / static_cast<double>(sim_count) : 0.0;
}

EvalReport evaluate(const std::vector<Problem>& problems, const VectorIndex& index,
                    const AnnotationStore& store, const Corpus& corpus, const EvalConfig& cfg,
                    Gateway& gateway) {
  return evaluate_impl(problems, index, store, corpus, cfg, gateway);
}

std::vector<EvalReport> run_ablation(const std::vector<Problem>& problems,
                                     const VectorIndex& index, const AnnotationStore& store,
                                     const Corpus& corpus, const std::vector<Strategy>& strategies,
                                     const std::vector<std::uint64_t>& seeds,
                                     const EvalConfig& cfg, Gateway& gateway) {
  const std::vector<std::uint64_t> seed_list =
      seeds.empty() ? std::vector<std::uint64_t>{cfg.predict.retrieval.random_seed} : seeds;
  gateway.set_memoize_greedy(true);
  std::vector<EvalReport> reports;
  for (Strategy s : strategies) {
    std::optional<EvalReport> deterministic;
    for (std::uint64_t seed : seed_list) {
      EvalConfig c = cfg;
      c.predict.retrieval.strategy = s;
      c.predict.retrieval.random_seed = seed;
      std::string name(to_string(s));
      if (seed_list.size() > 1) name += "-seed" + std::to_string(seed);
      if (!cfg.run_dir.empty()) c.run_dir = cfg.run_dir / name;
      EvalReport r;
      if (s != Strategy::random && deterministic) {
        r = *deterministic;
        r.seed = seed;
        if (!c.run_dir.empty()) {
          write_report(r, c.run_dir);
          write_overlap(overlap_report(std::vector<EvalReport>{r}, corpus),
                        c.run_dir / "overlap.json");
          for (const auto& p : problems) {
            const fs::path src = cfg.run_dir / (std::string(to_string(s)) + "-seed" +
                                                std::to_string(seed_list.front())) /
                                 "prompts" / (file_safe(p.id) + ".txt");
            detail::write_file(c.run_dir / "prompts" / (file_safe(p.id) + ".txt"),
                               detail::read_file(src));
          }
        }
      } else {
        r = evaluate_impl(problems, index, store, corpus, c, gateway);
        if (s != Strategy::random) deterministic = r;
      }
      reports.push_back(std::move(r));
    }
  }
  gateway.set_memoize_greedy(false);
  if (!cfg.run_dir.empty()) {
    detail::write_file(cfg.run_dir / "ablation.txt", format_ablation(reports));
    json summary = json::array();
    for (const auto& r : reports) summary.push_back(header_json(r));
    detail::write_file(cfg.run_dir / "ablation.json", summary.dump(2) + "\n");
    write_overlap(overlap_report(reports, corpus), cfg.run_dir / "overlap.json");
  }
  return reports;
}

double jaccard(const std::string& a, const std::string& b) {
  const auto ta = detail::word_tokens(a);
  const auto tb = detail::word_tokens(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

OverlapReport overlap_report(const std::vector<EvalReport>& reports, const Corpus& corpus) {
  OverlapReport out;
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& rep : reports) {
    auto& [sum, count] = sums[rep.strategy];
    for (const auto& rec : rep.records) {
      OverlapEntry e{rep.strategy, rec.problem_id, {}};
      const std::string& question = corpus.at(rec.problem_id).question;
      for (const auto& s : rec.retrieved) {
        const double o = jaccard(question, corpus.at(s.problem_id).question);
        e.overlaps.push_back(o);
        sum += o;
        ++count;
      }
      out.entries.push_back(std::move(e));
    }
  }
  for (const auto& [strategy, sc] : sums) {
    out.mean_by_strategy[strategy] = sc.second ? sc.first / static_cast<double>(sc.second) : 0.0;
  }
  return out;
}

OverlapReport overlap_report(const std::vector<fs::path>& run_dirs, const Corpus& corpus) {
  std::vector<EvalReport> reports;
  for (const auto& dir : run_dirs) reports.push_back(load_report(dir));
  return overlap_report(reports, corpus);
}

void write_overlap(const OverlapReport& report, const fs::path& path) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"strategy", e.strategy}, {"problem_id", e.problem_id}, {"overlaps", e.overlaps}});
  }
  json j = {{"mean_by_strategy", report.mean_by_strategy}, {"entries", entries}};
  detail::write_file(path, j.dump(2) + "\n");
}

RunComparison compare_runs(const EvalReport& a, const EvalReport& b) {
  std::map<std::string, bool> ca;
  for (const auto& r : a.records) ca[r.problem_id] = r.correct;
  std::map<std::string, bool> cb;
  for (const auto& r : b.records) cb[r.problem_id] = r.correct;
  if (ca.size() != cb.size() ||
      !std::equal(ca.begin(), ca.end(), cb.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw Error(ErrorCode::id_set_mismatch, "runs cover different problem ids");
  }
  RunComparison c;
  c.n = ca.size();
  for (const auto& [id, correct_a] : ca) {
    const bool correct_b = cb[id];
    if (correct_a && correct_b) {
      ++c.both_correct;
    } else if (correct_a) {
      ++c.only_a;
    } else if (correct_b) {
      ++c.only_b;
    } else {
      ++c.both_wrong;
    }
  }
  return c;
}

std::string format_comparison(const RunComparison& c, const std::string& name_a,
                              const std::string& name_b) {
  std::ostringstream out;
  auto row = [&](const std::string& label, std::size_t count) {
    out << pad(label, 24) << pad(std::to_string(count), 8, false) << pad(fixed(c.pct(count), 1) + "%", 9, false)
        << "\n";
  };
  out << pad("category", 24) << pad("count", 8, false) << pad("share", 9, false) << "\n";
  row("both correct", c.both_correct);
  row("only " + name_a, c.only_a);
  row("only " + name_b, c.only_b);
  row("both wrong", c.both_wrong);
  out << pad("total", 24) << pad(std::to_string(c.n), 8, false) << "\n";
  return out.str();
}

void write_report(const EvalReport& report, const fs::path& dir) {
  std::string lines;
  for (const auto& r : report.records) {
    lines += record_json(r).dump();
    lines.push_back('\n');
  }
  detail::write_file(dir / "predictions.jsonl", lines);
  detail::write_file(dir / "report.json", header_json(report).dump(2) + "\n");
  detail::write_file(dir / "report.txt", format_report(report));
}

EvalReport load_report(const fs::path& dir) {
  const fs::path header_path = dir / "report.json";
  const fs::path preds_path = dir / "predictions.jsonl";
  if (!fs::exists(header_path) || !fs::exists(preds_path)) {
    throw Error(ErrorCode::missing_run_artifacts, dir.string());
  }
  json h = json::parse(detail::read_file(header_path), nullptr, false);
  if (h.is_discarded()) throw Error(ErrorCode::malformed_record, header_path.string());
  EvalReport r;
  try {
    r.dataset = h.at("dataset").get<std::string>();
    r.split = h.at("split").get<std::string>();
    r.strategy = h.at("strategy").get<std::string>();
    r.M = h.at("M").get<std::size_t>();
    r.seed = h.at("seed").get<std::uint64_t>();
    r.n_total = h.at("n_total").get<std::size_t>();
    r.n_correct = h.at("n_correct").get<std::size_t>();
    r.accuracy = h.at("accuracy").get<double>();
    r.histogram = h.at("histogram").get<std::map<std::string, std::size_t>>();
    r.mean_similarity = h.at("mean_similarity").get<double>();
    std::istringstream in(detail::read_file(preds_path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) r.records.push_back(record_from_json(json::parse(line)));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_record, dir.string() + ": " + e.what());
  }
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "dataset   " << (r.dataset.empty() ? "n/a" : r.dataset) << "\n";
  out << "split     " << r.split << "\n";
  out << "strategy  " << r.strategy << "\n";
  out << "M         " << r.M << "\n";
  out << "seed      " << r.seed << "\n";
  out << "accuracy  " << fixed(r.accuracy * 100.0, 1) << "% (" << r.n_correct << "/" << r.n_total
      << ")\n";
  out << "mean sim  " << fixed(r.mean_similarity, 4) << "\n\n";
  out << pad("error class", 16) << pad("count", 7, false) << "\n";
  for (const char* k : kErrorClasses) {
    auto it = r.histogram.find(k);
    out << pad(k, 16) << pad(std::to_string(it == r.histogram.end() ? 0 : it->second), 7, false)
        << "\n";
  }
  return out.str();
}

std::string format_ablation(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << pad("strategy", 16) << pad("seed", 6, false) << pad("M", 4, false)
      << pad("correct", 9, false) << pad("total", 7, false) << pad("accuracy", 10, false)
      << pad("mean sim", 10, false) << "\n";
  for (const auto& r : reports) {
    out << pad(r.strategy, 16) << pad(std::to_string(r.seed), 6, false)
        << pad(std::to_string(r.M), 4, false) << pad(std::to_string(r.n_correct), 9, false)
        << pad(std::to_string(r.n_total), 7, false)
        << pad(fixed(r.accuracy * 100.0, 1), 10, false)
        << pad(fixed(r.mean_similarity, 4), 10, false) << "\n";
  }
  return out.str();
}

}  // namespace progshot
