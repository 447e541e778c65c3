#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include <json.hpp>
#include <progshot/annotator.hpp>
#include <progshot/error.hpp>
#include <progshot/evaluation.hpp>

#include "common/util.hpp"
#include "support.hpp"

using namespace progshot;
using namespace progshot::testing;
namespace fs = std::filesystem;

namespace {

struct Setup {
  Corpus corpus;
  AnnotationStore store;
  std::vector<Problem> test;
};

// Train questions with distinct vocabulary; test problems are renamed copies.
Setup echo_setup() {
  const std::vector<std::string> topics = {"apples orchard harvest", "train station platform",
                                           "library books shelves", "garden tomatoes rows",
                                           "pizza slices party",     "bicycle wheels spokes",
                                           "aquarium fish tanks",    "bakery muffins trays"};
  Setup s;
  for (std::size_t i = 0; i < topics.size(); ++i) {
    const int a = 10 + static_cast<int>(i) * 3;
    const int b = 2 + static_cast<int>(i);
    const std::string q = "The " + topics[i] + " count is " + std::to_string(a) + " times " +
                          std::to_string(b) + ". What is the total?";
    const std::string id = "tr-" + std::to_string(i);
    s.corpus.add({id, q, static_cast<double>(a * b), Dataset::custom, Split::train});
    s.store.add({id,
                 "def solution():\n    a = " + std::to_string(a) + "\n    b = " +
                     std::to_string(b) + "\n    return a * b\n",
                 static_cast<double>(a * b), 0, 0.0, 3});
    Problem t{"te-" + std::to_string(i), q, static_cast<double>(a * b), Dataset::custom,
              Split::test};
    s.corpus.add(t);
    s.test.push_back(t);
  }
  return s;
}

Gateway echo_gateway() {
  GatewayConfig gc;
  gc.mode = GatewayMode::http;
  gc.base_url = "http://unused";
  gc.embedding_dim = 128;
  return Gateway(gc, echo_transport());
}

double jaccard_oracle(const std::string& a, const std::string& b) {
  auto toks = [](const std::string& s) {
    std::set<std::string> out;
    std::string cur;
    for (char c : s + " ") {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else if (!cur.empty()) {
        out.insert(cur);
        cur.clear();
      }
    }
    return out;
  };
  const auto x = toks(a), y = toks(b);
  if (x.empty() && y.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : x) inter += y.count(t);
  return static_cast<double>(inter) / static_cast<double>(x.size() + y.size() - inter);
}

PredictionRecord rec(const std::string& id, const std::string& status, bool correct) {
  PredictionRecord r;
  r.problem_id = id;
  r.status = status;
  r.correct = correct;
  if (status == "ok") r.result = 1.0;
  return r;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("error histogram partitions incorrect predictions") {
    EvalReport r;
    r.records = {rec("a", "ok", true),          rec("b", "ok", false),
                 rec("c", "parse_error", false), rec("d", "unsupported_construct", false),
                 rec("e", "runtime_error", false), rec("f", "step_limit_exceeded", false),
                 rec("g", "non_numeric_result", false)};
    r.records[0].retrieved = {{"x", 0.5}, {"y", 0.25}};
    r.recompute();
    CHECK(r.n_total == 7);
    CHECK(r.n_correct == 1);
    CHECK(r.accuracy == doctest::Approx(1.0 / 7.0));
    CHECK(r.histogram.at("parse") == 2);
    CHECK(r.histogram.at("runtime") == 1);
    CHECK(r.histogram.at("step_limit") == 1);
    CHECK(r.histogram.at("non_numeric") == 1);
    CHECK(r.histogram.at("wrong_answer") == 1);
    std::size_t sum = 0;
    for (const auto& [k, v] : r.histogram) sum += v;
    CHECK(sum == r.n_total - r.n_correct);
    CHECK(r.mean_similarity == doctest::Approx(0.375));
  }

  TEST_CASE("jaccard agrees with a set oracle") {
    CHECK(jaccard("", "") == 1.0);
    CHECK(jaccard("a b", "") == 0.0);
    CHECK(jaccard("The cat", "the CAT!") == 1.0);
    std::mt19937_64 rng(6);
    const std::vector<std::string> words = {"a", "B", "cat", "dog", "7", "12", "Tom", "tom", "x"};
    for (int i = 0; i < 500; ++i) {
      std::string s, t;
      for (int k = 0; k < static_cast<int>(rng() % 6); ++k) s += words[rng() % words.size()] + ", ";
      for (int k = 0; k < static_cast<int>(rng() % 6); ++k) t += words[rng() % words.size()] + ". ";
      CHECK(jaccard(s, t) == doctest::Approx(jaccard_oracle(s, t)));
      CHECK(jaccard(s, t) == jaccard(t, s));
    }
  }

  TEST_CASE("evaluate with an echo model rewards most-similar retrieval") {
    auto s = echo_setup();
    auto g = echo_gateway();
    const VectorIndex idx = build_index(s.store, s.corpus, g, EmbeddingSpec{});
    EvalConfig cfg;
    cfg.predict.retrieval.M = 3;
    cfg.dataset = "custom";
    const auto most = evaluate(s.test, idx, s.store, s.corpus, cfg, g);
    CHECK(most.n_total == 8);
    CHECK(most.n_correct == 8);
    CHECK(most.accuracy == 1.0);
    cfg.predict.retrieval.strategy = Strategy::least_similar;
    const auto least = evaluate(s.test, idx, s.store, s.corpus, cfg, g);
    CHECK(least.n_correct == 0);
    CHECK(least.histogram.at("wrong_answer") == 8);
    CHECK(least.mean_similarity < most.mean_similarity);
    CHECK(evaluate(s.test, idx, s.store, s.corpus, cfg, g) == least);
    CHECK_THROWS_AS(evaluate({}, idx, s.store, s.corpus, cfg, g), Error);
  }

  TEST_CASE("run directory artifacts round-trip") {
    auto s = echo_setup();
    auto g = echo_gateway();
    const VectorIndex idx = build_index(s.store, s.corpus, g, EmbeddingSpec{});
    TempDir dir;
    EvalConfig cfg;
    cfg.predict.retrieval.M = 2;
    cfg.run_dir = dir / "eval";
    cfg.jobs = 3;
    const auto report = evaluate(s.test, idx, s.store, s.corpus, cfg, g);
    for (const char* f : {"predictions.jsonl", "report.json", "report.txt", "overlap.json"}) {
      CHECK(fs::exists(cfg.run_dir / f));
    }
    CHECK(fs::exists(cfg.run_dir / "prompts" / "te-0.txt"));
    const auto back = load_report(cfg.run_dir);
    CHECK(back == report);
    CHECK(read_text(cfg.run_dir / "report.txt") == format_report(report));
    CHECK(format_report(report).find("accuracy  100.0% (8/8)") != std::string::npos);
    try {
      (void)load_report(dir / "nothing");
      FAIL("expected MissingRunArtifacts");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::missing_run_artifacts);
    }
    const auto ov = overlap_report(std::vector<fs::path>{cfg.run_dir}, s.corpus);
    CHECK(ov.entries.size() == 8);
    CHECK(ov.entries[0].overlaps.size() == 2);
    CHECK(ov.entries[0].overlaps[0] == doctest::Approx(1.0));
  }

  TEST_CASE("ablation writes one directory per strategy and seed") {
    auto s = echo_setup();
    auto g = echo_gateway();
    const VectorIndex idx = build_index(s.store, s.corpus, g, EmbeddingSpec{});
    TempDir dir;
    EvalConfig cfg;
    cfg.predict.retrieval.M = 2;
    cfg.run_dir = dir.path();
    const auto reports =
        run_ablation(s.test, idx, s.store, s.corpus,
                     {Strategy::most_similar, Strategy::random, Strategy::least_similar}, {1, 2},
                     cfg, g);
    REQUIRE(reports.size() == 6);
    for (const char* d : {"most_similar-seed1", "most_similar-seed2", "random-seed1",
                          "random-seed2", "least_similar-seed1", "least_similar-seed2"}) {
      CAPTURE(d);
      CHECK(fs::exists(dir / d / "report.json"));
      CHECK(fs::exists(dir / d / "prompts" / "te-3.txt"));
    }
    CHECK(fs::exists(dir / "ablation.txt"));
    CHECK(fs::exists(dir / "ablation.json"));
    CHECK(fs::exists(dir / "overlap.json"));
    CHECK(reports[0].records == reports[1].records);
    CHECK(reports[0].accuracy > reports[4].accuracy);
    CHECK(reports[2].records != reports[3].records);
    CHECK(format_ablation(reports).find("random") != std::string::npos);
  }

  TEST_CASE("paired comparison") {
    EvalReport a, b;
    a.records = {rec("1", "ok", true), rec("2", "ok", true), rec("3", "ok", false),
                 rec("4", "ok", false)};
    b.records = {rec("4", "ok", true), rec("3", "ok", false), rec("2", "ok", false),
                 rec("1", "ok", true)};
    const auto c = compare_runs(a, b);
    CHECK(c.n == 4);
    CHECK(c.both_correct == 1);
    CHECK(c.only_a == 1);
    CHECK(c.only_b == 1);
    CHECK(c.both_wrong == 1);
    CHECK(c.pct(c.both_correct) == 25.0);
    CHECK(format_comparison(c, "x", "y").find("x") != std::string::npos);
    b.records.pop_back();
    try {
      (void)compare_runs(a, b);
      FAIL("expected IdSetMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::id_set_mismatch);
    }
  }
}
