#include <doctest.h>

#include <json.hpp>
#include <progshot/annotator.hpp>
#include <progshot/error.hpp>
#include <progshot/prompting.hpp>

#include "support.hpp"

using namespace progshot;
using nlohmann::json;
using namespace progshot::testing;

namespace {

std::shared_ptr<FnTransport> scripted_transport(ScriptedResponder& r) {
  return std::make_shared<FnTransport>([&r](const std::string&, const std::string& body) {
    const json req = json::parse(body);
    return HttpReply{200, completion_reply({r.respond(req.at("prompt").get<std::string>(),
                                                      req.at("temperature").get<double>())})};
  });
}

GatewayConfig http_config() {
  GatewayConfig c;
  c.mode = GatewayMode::http;
  c.base_url = "http://unused";
  c.backoff_initial_ms = 1;
  return c;
}

Corpus annotate20_corpus() {
  Corpus c;
  for (const auto& p : annotate20_problems()) {
    c.add({p.id, p.question, p.gold, Dataset::gsm8k, Split::train});
  }
  return c;
}

AnnotationStore run_annotate20(std::size_t jobs) {
  ScriptedResponder r;
  fill_annotate20_script(r);
  Gateway g(http_config(), scripted_transport(r));
  AnnotatorConfig cfg;
  cfg.jobs = jobs;
  return annotate_corpus(annotate20_corpus(), cfg, g, "t0");
}

}  // namespace

TEST_SUITE("annotator") {
  TEST_CASE("temperature schedule") {
    AnnotatorConfig cfg;
    CHECK(cfg.temperature_for(0) == 0.0);
    CHECK(cfg.temperature_for(1) == 0.5);
    CHECK(cfg.temperature_for(4) == 0.5);
    cfg.temperature_step = 0.1;
    CHECK(cfg.temperature_for(3) == doctest::Approx(0.7));
    CHECK(cfg.stops() == default_stop_sequences());
    cfg.max_attempts = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }

  TEST_CASE("default seed prompt exemplars execute") {
    const std::string seed = default_seed_prompt();
    std::size_t pos = 0;
    int blocks = 0;
    while ((pos = seed.find("def solution():", pos)) != std::string::npos) {
      auto next = seed.find("def solution():", pos + 1);
      const std::string block = seed.substr(pos, next == std::string::npos ? next : next - pos);
      CHECK(interp::run_program(block).ok());
      ++blocks;
      pos = pos + 1;
    }
    CHECK(blocks == 3);
  }

  TEST_CASE("annotation fixture: attempts, discards and retention") {
    const AnnotationStore store = run_annotate20(1);
    const auto problems = annotate20_problems();
    CHECK(store.examples().size() == 17);
    CHECK(store.discards().size() == 3);
    CHECK(store.summary() == "retained 17/20 (85.0%)");
    CHECK(store.retention().value() == doctest::Approx(0.85));
    for (const auto& p : problems) {
      CAPTURE(p.id);
      if (p.expected_attempt >= 0) {
        const auto* e = store.find(p.id);
        REQUIRE(e != nullptr);
        CHECK(e->attempt_index == p.expected_attempt);
        CHECK(e->temperature_used == (p.expected_attempt == 0 ? 0.0 : 0.5));
        CHECK(e->verified_answer == p.gold);
        CHECK(interp::run_program(e->program).result == p.gold);
        CHECK(e->program.rfind(render_stub(p.question), 0) == 0);
        CHECK(e->program.find("Another question") == std::string::npos);
      } else {
        CHECK(store.find(p.id) == nullptr);
        auto it = std::find_if(store.discards().begin(), store.discards().end(),
                               [&](const Discarded& d) { return d.problem_id == p.id; });
        REQUIRE(it != store.discards().end());
        CHECK(it->reason == p.expected_reason);
        CHECK(it->attempts == 5);
      }
    }
  }

  TEST_CASE("parallel annotation gives the same store") {
    const auto a = run_annotate20(1);
    const auto b = run_annotate20(4);
    CHECK(a.examples() == b.examples());
    CHECK(a.discards() == b.discards());
  }

  TEST_CASE("K bounds the number of attempts") {
    ScriptedResponder r;
    fill_annotate20_script(r);
    auto t = scripted_transport(r);
    Gateway g(http_config(), t);
    AnnotatorConfig cfg;
    cfg.max_attempts = 2;
    const auto store = annotate_corpus(annotate20_corpus(), cfg, g);
    CHECK(store.examples().size() == 13);
    CHECK(t->calls() <= 40);
    for (const auto& e : store.examples()) CHECK(e.attempt_index < 2);
  }

  TEST_CASE("backend failures discard with backend_error") {
    auto down = std::make_shared<FnTransport>(
        [](const std::string&, const std::string&) { return HttpReply{503, "down"}; });
    auto cfg = http_config();
    cfg.max_retries = 0;
    Gateway g(cfg, down);
    const Problem p{"x", "What is 1 + 1?", 2, Dataset::custom, Split::train};
    const auto r = annotate_one(p, AnnotatorConfig{}, g);
    REQUIRE(std::holds_alternative<Discarded>(r));
    CHECK(std::get<Discarded>(r).reason == "backend_error");
    Problem test = p;
    test.split = Split::test;
    CHECK_THROWS_AS(annotate_one(test, AnnotatorConfig{}, g), Error);
  }

  TEST_CASE("annotation prompt is the seed prompt followed by the stub") {
    std::string seen;
    auto t = completion_transport([&](const std::string& prompt) {
      seen = prompt;
      return std::string("    return 2\n");
    });
    Gateway g(http_config(), t);
    AnnotatorConfig cfg;
    cfg.seed_prompt = "# header\n\n\n";
    const Problem p{"x", "What is 1 + 1?", 2, Dataset::custom, Split::train};
    const auto r = annotate_one(p, cfg, g);
    CHECK(std::holds_alternative<AnnotatedExample>(r));
    CHECK(seen == "# header\n\n" + render_stub(p.question));
  }

  TEST_CASE("store persistence round-trips") {
    const auto store = run_annotate20(1);
    TempDir dir;
    store.save(dir / "store.jsonl", dir / "discards.jsonl");
    const std::string text = read_text(dir / "store.jsonl");
    const json header = json::parse(text.substr(0, text.find('\n')));
    CHECK(header["header"]["train_count"] == 20);
    CHECK(header["header"]["created_at"] == "t0");
    CHECK(header["header"]["config"].contains("seed_prompt_sha256"));
    const auto back = AnnotationStore::load(dir / "store.jsonl", dir / "discards.jsonl");
    CHECK(back.examples() == store.examples());
    CHECK(back.discards().size() == 3);
    CHECK(back.summary() == store.summary());
    back.save(dir / "again.jsonl");
    CHECK(read_text(dir / "again.jsonl") == text);
    write_text(dir / "bad.jsonl", "{\"no\":1}\n");
    CHECK_THROWS_AS(AnnotationStore::load(dir / "bad.jsonl"), Error);
    CHECK(AnnotationStore{}.summary() == "retained 0/0 (n/a)");
  }

  TEST_CASE("verification catches tampered programs") {
    auto store = run_annotate20(1);
    const Corpus corpus = annotate20_corpus();
    auto clean = verify_store(store, corpus);
    CHECK(clean.clean());
    CHECK(clean.checked == 17);
    store.set_program("a20-03", "def solution():\n    return -1\n");
    store.set_program("a20-04", "def solution(:\n");
    const auto report = verify_store(store, corpus);
    REQUIRE(report.mismatches.size() == 2);
    CHECK(report.mismatches[0].problem_id == "a20-03");
    CHECK(report.mismatches[1].detail.rfind("parse_error", 0) == 0);
    Corpus partial;
    CHECK_THROWS_AS(verify_store(store, partial), Error);
  }

  TEST_CASE("distillation export") {
    const auto store = run_annotate20(1);
    const Corpus corpus = annotate20_corpus();
    TempDir dir;
    ExportOptions opt{dir / "distill.jsonl", dir / "card.md", true};
    CHECK(export_distillation_set(store, corpus, opt) == 17);
    const auto records = load_distillation_set(dir / "distill.jsonl");
    REQUIRE(records.size() == 17);
    CHECK(records[0].target == store.examples()[0].program);
    CHECK(records[0].input == render_stub(corpus.at(store.examples()[0].problem_id).question));
    CHECK(read_text(dir / "card.md").find("retained 17/20 (85.0%)") != std::string::npos);
    opt.wrap_input_as_stub = false;
    opt.card.clear();
    export_distillation_set(store, corpus, opt);
    CHECK(load_distillation_set(dir / "distill.jsonl")[0].input ==
          corpus.at(store.examples()[0].problem_id).question);
  }
}
