#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include <json.hpp>
#include <progshot/cli.hpp>
#include <progshot/error.hpp>
#include <progshot/evaluation.hpp>

#include "support.hpp"

using namespace progshot;
using namespace progshot::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd =
      "cd '" + cwd.string() + "' && '" + std::string(PROGSHOT_CLI) + "' " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void copy_fixture(const std::string& name, const fs::path& dst) {
  fs::copy(fs::path(PROGSHOT_TEST_DATA) / name, dst, fs::copy_options::recursive);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exec prints the execution outcome as JSON") {
    TempDir dir;
    write_text(dir / "p.py",
               "def solution():\n    clips_april = 48\n    clips_may = clips_april / 2\n"
               "    clips_total = clips_april + clips_may\n    result = clips_total\n"
               "    return result\n");
    const auto r = run_cli("exec p.py", dir.path());
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["status"] == "ok");
    CHECK(j["result"] == 72.0);
    CHECK(j["steps_used"] == 7);
    CHECK(r.out.rfind("{\"status\"", 0) == 0);

    write_text(dir / "bad.py", "def solution(:\n");
    const auto bad = run_cli("exec bad.py", dir.path());
    CHECK(bad.code == 0);
    CHECK(json::parse(bad.out)["status"] == "parse_error");
    CHECK(json::parse(bad.out)["result"].is_null());

    write_text(dir / "loop.py", "def solution():\n    while True:\n        pass\n    return 1\n");
    const auto loop = run_cli("exec --budget 50 - < loop.py", dir.path());
    CHECK(json::parse(loop.out)["status"] == "step_limit_exceeded");
    CHECK(json::parse(loop.out)["steps_used"] == 50);

    const auto missing = run_cli("exec nope.py", dir.path());
    CHECK(missing.code == 2);
    CHECK(missing.out.find("FileMissing") != std::string::npos);
  }

  TEST_CASE("annotate, verify and export on the replay fixture") {
    TempDir dir;
    copy_fixture("annotate20", dir / "w");
    const fs::path w = dir / "w";
    const auto a = run_cli("--config config.ini annotate", w);
    CHECK(a.code == 0);
    CHECK(a.out.find("retained 17/20 (85.0%)") != std::string::npos);
    const std::string first = read_text(w / "run" / "store.jsonl");

    const auto again = run_cli("--config config.ini --run-dir run2 --jobs 4 annotate", w);
    CHECK(again.code == 0);
    CHECK(read_text(w / "run2" / "store.jsonl") == first);
    CHECK(read_text(w / "run2" / "discards.jsonl") == read_text(w / "run" / "discards.jsonl"));

    CHECK(run_cli("--config config.ini verify", w).code == 0);
    const auto ex = run_cli("--config config.ini export", w);
    CHECK(ex.code == 0);
    CHECK(fs::exists(w / "run" / "distill.jsonl"));
    CHECK(read_text(w / "run" / "dataset_card.md").find("17/20") != std::string::npos);

    auto store = AnnotationStore::load(w / "run" / "store.jsonl");
    store.set_program("a20-05", "def solution():\n    return 0\n");
    store.save(w / "run" / "store.jsonl");
    const auto v = run_cli("--config config.ini verify", w);
    CHECK(v.code == 1);
    CHECK(v.out.find("a20-05") != std::string::npos);
    const auto ex2 = run_cli("--config config.ini export", w);
    CHECK(ex2.code == 2);
    CHECK(ex2.out.find("VerifyFirst") != std::string::npos);
  }

  TEST_CASE("full pipeline on the replay fixture is reproducible") {
    TempDir dir;
    copy_fixture("pipeline", dir / "w");
    const fs::path w = dir / "w";
    REQUIRE(run_cli("--config config.ini annotate", w).code == 0);
    const auto idx = run_cli("--config config.ini index", w);
    REQUIRE(idx.code == 0);
    CHECK(idx.out.find("indexed 11 records") != std::string::npos);
    const auto ev = run_cli("--config config.ini eval", w);
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("most_similar") != std::string::npos);
    const std::string report = read_text(w / "run" / "eval" / "most_similar" / "report.json");
    const std::string preds = read_text(w / "run" / "eval" / "random" / "predictions.jsonl");
    const auto most = load_report(w / "run" / "eval" / "most_similar");
    CHECK(most.n_total == 6);
    CHECK(most.n_correct == 4);

    fs::remove_all(w / "run" / "eval");
    REQUIRE(run_cli("--config config.ini eval", w).code == 0);
    CHECK(read_text(w / "run" / "eval" / "most_similar" / "report.json") == report);
    CHECK(read_text(w / "run" / "eval" / "random" / "predictions.jsonl") == preds);

    const auto single = run_cli("--config config.ini --run-dir run eval --strategy least_similar", w);
    CHECK(single.code == 0);
    CHECK(fs::exists(w / "run" / "eval" / "least_similar" / "report.json"));
  }

  TEST_CASE("eval before index reports missing artifacts") {
    TempDir dir;
    copy_fixture("pipeline", dir / "w");
    const auto r = run_cli("--config config.ini eval", dir / "w");
    CHECK(r.code == 2);
  }

  TEST_CASE("regenerating fixtures reproduces the checked-in files") {
    for (const std::string which : {"annotate20", "pipeline"}) {
      CAPTURE(which);
      TempDir dir;
      generate_fixture(which, dir.path());
      const fs::path src = fs::path(PROGSHOT_TEST_DATA) / which;
      for (const auto& e : fs::directory_iterator(src)) {
        CAPTURE(e.path().filename().string());
        CHECK(read_text(dir / e.path().filename().string()) == read_text(e.path()));
      }
    }
  }

  TEST_CASE("configuration errors exit with code 2") {
    TempDir dir;
    write_text(dir / "bad.ini", "[dataset]\ntag = gsm8k\ncolour = blue\n");
    const auto r = run_cli("--config bad.ini annotate", dir.path());
    CHECK(r.code == 2);
    CHECK(r.out.find("ConfigError") != std::string::npos);
    CHECK(run_cli("--config missing.ini annotate", dir.path()).code == 2);
    CHECK(run_cli("--record a.jsonl --replay b.jsonl exec x.py", dir.path()).code != 0);
  }

  TEST_CASE("config loading resolves paths and applies overrides") {
    TempDir dir;
    write_text(dir / "sub" / "c.ini",
               "[dataset]\ntag = svamp\ntrain = data/train.jsonl\n[retrieval]\nm = 4\n"
               "strategy = random\nseeds = 1,2,3\n[run]\ndir = out\njobs = 2\n");
    auto cfg = cli::load_run_config(dir / "sub" / "c.ini");
    CHECK(cfg.dataset == Dataset::svamp);
    CHECK(cfg.train == dir / "sub" / "data" / "train.jsonl");
    CHECK(cfg.run_dir == dir / "sub" / "out");
    CHECK(cfg.M == 4);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
    cli::Overrides o;
    o.replay = dir / "fx.jsonl";
    o.seed = 9;
    o.jobs = 5;
    cli::apply_overrides(cfg, o);
    CHECK(cfg.gateway.mode == GatewayMode::replay);
    CHECK(cfg.gateway.fixtures == dir / "fx.jsonl");
    CHECK(cfg.seed == 9);
    CHECK(cfg.jobs == 5);
    cli::Overrides rec;
    rec.record = dir / "rec.jsonl";
    cli::apply_overrides(cfg, rec);
    CHECK(cfg.gateway.mode == GatewayMode::http);
    CHECK(cfg.gateway.record_to == dir / "rec.jsonl");
  }
}
