#include <doctest.h>

#include <filesystem>
#include <random>

#include <json.hpp>
#include <progshot/interpreter.hpp>

#include "support.hpp"

using namespace progshot::interp;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kEffectful = {
    "open",    "eval",    "exec",  "__import__", "compile", "getattr", "setattr",
    "globals", "locals",  "vars",  "input",      "print",   "exit",    "quit",
    "help",    "dir",     "type",  "object",     "id",      "hash",    "breakpoint",
    "delattr", "memoryview", "bytearray", "super", "classmethod", "__builtins__"};

std::vector<std::string> curated_sources() {
  const fs::path dir = fs::path(PROGSHOT_TEST_DATA) / "programs";
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".py") out.push_back(progshot::testing::read_text(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

class ScopedCwd {
 public:
  explicit ScopedCwd(const fs::path& p) : old_(fs::current_path()) { fs::current_path(p); }
  ~ScopedCwd() { fs::current_path(old_); }

 private:
  fs::path old_;
};

}  // namespace

TEST_SUITE("sandbox") {
  TEST_CASE("only whitelisted names are reachable") {
    for (const auto& name : kEffectful) {
      CAPTURE(name);
      for (const std::string& body : {"    return " + name + "('x')\n",
                                     "    f = " + name + "\n    return 1\n"}) {
        const auto o = run_program("def solution():\n" + body);
        CHECK_FALSE(o.ok());
        CHECK((o.status == ExecutionStatus::unsupported_construct ||
               o.status == ExecutionStatus::runtime_error));
      }
    }
  }

  TEST_CASE("imports other than math are rejected") {
    for (const std::string& mod : {"os", "sys", "subprocess", "socket", "shutil", "builtins"}) {
      CAPTURE(mod);
      CHECK(run_program("import " + mod + "\ndef solution():\n    return 1\n").status ==
            ExecutionStatus::unsupported_construct);
      CHECK(run_program("from " + mod + " import path\ndef solution():\n    return 1\n").status ==
            ExecutionStatus::unsupported_construct);
    }
    CHECK(run_program("from math import system\ndef solution():\n    return 1\n").status ==
          ExecutionStatus::unsupported_construct);
  }

  TEST_CASE("dunder and attribute escapes are rejected") {
    for (const std::string& body :
         {"    return ().__class__\n", "    return [].__class__.__base__\n",
          "    x = 'a'.join\n    return 1\n", "    return math.__dict__\n",
          "    return (1).__add__(2)\n"}) {
      CAPTURE(body);
      CHECK_FALSE(run_program("import math\ndef solution():\n" + body).ok());
    }
  }

  TEST_CASE("mutation fuzz leaves the filesystem untouched") {
    const std::vector<std::string> inserts = {
        "open('out.txt', 'w')", "__import__('os').system('touch pwned')",
        "exec('x=1')",          "eval('1')",
        "print('x')",           "import os",
        "[0] * 10**9",          "while True: pass",
        "(",                    ":",
        "\n    ",               "math.sqrt(-1)",
        "10 ** 10 ** 10",       "x" };
    const auto sources = curated_sources();
    REQUIRE_FALSE(sources.empty());
    progshot::testing::TempDir tmp;
    ScopedCwd cwd(tmp.path());
    std::mt19937_64 rng(99);
    std::size_t ran = 0;
    for (int i = 0; i < 1500; ++i) {
      std::string src = sources[rng() % sources.size()];
      const int edits = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < edits; ++k) {
        const std::size_t pos = rng() % (src.size() + 1);
        switch (rng() % 3) {
          case 0: src.insert(pos, inserts[rng() % inserts.size()]); break;
          case 1:
            if (!src.empty()) src.erase(std::min(pos, src.size() - 1), 1 + rng() % 8);
            break;
          default: {
            const auto nl = src.find('\n', pos);
            if (nl != std::string::npos) {
              src.insert(nl + 1, "    y = " + inserts[rng() % inserts.size()] + "\n");
            }
          }
        }
      }
      const auto o = run_program(src, 20'000);
      CHECK(o.steps_used <= 20'000);
      CHECK(o.result.has_value() == o.ok());
      ++ran;
    }
    CHECK(ran == 1500);
    CHECK(fs::is_empty(tmp.path()));
  }

  TEST_CASE("memory growth is bounded by the step budget") {
    const auto o = run_program(
        "def solution():\n    x = [1]\n    while True:\n        x = x + x\n    return 1\n");
    CHECK_FALSE(o.ok());
  }
}
