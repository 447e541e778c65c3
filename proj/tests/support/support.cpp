#include "support.hpp"

#include <httplib.h>

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <progshot/cli.hpp>

namespace progshot::testing {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir() {
  std::random_device rd;
  for (int i = 0; i < 100; ++i) {
    fs::path p = fs::temp_directory_path() / ("progshot-test-" + std::to_string(rd()));
    if (fs::create_directory(p)) {
      path_ = p;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string stub_question(const std::string& prompt) {
  const auto close = prompt.rfind("\"\"\"");
  if (close == std::string::npos || close < 3) return {};
  const auto open = prompt.rfind("\"\"\"", close - 1);
  if (open == std::string::npos) return {};
  std::string raw = prompt.substr(open + 3, close - open - 3);
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 1 < raw.size()) {
      const char n = raw[++i];
      out.push_back(n == 'n' ? '\n' : n == 'r' ? '\r' : n);
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

std::string last_exemplar_body(const std::string& prompt) {
  const std::string header = "def solution():\n";
  const auto stub = prompt.rfind(header);
  if (stub == std::string::npos || stub == 0) return "    return 0\n";
  const auto block = prompt.rfind(header, stub - 1);
  if (block == std::string::npos) return "    return 0\n";
  std::string text = prompt.substr(block + header.size(), stub - block - header.size());
  // Drop the docstring line.
  const auto first_nl = text.find('\n');
  std::string body = first_nl == std::string::npos ? "" : text.substr(first_nl + 1);
  while (!body.empty() && body.back() == '\n') body.pop_back();
  return body + "\n";
}

std::string completion_reply(const std::vector<std::string>& texts) {
  json choices = json::array();
  for (const auto& t : texts) choices.push_back({{"text", t}});
  return json{{"choices", choices}}.dump();
}

HttpReply FnTransport::post(const std::string& path, const std::string& body) {
  calls_.fetch_add(1);
  return fn_(path, body);
}

std::shared_ptr<FnTransport> completion_transport(
    std::function<std::string(const std::string& prompt)> fn) {
  return std::make_shared<FnTransport>([fn](const std::string&, const std::string& body) {
    const json req = json::parse(body);
    const int n = req.value("n", 1);
    return HttpReply{200, completion_reply(std::vector<std::string>(
                              static_cast<std::size_t>(n), fn(req.at("prompt").get<std::string>())))};
  });
}

std::shared_ptr<FnTransport> echo_transport() {
  return completion_transport([](const std::string& prompt) {
    return last_exemplar_body(prompt) + "\n\ndef solution():\n    \"\"\"Next question\"\"\"\n";
  });
}

std::string ScriptedResponder::respond(const std::string& prompt, double temperature) {
  const std::string q = stub_question(prompt);
  std::lock_guard lock(mu_);
  auto it = script_.find(q);
  if (it == script_.end()) return "    return None\n";
  const Entry& e = it->second;
  if (e.attempts.empty()) return e.eval_response;
  if (temperature == 0.0) return e.attempts.front();
  const std::size_t k = 1 + sampled_[q]++;
  return k < e.attempts.size() ? e.attempts[k] : e.attempts.back();
}

LocalServer::LocalServer(std::function<std::string(const std::string&, double)> fn)
    : server_(std::make_unique<httplib::Server>()) {
  server_->Post("/v1/completions", [this, fn](const httplib::Request& req, httplib::Response& res) {
    hits_.fetch_add(1);
    const json body = json::parse(req.body);
    const std::string text =
        fn(body.at("prompt").get<std::string>(), body.at("temperature").get<double>());
    res.set_content(completion_reply({text}), "application/json");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

LocalServer::~LocalServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

namespace {

struct Template {
  const char* name;
  const char* item;
};

std::string correct_body(int a, int b, int c) {
  return "    boxes = " + std::to_string(a) + "\n    items_per_box = " + std::to_string(b) +
         "\n    given_away = " + std::to_string(c) +
         "\n    result = boxes * items_per_box - given_away\n    return result\n";
}

std::string wrong_body(int a, int b, int c) {
  return "    boxes = " + std::to_string(a) + "\n    items_per_box = " + std::to_string(b) +
         "\n    given_away = " + std::to_string(c) +
         "\n    result = boxes * items_per_box + given_away\n    return result\n";
}

const std::string kParse = "    result = boxes * 2 +\n    return result\n";
const std::string kLoop = "    n = 0\n    while True:\n        n += 1\n    return n\n";
const std::string kNonNumeric = "    return \"many\"\n";
const std::string kUnsupported = "    import os\n    return 1\n";
const std::string kTrailer = "\n\ndef solution():\n    \"\"\"Another question\"\"\"\n";

}  // namespace

std::vector<FixtureProblem> annotate20_problems() {
  static const Template kTemplates[] = {
      {"Lena", "pencils"}, {"Omar", "marbles"}, {"Priya", "stickers"}, {"Jonas", "cookies"},
      {"Mei", "crayons"},
  };
  std::vector<FixtureProblem> out;
  for (int i = 0; i < 20; ++i) {
    const Template& t = kTemplates[i % 5];
    const int a = 3 + i;
    const int b = 4 + (i * 7) % 9;
    const int c = 1 + (i * 5) % 6;
    FixtureProblem p;
    p.id = "a20-" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1);
    p.question = std::string(t.name) + " packs " + std::to_string(a) + " boxes with " +
                 std::to_string(b) + " " + t.item + " in each box and gives away " +
                 std::to_string(c) + " " + t.item + ". How many " + t.item + " does " + t.name +
                 " keep?";
    p.gold = a * b - c;
    const std::string ok = correct_body(a, b, c) + kTrailer;
    const std::string bad = wrong_body(a, b, c);
    const int n = i + 1;
    if (n <= 10) {
      p.attempts = {ok};
      p.expected_attempt = 0;
    } else if (n <= 13) {
      p.attempts = {bad, ok};
      p.expected_attempt = 1;
    } else if (n == 14) {
      p.attempts = {kParse, bad, ok};
      p.expected_attempt = 2;
    } else if (n == 15) {
      p.attempts = {bad, kLoop, kNonNumeric, ok};
      p.expected_attempt = 3;
    } else if (n == 16) {
      p.attempts = {kUnsupported, bad, bad, bad, ok};
      p.expected_attempt = 4;
    } else if (n == 17) {
      p.attempts = {bad, bad, ok};
      p.expected_attempt = 2;
    } else if (n == 18) {
      p.attempts = {bad, bad, bad, bad, bad};
      p.expected_reason = "no_matching_program";
    } else if (n == 19) {
      p.attempts = {bad, bad, bad, bad, kParse};
      p.expected_reason = "parse_error";
    } else {
      p.attempts = {bad, bad, bad, kLoop, kLoop};
      p.expected_reason = "step_limit_exceeded";
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_annotate20_inputs(const fs::path& dir) {
  std::string lines;
  for (const auto& p : annotate20_problems()) {
    lines += json{{"id", p.id},
                  {"question", p.question},
                  {"answer", "The answer is worked out above.\n#### " +
                                 std::to_string(static_cast<long long>(p.gold))}}
                 .dump() +
             "\n";
  }
  write_text(dir / "train.jsonl", lines);
  write_text(dir / "config.ini",
             "[dataset]\n"
             "tag = gsm8k\n"
             "train = train.jsonl\n"
             "\n"
             "[gateway]\n"
             "mode = replay\n"
             "fixtures = fixtures.jsonl\n"
             "\n"
             "[annotator]\n"
             "max_attempts = 5\n"
             "resample_temperature = 0.5\n"
             "max_tokens = 600\n"
             "model = fixture-model\n"
             "\n"
             "[run]\n"
             "dir = run\n"
             "created_at = fixture\n");
}

namespace {

struct Op {
  const char* vocab;
  const char* expr;
  long long (*fn)(long long, long long);
};

const Op kPipelineOps[] = {
    {"A bakery bakes {a} trays of rolls with {b} rolls per tray. How many rolls are baked?",
     "a * b", [](long long a, long long b) { return a * b; }},
    {"A library had {a} books and received {b} more in a donation. How many books does it have?",
     "a + b", [](long long a, long long b) { return a + b; }},
    {"A farmer picked {a} melons and sold {b} at the market. How many melons are left?",
     "a - b", [](long long a, long long b) { return a - b; }},
};

std::string pipeline_body(int op, long long a, long long b) {
  return "    a = " + std::to_string(a) + "\n    b = " + std::to_string(b) + "\n    result = " +
         kPipelineOps[op].expr + "\n    return result\n";
}

std::string fill(const char* tmpl, long long a, long long b) {
  std::string s = tmpl;
  s.replace(s.find("{a}"), 3, std::to_string(a));
  s.replace(s.find("{b}"), 3, std::to_string(b));
  return s;
}

struct PipelineItem {
  std::string id;
  std::string question;
  long long gold;
  std::string body;
  bool train;
  bool script_correct;
};

std::vector<PipelineItem> pipeline_items() {
  std::vector<PipelineItem> items;
  for (int i = 0; i < 12; ++i) {
    const int op = i % 3;
    const long long a = 20 + 3 * i;
    const long long b = 2 + i;
    items.push_back({"train-" + std::to_string(i), fill(kPipelineOps[op].vocab, a, b),
                     kPipelineOps[op].fn(a, b), pipeline_body(op, a, b), true, i != 5});
  }
  for (int i = 0; i < 6; ++i) {
    const int op = i % 3;
    const long long a = 71 + 5 * i;
    const long long b = 9 + i;
    items.push_back({"test-" + std::to_string(i), fill(kPipelineOps[op].vocab, a, b),
                     kPipelineOps[op].fn(a, b), pipeline_body(op, a, b), false, i < 4});
  }
  return items;
}

}  // namespace

void write_pipeline_inputs(const fs::path& dir) {
  std::string train, test;
  for (const auto& it : pipeline_items()) {
    const std::string line =
        json{{"id", it.id}, {"question", it.question}, {"answer", std::to_string(it.gold)}}.dump() +
        "\n";
    (it.train ? train : test) += line;
  }
  write_text(dir / "train.jsonl", train);
  write_text(dir / "test.jsonl", test);
  write_text(dir / "config.ini",
             "[dataset]\n"
             "tag = custom\n"
             "train = train.jsonl\n"
             "test = test.jsonl\n"
             "\n"
             "[gateway]\n"
             "mode = replay\n"
             "fixtures = fixtures.jsonl\n"
             "\n"
             "[annotator]\n"
             "max_attempts = 3\n"
             "model = fixture-model\n"
             "\n"
             "[retrieval]\n"
             "m = 4\n"
             "strategy = all\n"
             "seed = 7\n"
             "embedding_provider = local\n"
             "embedding_model = hashing-v1\n"
             "embedding_dim = 256\n"
             "\n"
             "[eval]\n"
             "split = test\n"
             "model = fixture-model\n"
             "\n"
             "[run]\n"
             "dir = run\n"
             "created_at = fixture\n");
}

void fill_pipeline_script(ScriptedResponder& r) {
  for (const auto& it : pipeline_items()) {
    const std::string wrong = "    result = 0\n    return result\n";
    if (it.train) {
      r.add(it.question, {it.script_correct ? std::vector<std::string>{it.body + kTrailer}
                                            : std::vector<std::string>{wrong, wrong, wrong},
                          {}});
    } else {
      r.add(it.question, {{}, it.script_correct ? it.body + kTrailer : wrong});
    }
  }
}

void fill_annotate20_script(ScriptedResponder& r) {
  for (const auto& p : annotate20_problems()) r.add(p.question, {p.attempts, {}});
}

void generate_fixture(const std::string& which, const fs::path& dir) {
  ScriptedResponder responder;
  if (which == "annotate20") {
    write_annotate20_inputs(dir);
    fill_annotate20_script(responder);
  } else if (which == "pipeline") {
    write_pipeline_inputs(dir);
    fill_pipeline_script(responder);
  } else {
    throw std::invalid_argument("unknown fixture " + which);
  }
  LocalServer server(
      [&responder](const std::string& prompt, double t) { return responder.respond(prompt, t); });
  TempDir scratch;
  std::error_code ec;
  fs::remove(dir / "fixtures.jsonl", ec);
  cli::RunConfig cfg = cli::load_run_config(dir / "config.ini");
  cli::Overrides o;
  o.record = dir / "fixtures.jsonl";
  o.run_dir = scratch.path();
  cli::apply_overrides(cfg, o);
  cfg.gateway.base_url = server.base_url();
  cfg.gateway.backoff_initial_ms = 1;
  std::ostringstream sink;
  cli::cmd_annotate(cfg, sink);
  if (which == "pipeline") {
    cli::cmd_index(cfg, sink);
    cli::cmd_eval(cfg, sink);
  }
}

}  // namespace progshot::testing
