#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <progshot/annotator.hpp>
#include <progshot/corpus.hpp>
#include <progshot/gateway.hpp>

namespace httplib {
class Server;
}

namespace progshot::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Question text of the final docstring in a prompt (the test stub).
std::string stub_question(const std::string& prompt);
// Body lines (after the docstring) of the last exemplar block before the stub.
std::string last_exemplar_body(const std::string& prompt);

// Wraps completion texts into the wire format.
std::string completion_reply(const std::vector<std::string>& texts);

class FnTransport : public Transport {
 public:
  using Fn = std::function<HttpReply(const std::string& path, const std::string& body)>;
  explicit FnTransport(Fn fn) : fn_(std::move(fn)) {}
  HttpReply post(const std::string& path, const std::string& body) override;
  std::uint64_t calls() const { return calls_; }

 private:
  Fn fn_;
  std::atomic<std::uint64_t> calls_{0};
};

// Replies with a function of the prompt for every completion request.
std::shared_ptr<FnTransport> completion_transport(
    std::function<std::string(const std::string& prompt)> fn);

// Replies with the body of the most similar (last) exemplar block.
std::shared_ptr<FnTransport> echo_transport();

// Responses scripted per question. Train questions get attempts[0] at
// temperature 0 and attempts[1..] in order at higher temperatures. Test
// questions always get eval_response.
class ScriptedResponder {
 public:
  struct Entry {
    std::vector<std::string> attempts;
    std::string eval_response;
  };

  void add(const std::string& question, Entry e) { script_[question] = std::move(e); }
  std::string respond(const std::string& prompt, double temperature);

 private:
  std::mutex mu_;
  std::map<std::string, Entry> script_;
  std::map<std::string, std::size_t> sampled_;
};

// Serves /completions from a responder on 127.0.0.1 with an OS-chosen port.
class LocalServer {
 public:
  explicit LocalServer(std::function<std::string(const std::string& prompt, double temperature)> fn);
  ~LocalServer();
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  std::uint64_t hits() const { return hits_; }

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::uint64_t> hits_{0};
};

// The annotation fixture: 20 train problems, 17 of which find a verified
// program within five attempts.
struct FixtureProblem {
  std::string id;
  std::string question;
  double gold = 0.0;
  std::vector<std::string> attempts;
  int expected_attempt = -1;  // -1 when discarded
  std::string expected_reason;
};
std::vector<FixtureProblem> annotate20_problems();

void fill_annotate20_script(ScriptedResponder& r);

// Writes train.jsonl and config.ini for the annotation fixture into dir.
void write_annotate20_inputs(const std::filesystem::path& dir);

// Records fixtures.jsonl for a fixture directory by running the commands
// against a local scripted server. `which` is "annotate20" or "pipeline".
void generate_fixture(const std::string& which, const std::filesystem::path& dir);

// Pipeline fixture: train + test files and a config with strategy "all".
void write_pipeline_inputs(const std::filesystem::path& dir);
void fill_pipeline_script(ScriptedResponder& r);

}  // namespace progshot::testing
