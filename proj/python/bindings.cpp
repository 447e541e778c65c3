#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include <progshot/annotator.hpp>
#include <progshot/cli.hpp>
#include <progshot/corpus.hpp>
#include <progshot/error.hpp>
#include <progshot/evaluation.hpp>
#include <progshot/interpreter.hpp>
#include <progshot/prompting.hpp>
#include <progshot/retrieval.hpp>

namespace py = pybind11;
using namespace progshot;

namespace {

py::dict outcome_dict(const interp::ExecutionOutcome& o) {
  py::dict d;
  d["status"] = std::string(interp::to_string(o.status));
  d["result"] = o.result ? py::cast(*o.result) : py::none();
  d["steps_used"] = o.steps_used;
  d["error_detail"] = o.error_detail;
  d["value_repr"] = o.value_repr;
  return d;
}

py::dict problem_dict(const Problem& p) {
  py::dict d;
  d["id"] = p.id;
  d["question"] = p.question;
  d["gold_answer"] = p.gold_answer;
  d["dataset"] = std::string(to_string(p.dataset));
  d["split"] = std::string(to_string(p.split));
  return d;
}

using Command = int (*)(const cli::RunConfig&, std::ostream&);

py::tuple run_command(Command fn, const std::filesystem::path& config,
                      std::optional<std::filesystem::path> run_dir,
                      std::optional<std::filesystem::path> replay) {
  cli::RunConfig cfg = cli::load_run_config(config);
  cli::Overrides o;
  o.run_dir = std::move(run_dir);
  o.replay = std::move(replay);
  cli::apply_overrides(cfg, o);
  std::ostringstream out;
  int code;
  {
    py::gil_scoped_release release;
    code = fn(cfg, out);
  }
  return py::make_tuple(code, out.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of progshot";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.attr("DEFAULT_STEP_BUDGET") = interp::kDefaultStepBudget;

  m.def(
      "run_program",
      [](const std::string& source, std::uint64_t budget) {
        interp::ExecutionOutcome o;
        {
          py::gil_scoped_release release;
          o = interp::run_program(source, budget);
        }
        return outcome_dict(o);
      },
      py::arg("source"), py::arg("step_budget") = interp::kDefaultStepBudget);
  m.def("builtin_names", &interp::builtin_names);
  m.def("math_names", &interp::math_names);

  m.def("parse_gold_answer", &parse_gold_answer, py::arg("raw"));
  m.def("answers_match", &answers_match, py::arg("pred"), py::arg("gold"));
  m.def(
      "load_corpus",
      [](const std::filesystem::path& path, const std::string& dataset,
         std::optional<std::string> split) {
        LoadOptions opt;
        if (split) opt.split = split_from_string(*split);
        const Corpus c = load_corpus(path, dataset_from_string(dataset), opt);
        py::list problems;
        for (const auto& p : c.problems()) problems.append(problem_dict(p));
        py::list skipped;
        for (const auto& s : c.skipped()) skipped.append(py::make_tuple(s.line, s.reason));
        return py::make_tuple(problems, skipped);
      },
      py::arg("path"), py::arg("dataset"), py::arg("split") = py::none());

  m.def(
      "embed",
      [](const std::string& text, std::size_t dim) { return HashingEmbedder(dim).embed(text); },
      py::arg("text"), py::arg("dim") = 384);
  m.def(
      "cosine",
      [](const std::vector<float>& u, const std::vector<float>& v) { return cosine(u, v); },
      py::arg("u"), py::arg("v"));

  py::class_<VectorIndex>(m, "VectorIndex")
      .def(py::init([](std::size_t dim) { return VectorIndex(EmbeddingSpec{}, dim); }),
           py::arg("dim"))
      .def("add", [](VectorIndex& idx, std::string id,
                     const std::vector<float>& v) { idx.add(std::move(id), v); })
      .def("__len__", &VectorIndex::size)
      .def_property_readonly("dim", &VectorIndex::dim)
      .def("save", &VectorIndex::save)
      .def_static("load", &VectorIndex::load)
      .def(
          "retrieve",
          [](const VectorIndex& idx, const std::vector<float>& query, std::size_t M,
             const std::string& strategy, std::uint64_t seed, const std::string& query_id) {
            RetrievalConfig cfg;
            cfg.M = M;
            cfg.strategy = strategy_from_string(strategy);
            cfg.random_seed = seed;
            std::vector<std::pair<std::string, double>> out;
            for (const auto& e : retrieve(idx, query, cfg, query_id)) {
              out.emplace_back(e.problem_id, e.score);
            }
            return out;
          },
          py::arg("query"), py::arg("M") = 8, py::arg("strategy") = "most_similar",
          py::arg("seed") = 0, py::arg("query_id") = "");

  m.def("render_stub", &render_stub, py::arg("question"));
  m.def("default_stop_sequences", &default_stop_sequences);
  m.def("truncate_at_stop", &truncate_at_stop, py::arg("completion"), py::arg("stops"));
  m.def("normalize_indentation", &normalize_indentation, py::arg("program"));
  m.def("jaccard", &jaccard, py::arg("a"), py::arg("b"));

  for (const auto& [name, fn] : std::initializer_list<std::pair<const char*, Command>>{
           {"annotate", &cli::cmd_annotate},
           {"verify", &cli::cmd_verify},
           {"index", &cli::cmd_index},
           {"evaluate", &cli::cmd_eval},
           {"export", &cli::cmd_export}}) {
    m.def(
        name,
        [fn](const std::filesystem::path& config, std::optional<std::filesystem::path> run_dir,
             std::optional<std::filesystem::path> replay) {
          return run_command(fn, config, std::move(run_dir), std::move(replay));
        },
        py::arg("config"), py::arg("run_dir") = py::none(), py::arg("replay") = py::none());
  }
}
