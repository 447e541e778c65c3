#include <CLI11.hpp>

#include <iostream>

#include <progshot/cli.hpp>
#include <progshot/error.hpp>

namespace cli = progshot::cli;

int main(int argc, char** argv) {
  CLI::App app{"Execution-verified program annotation, retrieval prompting and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  cli::Overrides o;
  std::string run_dir, record, replay;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  app.add_option("--config", config_path, "Run configuration file (INI/TOML)");
  auto* run_dir_opt = app.add_option("--run-dir", run_dir, "Run directory");
  auto* seed_opt = app.add_option("--seed", seed, "Random-strategy seed");
  auto* record_opt = app.add_option("--record", record, "Call the http backend and record fixtures to this file");
  auto* replay_opt = app.add_option("--replay", replay, "Serve completions from this fixture file");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  record_opt->excludes(replay_opt);

  auto* annotate = app.add_subcommand("annotate", "Annotate the train split and verify the store");
  auto* verify = app.add_subcommand("verify", "Re-execute every stored program");
  auto* index = app.add_subcommand("index", "Embed stored questions into an index");
  auto* eval = app.add_subcommand("eval", "Predict and score a split");
  std::string strategy, split;
  auto* strategy_opt = eval->add_option("--strategy", strategy, "most_similar, random, least_similar or all");
  auto* split_opt = eval->add_option("--split", split, "test or valid");
  auto* exec = app.add_subcommand("exec", "Run one program and print its outcome as JSON");
  std::string program = "-";
  std::uint64_t budget = progshot::interp::kDefaultStepBudget;
  exec->add_option("program", program, "Program file, or - for stdin");
  exec->add_option("--budget", budget, "Step budget")->check(CLI::PositiveNumber);
  auto* exp = app.add_subcommand("export", "Write the distillation set and dataset card");

  CLI11_PARSE(app, argc, argv);

  try {
    if (exec->parsed()) return cli::cmd_exec(program, std::cout, budget);

    cli::RunConfig cfg;
    if (!config_path.empty()) cfg = cli::load_run_config(config_path);
    if (*run_dir_opt) o.run_dir = run_dir;
    if (*seed_opt) o.seed = seed;
    if (*record_opt) o.record = record;
    if (*replay_opt) o.replay = replay;
    if (*jobs_opt) o.jobs = jobs;
    if (*strategy_opt) o.strategy = strategy;
    if (*split_opt) o.split = split;
    cli::apply_overrides(cfg, o);

    if (annotate->parsed()) return cli::cmd_annotate(cfg, std::cout);
    if (verify->parsed()) return cli::cmd_verify(cfg, std::cout);
    if (index->parsed()) return cli::cmd_index(cfg, std::cout);
    if (eval->parsed()) return cli::cmd_eval(cfg, std::cout);
    if (exp->parsed()) return cli::cmd_export(cfg, std::cout);
  } catch (const progshot::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
