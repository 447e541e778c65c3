#pragma once

// Sandboxed evaluator for PAL-style `def solution():` programs.
//
// Programs use a restricted, Python-compatible surface syntax: one zero-arg
// function, assignments, arithmetic, comparisons, if/elif/else, for/while,
// list/tuple literals, a handful of builtins and the `math` namespace
// (sqrt, floor, ceil, pow, pi, e). Nothing effectful is reachable.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace progshot::interp {

inline constexpr std::uint64_t kDefaultStepBudget = 100'000;

enum class ExecutionStatus {
  ok,
  parse_error,
  unsupported_construct,
  runtime_error,
  step_limit_exceeded,
  non_numeric_result,
};

std::string_view to_string(ExecutionStatus status);
std::optional<ExecutionStatus> status_from_string(std::string_view name);

struct ExecutionOutcome {
  ExecutionStatus status = ExecutionStatus::runtime_error;
  std::optional<double> result;  // present iff status == ok
  std::uint64_t steps_used = 0;
  std::string error_detail;
  // Python-style repr of the returned value (empty when nothing was returned).
  // Integers are exact, which lets callers check results beyond 2^53.
  std::string value_repr;

  bool ok() const { return status == ExecutionStatus::ok; }
  friend bool operator==(const ExecutionOutcome&, const ExecutionOutcome&) = default;
};

struct SourcePos {
  int line = 0;
  int col = 0;
};

/// Thrown by parse() for syntax errors.
class ParseError : public std::runtime_error {
 public:
  ParseError(SourcePos pos, const std::string& message);
  SourcePos pos() const { return pos_; }
  const std::string& message() const { return message_; }

 private:
  SourcePos pos_;
  std::string message_;
};

/// Thrown by parse() for syntax outside the sandboxed subset.
class UnsupportedConstruct : public std::runtime_error {
 public:
  UnsupportedConstruct(SourcePos pos, std::string construct, const std::string& detail = {});
  SourcePos pos() const { return pos_; }
  const std::string& construct() const { return construct_; }

 private:
  SourcePos pos_;
  std::string construct_;
};

enum class StatementKind {
  expression,
  assignment,
  augmented_assignment,
  return_,
  if_,
  for_,
  while_,
  pass,
  break_,
  continue_,
  import,
};

namespace detail {
struct Module;
}

/// Parsed program. Immutable and cheap to copy; safe to execute from many threads.
class ProgramAst {
 public:
  const std::string& function_name() const;
  const std::optional<std::string>& docstring() const;
  /// Kinds of the function-body statements, docstring excluded.
  std::vector<StatementKind> body_kinds() const;

  const detail::Module& module() const { return *module_; }

 private:
  friend ProgramAst parse(std::string_view source);
  explicit ProgramAst(std::shared_ptr<const detail::Module> module);
  std::shared_ptr<const detail::Module> module_;
};

/// Parses a full program. Throws ParseError or UnsupportedConstruct.
ProgramAst parse(std::string_view source);

/// Calls solution() under a step budget. Never throws; every failure is a status.
ExecutionOutcome execute(const ProgramAst& ast, std::uint64_t step_budget = kDefaultStepBudget);

/// parse + execute, with parse failures folded into the outcome.
ExecutionOutcome run_program(std::string_view source,
                             std::uint64_t step_budget = kDefaultStepBudget);

/// Names callable or readable from a program without an import.
std::vector<std::string> builtin_names();
/// Members reachable through `import math`.
std::vector<std::string> math_names();

}  // namespace progshot::interp
