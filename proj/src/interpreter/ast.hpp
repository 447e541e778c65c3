#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "progshot/interpreter.hpp"
#include "value.hpp"

namespace progshot::interp::detail {

enum class BinOp { add, sub, mul, div, floordiv, mod, pow };
enum class CmpOp { lt, le, gt, ge, eq, ne, in, not_in };
enum class UnaryOp { neg, pos, not_ };

// Where a name resolves once the whole program has been seen.
enum class Scope { local, global, builtin, unknown };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Keyword {
  std::string name;
  ExprPtr value;
};

struct Expr {
  enum class Kind {
    constant,
    name,
    unary,
    binary,
    and_,
    or_,
    compare,
    call,
    list,
    tuple,
    subscript,
    slice,      // children: object, lower?, upper?, step? (nullptr when absent)
    if_exp,     // children: body, test, orelse
    attribute,  // math.<member>; children[0] is the module name
  };

  Kind kind = Kind::constant;
  SourcePos pos;
  Value constant;
  std::string name;  // identifier or attribute member
  Scope scope = Scope::unknown;
  int slot = -1;
  BinOp bin = BinOp::add;
  UnaryOp unary = UnaryOp::neg;
  std::vector<CmpOp> cmp_ops;
  std::vector<ExprPtr> children;
  std::vector<Keyword> keywords;
};

struct Stmt;

struct ImportBinding {
  std::string name;      // bound identifier
  std::string member;    // empty: the module itself
  Scope scope = Scope::local;
  int slot = -1;
};

struct Stmt {
  StatementKind kind = StatementKind::pass;
  SourcePos pos;
  std::vector<ExprPtr> targets;  // assignment: a = b = value
  ExprPtr target;                // for-loop and augmented-assignment target
  ExprPtr value;                 // rhs, expression, return value, condition, iterable
  BinOp aug_op = BinOp::add;
  std::vector<Stmt> body;
  std::vector<Stmt> orelse;  // elif chains nest here
  std::vector<ImportBinding> imports;
};

struct Module {
  std::string function_name;
  std::optional<std::string> docstring;
  std::vector<Stmt> top_imports;
  std::vector<Stmt> body;  // docstring statement excluded
  int local_count = 0;
  int global_count = 0;
};

}  // namespace progshot::interp::detail
