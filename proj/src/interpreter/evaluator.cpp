#include <cmath>

#include "ast.hpp"
#include "builtins.hpp"
#include "fault.hpp"
#include "ops.hpp"

namespace progshot::interp {

using namespace detail;

namespace {

enum class Flow { normal, break_, continue_, return_ };

class Evaluator {
 public:
  Evaluator(const Module& m, std::uint64_t budget)
      : module_(m), meter_(budget), locals_(static_cast<std::size_t>(m.local_count)),
        globals_(static_cast<std::size_t>(m.global_count)) {}

  Value run() {
    for (const auto& s : module_.top_imports) exec(s);
    if (exec_block(module_.body) == Flow::return_) return std::move(result_);
    return Value(NoneValue{});
  }

  std::uint64_t steps() const { return meter_.used(); }

 private:
  Flow exec_block(const std::vector<Stmt>& block) {
    for (const auto& s : block) {
      const Flow f = exec(s);
      if (f != Flow::normal) return f;
    }
    return Flow::normal;
  }

  Flow exec(const Stmt& s) {
    meter_.charge();
    switch (s.kind) {
      case StatementKind::expression:
        eval(*s.value);
        return Flow::normal;
      case StatementKind::assignment: {
        Value v = eval(*s.value);
        for (const auto& t : s.targets) assign(*t, v);
        return Flow::normal;
      }
      case StatementKind::augmented_assignment:
        augmented(s);
        return Flow::normal;
      case StatementKind::return_:
        result_ = s.value ? eval(*s.value) : Value(NoneValue{});
        return Flow::return_;
      case StatementKind::if_:
        if (truthy(eval(*s.value))) return exec_block(s.body);
        return exec_block(s.orelse);
      case StatementKind::while_:
        while (true) {
          meter_.charge();
          if (!truthy(eval(*s.value))) break;
          const Flow f = exec_block(s.body);
          if (f == Flow::break_) break;
          if (f == Flow::return_) return f;
        }
        return Flow::normal;
      case StatementKind::for_:
        return exec_for(s);
      case StatementKind::pass:
        return Flow::normal;
      case StatementKind::break_:
        return Flow::break_;
      case StatementKind::continue_:
        return Flow::continue_;
      case StatementKind::import:
        for (const auto& b : s.imports) {
          Value v = b.member.empty() ? Value(ModuleValue{}) : math_member(b.member);
          (b.scope == Scope::local ? locals_ : globals_)[static_cast<std::size_t>(b.slot)] = std::move(v);
        }
        return Flow::normal;
    }
    return Flow::normal;
  }

  Flow exec_for(const Stmt& s) {
    const Value iterable = eval(*s.value);
    auto body = [&](Value item) -> std::optional<Flow> {
      meter_.charge();
      assign(*s.target, std::move(item));
      const Flow f = exec_block(s.body);
      if (f == Flow::break_) return Flow::normal;
      if (f == Flow::return_) return f;
      return std::nullopt;
    };
    if (const auto* r = iterable.get_if<RangeValue>()) {
      const auto n = r->size();
      for (std::int64_t k = 0; k < n; ++k) {
        if (auto f = body(Value(Integer(r->at(k))))) return *f;
      }
      return Flow::normal;
    }
    if (const auto* seq = iterable.get_if<SequencePtr>()) {
      // Lists are iterated live, so appends during the loop are visited.
      const SequencePtr keep = *seq;
      for (std::size_t k = 0; k < keep->items.size(); ++k) {
        if (auto f = body(keep->items[k])) return *f;
      }
      return Flow::normal;
    }
    for (auto& item : iterate(iterable, meter_)) {
      if (auto f = body(std::move(item))) return *f;
    }
    return Flow::normal;
  }

  void augmented(const Stmt& s) {
    const Expr& t = *s.target;
    if (t.kind == Expr::Kind::name) {
      Value current = load_name(t);
      Value rhs = eval(*s.value);
      meter_.charge();
      assign(t, inplace_op(s.aug_op, current, rhs, meter_));
      return;
    }
    Value object = eval(*t.children[0]);
    Value index = eval(*t.children[1]);
    Value current = subscript(object, index, meter_);
    Value rhs = eval(*s.value);
    meter_.charge();
    store_item(object, index, inplace_op(s.aug_op, current, rhs, meter_));
  }

  void assign(const Expr& target, Value v) {
    switch (target.kind) {
      case Expr::Kind::name:
        locals_[static_cast<std::size_t>(target.slot)] = std::move(v);
        return;
      case Expr::Kind::subscript: {
        Value object = eval(*target.children[0]);
        Value index = eval(*target.children[1]);
        store_item(object, index, std::move(v));
        return;
      }
      case Expr::Kind::tuple:
      case Expr::Kind::list: {
        std::vector<Value> items = iterate(v, meter_);
        if (items.size() != target.children.size()) {
          throw RuntimeFault{items.size() > target.children.size()
                                 ? "ValueError: too many values to unpack (expected " +
                                       std::to_string(target.children.size()) + ")"
                                 : "ValueError: not enough values to unpack (expected " +
                                       std::to_string(target.children.size()) + ", got " +
                                       std::to_string(items.size()) + ")"};
        }
        for (std::size_t k = 0; k < items.size(); ++k) assign(*target.children[k], std::move(items[k]));
        return;
      }
      default:
        throw RuntimeFault{"SyntaxError: cannot assign to expression"};
    }
  }

  Value load_name(const Expr& e) {
    switch (e.scope) {
      case Scope::local: {
        const auto& slot = locals_[static_cast<std::size_t>(e.slot)];
        if (!slot) {
          throw RuntimeFault{"UnboundLocalError: local variable '" + e.name +
                             "' referenced before assignment"};
        }
        return *slot;
      }
      case Scope::global: {
        const auto& slot = globals_[static_cast<std::size_t>(e.slot)];
        if (!slot) throw RuntimeFault{"NameError: name '" + e.name + "' is not defined"};
        return *slot;
      }
      case Scope::builtin:
        return e.constant;
      case Scope::unknown:
        break;
    }
    throw RuntimeFault{"NameError: name '" + e.name + "' is not defined"};
  }

  Value eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::constant:
        return e.constant;
      case Expr::Kind::name:
        return load_name(e);
      case Expr::Kind::unary: {
        Value v = eval(*e.children[0]);
        meter_.charge();
        return unary_op(e.unary, v);
      }
      case Expr::Kind::binary: {
        Value a = eval(*e.children[0]);
        Value b = eval(*e.children[1]);
        meter_.charge();
        return binary_op(e.bin, a, b, meter_);
      }
      case Expr::Kind::and_:
      case Expr::Kind::or_: {
        const bool is_and = e.kind == Expr::Kind::and_;
        Value v = eval(*e.children[0]);
        for (std::size_t k = 1; k < e.children.size(); ++k) {
          meter_.charge();
          if (truthy(v) != is_and) return v;
          v = eval(*e.children[k]);
        }
        return v;
      }
      case Expr::Kind::compare: {
        Value left = eval(*e.children[0]);
        for (std::size_t k = 0; k < e.cmp_ops.size(); ++k) {
          Value right = eval(*e.children[k + 1]);
          meter_.charge();
          if (!compare(e.cmp_ops[k], left, right, meter_)) return Value(false);
          left = std::move(right);
        }
        return Value(true);
      }
      case Expr::Kind::call: {
        Value callee = eval(*e.children[0]);
        std::vector<Value> args;
        args.reserve(e.children.size() - 1);
        for (std::size_t k = 1; k < e.children.size(); ++k) args.push_back(eval(*e.children[k]));
        KeywordArgs kwargs;
        for (const auto& kw : e.keywords) kwargs.emplace_back(kw.name, eval(*kw.value));
        meter_.charge();
        const auto* fn = callee.get_if<Builtin>();
        if (!fn) throw RuntimeFault{"TypeError: '" + type_name(callee) + "' object is not callable"};
        return call_builtin(*fn, std::move(args), kwargs, meter_);
      }
      case Expr::Kind::list:
      case Expr::Kind::tuple: {
        std::vector<Value> items;
        items.reserve(e.children.size());
        for (const auto& c : e.children) items.push_back(eval(*c));
        return Value(make_sequence(std::move(items), e.kind == Expr::Kind::tuple));
      }
      case Expr::Kind::subscript: {
        Value object = eval(*e.children[0]);
        Value index = eval(*e.children[1]);
        meter_.charge();
        return subscript(object, index, meter_);
      }
      case Expr::Kind::slice: {
        Value object = eval(*e.children[0]);
        auto opt = [&](std::size_t k) -> std::optional<Value> {
          if (!e.children[k]) return std::nullopt;
          return eval(*e.children[k]);
        };
        auto lower = opt(1);
        auto upper = opt(2);
        auto step = opt(3);
        meter_.charge();
        return slice(object, lower, upper, step, meter_);
      }
      case Expr::Kind::if_exp:
        if (truthy(eval(*e.children[1]))) return eval(*e.children[0]);
        return eval(*e.children[2]);
      case Expr::Kind::attribute: {
        Value object = eval(*e.children[0]);
        if (!object.is<ModuleValue>()) {
          throw RuntimeFault{"AttributeError: '" + type_name(object) + "' object has no attribute '" +
                             e.name + "'"};
        }
        return math_member(e.name);
      }
    }
    throw RuntimeFault{"SystemError: unknown expression"};
  }

  const Module& module_;
  StepMeter meter_;
  std::vector<std::optional<Value>> locals_;
  std::vector<std::optional<Value>> globals_;
  Value result_;
};

std::optional<double> numeric_result(const Value& v) {
  if (const auto* b = v.get_if<bool>()) return *b ? 1.0 : 0.0;
  if (const auto* i = v.get_if<Integer>()) return i->to_double();
  if (const auto* d = v.get_if<double>()) {
    if (!std::isfinite(*d)) return std::nullopt;
    return *d;
  }
  if (const auto* s = v.get_if<SequencePtr>()) {
    if ((*s)->items.size() == 1) {
      const Value& inner = (*s)->items.front();
      if (inner.is<bool>() || inner.is<Integer>() || inner.is<double>()) return numeric_result(inner);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ExecutionStatus status) {
  switch (status) {
    case ExecutionStatus::ok: return "ok";
    case ExecutionStatus::parse_error: return "parse_error";
    case ExecutionStatus::unsupported_construct: return "unsupported_construct";
    case ExecutionStatus::runtime_error: return "runtime_error";
    case ExecutionStatus::step_limit_exceeded: return "step_limit_exceeded";
    case ExecutionStatus::non_numeric_result: return "non_numeric_result";
  }
  return "runtime_error";
}

std::optional<ExecutionStatus> status_from_string(std::string_view name) {
  for (auto s : {ExecutionStatus::ok, ExecutionStatus::parse_error,
                 ExecutionStatus::unsupported_construct, ExecutionStatus::runtime_error,
                 ExecutionStatus::step_limit_exceeded, ExecutionStatus::non_numeric_result}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

ExecutionOutcome execute(const ProgramAst& ast, std::uint64_t step_budget) {
  ExecutionOutcome out;
  if (step_budget == 0) {
    out.status = ExecutionStatus::step_limit_exceeded;
    out.error_detail = "step budget must be at least 1";
    return out;
  }
  Evaluator ev(ast.module(), step_budget);
  try {
    Value v = ev.run();
    out.steps_used = ev.steps();
    out.value_repr = repr(v);
    if (auto d = numeric_result(v)) {
      out.status = ExecutionStatus::ok;
      out.result = *d;
    } else {
      out.status = ExecutionStatus::non_numeric_result;
      out.error_detail = "solution() returned " + type_name(v) + ": " + out.value_repr;
      if (out.error_detail.size() > 200) out.error_detail.resize(200);
    }
  } catch (const RuntimeFault& f) {
    out.status = ExecutionStatus::runtime_error;
    out.steps_used = ev.steps();
    out.error_detail = f.message;
  } catch (const StepLimitHit&) {
    out.status = ExecutionStatus::step_limit_exceeded;
    out.steps_used = step_budget;
    out.error_detail = "step budget of " + std::to_string(step_budget) + " exhausted";
  } catch (const std::bad_alloc&) {
    out.status = ExecutionStatus::runtime_error;
    out.steps_used = ev.steps();
    out.error_detail = "MemoryError";
  }
  return out;
}

ExecutionOutcome run_program(std::string_view source, std::uint64_t step_budget) {
  try {
    return execute(parse(source), step_budget);
  } catch (const ParseError& e) {
    ExecutionOutcome out;
    out.status = ExecutionStatus::parse_error;
    out.error_detail = e.what();
    return out;
  } catch (const UnsupportedConstruct& e) {
    ExecutionOutcome out;
    out.status = ExecutionStatus::unsupported_construct;
    out.error_detail = e.what();
    return out;
  }
}

std::vector<std::string> builtin_names() {
  return {"abs", "float", "int", "len", "max", "min", "range", "round", "sorted", "sum"};
}

std::vector<std::string> math_names() { return {"ceil", "e", "floor", "pi", "pow", "sqrt"}; }

}  // namespace progshot::interp
