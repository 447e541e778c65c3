#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <stdexcept>

#include "ast.hpp"
#include "builtins.hpp"
#include "fault.hpp"
#include "lexer.hpp"

namespace progshot::interp {

using namespace detail;

namespace {

constexpr int kMaxNesting = 100;

const std::set<std::string, std::less<>> kKeywords = {
    "False", "None",   "True",  "and",    "as",       "assert", "async", "await",
    "break", "class",  "continue", "def", "del",      "elif",   "else",  "except",
    "finally", "for",  "from",  "global", "if",       "import", "in",    "is",
    "lambda", "nonlocal", "not", "or",    "pass",     "raise",  "return", "try",
    "while", "with",   "yield"};

// Keywords whose statements or expressions fall outside the sandboxed subset.
const std::map<std::string, std::string, std::less<>> kUnsupportedKeywords = {
    {"class", "class"},       {"lambda", "lambda"},   {"try", "try/except"},
    {"with", "with"},         {"raise", "raise"},     {"yield", "yield"},
    {"global", "global"},     {"nonlocal", "nonlocal"}, {"del", "del"},
    {"assert", "assert"},     {"async", "async"},     {"await", "await"},
    {"except", "try/except"}, {"finally", "try/except"}};

// Calls that would reach I/O, reflection or dynamic evaluation in the full language.
const std::set<std::string, std::less<>> kEffectfulCalls = {
    "print",   "open",  "input",   "exec",     "eval",    "compile", "__import__",
    "globals", "locals", "vars",   "getattr",  "setattr", "delattr", "exit",
    "quit",    "breakpoint", "help", "memoryview", "dir",  "id",     "hash",
    "type",    "object", "super",  "classmethod", "staticmethod", "property",
    "iter",    "next",  "callable", "isinstance", "issubclass", "hasattr"};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Module parse_module() {
    Module m;
    bool seen_def = false;
    while (true) {
      skip_newlines();
      const Token& t = peek();
      if (t.kind == Tok::end) break;
      if (t.kind == Tok::indent) throw ParseError(t.pos, "unexpected indent");
      if (t.kind == Tok::name) {
        if (auto it = kUnsupportedKeywords.find(t.text); it != kUnsupportedKeywords.end()) {
          throw UnsupportedConstruct(t.pos, it->second);
        }
        if (t.text == "import" || t.text == "from") {
          Stmt s = parse_import(/*in_function=*/false);
          expect_newline();
          m.top_imports.push_back(std::move(s));
          continue;
        }
        if (t.text == "def") {
          if (seen_def) throw UnsupportedConstruct(t.pos, "multiple function definitions");
          seen_def = true;
          parse_function(m);
          continue;
        }
      }
      if (t.kind == Tok::op && t.text == "@") throw UnsupportedConstruct(t.pos, "decorator");
      throw UnsupportedConstruct(t.pos, "top-level code");
    }
    if (!seen_def) throw ParseError(peek().pos, "expected 'def solution():'");
    resolve_names(m);
    return m;
  }

 private:
  struct DepthGuard {
    explicit DepthGuard(Parser& p, SourcePos pos) : p(p) {
      if (++p.depth_ > kMaxNesting) throw ParseError(pos, "too many nested levels");
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(i_ + k, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[i_];
    if (i_ + 1 < toks_.size()) ++i_;
    return t;
  }
  bool is_op(std::string_view op, std::size_t k = 0) const {
    return peek(k).kind == Tok::op && peek(k).text == op;
  }
  bool is_kw(std::string_view kw, std::size_t k = 0) const {
    return peek(k).kind == Tok::name && peek(k).text == kw;
  }
  bool accept_op(std::string_view op) {
    if (!is_op(op)) return false;
    next();
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!is_kw(kw)) return false;
    next();
    return true;
  }
  [[noreturn]] void syntax_error(const Token& t, const std::string& what = "invalid syntax") const {
    if (t.kind == Tok::end) throw ParseError(t.pos, "unexpected EOF while parsing");
    if (t.kind == Tok::indent) throw ParseError(t.pos, "unexpected indent");
    throw ParseError(t.pos, what);
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) syntax_error(peek(), "expected '" + std::string(op) + "'");
  }
  void expect_newline() {
    if (peek().kind == Tok::newline) {
      next();
      return;
    }
    syntax_error(peek());
  }
  void skip_newlines() {
    while (peek().kind == Tok::newline) next();
  }

  void parse_function(Module& m) {
    const Token& def = next();
    const Token& name = next();
    if (name.kind != Tok::name || kKeywords.contains(name.text)) syntax_error(name);
    if (name.text != "solution") {
      throw UnsupportedConstruct(name.pos, "function other than solution", name.text);
    }
    m.function_name = name.text;
    function_name_ = name.text;
    expect_op("(");
    if (!is_op(")")) throw UnsupportedConstruct(peek().pos, "function parameters");
    expect_op(")");
    if (is_op("->")) throw UnsupportedConstruct(peek().pos, "annotation");
    expect_op(":");
    in_function_ = true;
    m.body = parse_suite(def.pos);
    in_function_ = false;
    if (!m.body.empty() && m.body.front().kind == StatementKind::expression &&
        m.body.front().value->kind == Expr::Kind::constant &&
        m.body.front().value->constant.is<std::string>()) {
      m.docstring = m.body.front().value->constant.as<std::string>();
      m.body.erase(m.body.begin());
    }
  }

  std::vector<Stmt> parse_suite(SourcePos header) {
    DepthGuard guard(*this, header);
    std::vector<Stmt> body;
    if (peek().kind != Tok::newline) {
      parse_simple_statements(body);
      return body;
    }
    next();
    if (peek().kind != Tok::indent) syntax_error(peek(), "expected an indented block");
    next();
    while (peek().kind != Tok::dedent && peek().kind != Tok::end) {
      parse_statement(body);
    }
    if (peek().kind == Tok::dedent) next();
    return body;
  }

  void parse_statement(std::vector<Stmt>& out) {
    const Token& t = peek();
    if (t.kind == Tok::indent) syntax_error(t, "unexpected indent");
    if (t.kind == Tok::name) {
      if (auto it = kUnsupportedKeywords.find(t.text); it != kUnsupportedKeywords.end()) {
        throw UnsupportedConstruct(t.pos, it->second);
      }
      if (t.text == "if") {
        out.push_back(parse_if());
        return;
      }
      if (t.text == "while") {
        out.push_back(parse_while());
        return;
      }
      if (t.text == "for") {
        out.push_back(parse_for());
        return;
      }
      if (t.text == "def") throw UnsupportedConstruct(t.pos, "nested function");
      if (t.text == "elif" || t.text == "else") syntax_error(t);
    }
    if (t.kind == Tok::op && t.text == "@") throw UnsupportedConstruct(t.pos, "decorator");
    parse_simple_statements(out);
  }

  void parse_simple_statements(std::vector<Stmt>& out) {
    while (true) {
      out.push_back(parse_small_statement());
      if (!accept_op(";")) break;
      if (peek().kind == Tok::newline) break;
    }
    expect_newline();
  }

  Stmt parse_if() {
    Stmt s;
    s.kind = StatementKind::if_;
    s.pos = next().pos;
    s.value = parse_test();
    expect_op(":");
    s.body = parse_suite(s.pos);
    if (is_kw("elif")) {
      s.orelse.push_back(parse_if());
    } else if (is_kw("else")) {
      const SourcePos p = next().pos;
      expect_op(":");
      s.orelse = parse_suite(p);
    }
    return s;
  }

  Stmt parse_while() {
    Stmt s;
    s.kind = StatementKind::while_;
    s.pos = next().pos;
    s.value = parse_test();
    expect_op(":");
    ++loop_depth_;
    s.body = parse_suite(s.pos);
    --loop_depth_;
    if (is_kw("else")) throw UnsupportedConstruct(peek().pos, "loop else clause");
    return s;
  }

  Stmt parse_for() {
    Stmt s;
    s.kind = StatementKind::for_;
    s.pos = next().pos;
    s.target = parse_target_list();
    mark_target(*s.target);
    if (!accept_kw("in")) syntax_error(peek(), "expected 'in'");
    s.value = parse_testlist();
    expect_op(":");
    ++loop_depth_;
    s.body = parse_suite(s.pos);
    --loop_depth_;
    if (is_kw("else")) throw UnsupportedConstruct(peek().pos, "loop else clause");
    return s;
  }

  // Target list of a for statement: stops before `in`.
  ExprPtr parse_target_list() {
    const SourcePos p = peek().pos;
    std::vector<ExprPtr> items;
    items.push_back(parse_or_expr());
    bool tuple = false;
    while (accept_op(",")) {
      tuple = true;
      if (is_kw("in")) break;
      items.push_back(parse_or_expr());
    }
    if (!tuple) return std::move(items.front());
    auto e = make(Expr::Kind::tuple, p);
    e->children = std::move(items);
    return e;
  }

  Stmt parse_small_statement() {
    const Token& t = peek();
    Stmt s;
    s.pos = t.pos;
    if (t.kind == Tok::name) {
      if (auto it = kUnsupportedKeywords.find(t.text); it != kUnsupportedKeywords.end()) {
        throw UnsupportedConstruct(t.pos, it->second);
      }
      if (t.text == "pass") {
        next();
        s.kind = StatementKind::pass;
        return s;
      }
      if (t.text == "break" || t.text == "continue") {
        next();
        if (loop_depth_ == 0) throw ParseError(t.pos, "'" + t.text + "' outside loop");
        s.kind = t.text == "break" ? StatementKind::break_ : StatementKind::continue_;
        return s;
      }
      if (t.text == "return") {
        next();
        s.kind = StatementKind::return_;
        if (peek().kind != Tok::newline && !is_op(";")) s.value = parse_testlist();
        return s;
      }
      if (t.text == "import" || t.text == "from") return parse_import(in_function_);
    }

    ExprPtr first = parse_testlist();
    if (is_op("=")) {
      s.kind = StatementKind::assignment;
      std::vector<ExprPtr> chain;
      chain.push_back(std::move(first));
      while (accept_op("=")) {
        if (is_kw("yield")) throw UnsupportedConstruct(peek().pos, "yield");
        chain.push_back(parse_testlist());
      }
      s.value = std::move(chain.back());
      chain.pop_back();
      for (auto& target : chain) {
        check_target(*target, /*allow_unpack=*/true);
        mark_target(*target);
      }
      s.targets = std::move(chain);
      return s;
    }
    if (peek().kind == Tok::op) {
      static const std::map<std::string, BinOp, std::less<>> kAug = {
          {"+=", BinOp::add},   {"-=", BinOp::sub},       {"*=", BinOp::mul},
          {"/=", BinOp::div},   {"//=", BinOp::floordiv}, {"%=", BinOp::mod},
          {"**=", BinOp::pow}};
      const std::string& op = peek().text;
      if (auto it = kAug.find(op); it != kAug.end()) {
        next();
        s.kind = StatementKind::augmented_assignment;
        s.aug_op = it->second;
        check_target(*first, /*allow_unpack=*/false);
        mark_target(*first);
        s.target = std::move(first);
        s.value = parse_testlist();
        return s;
      }
      if (op == "&=" || op == "|=" || op == "^=" || op == "<<=" || op == ">>=") {
        throw UnsupportedConstruct(peek().pos, "bitwise operator");
      }
      if (op == "@=") throw UnsupportedConstruct(peek().pos, "matrix multiplication");
      if (op == ":") throw UnsupportedConstruct(peek().pos, "annotation");
    }
    s.kind = StatementKind::expression;
    s.value = std::move(first);
    return s;
  }

  Stmt parse_import(bool in_function) {
    Stmt s;
    s.kind = StatementKind::import;
    s.pos = peek().pos;
    const Scope scope = in_function ? Scope::local : Scope::global;
    if (accept_kw("import")) {
      while (true) {
        const Token& mod = next();
        if (mod.kind != Tok::name) syntax_error(mod);
        std::string dotted = mod.text;
        while (accept_op(".")) dotted += "." + next().text;
        if (dotted != "math") throw UnsupportedConstruct(mod.pos, "import", "import " + dotted);
        std::string alias = mod.text;
        if (accept_kw("as")) alias = expect_identifier();
        s.imports.push_back(bind_import(alias, "", scope));
        module_aliases_.insert(alias);
        if (!accept_op(",")) break;
      }
      return s;
    }
    next();  // from
    const Token& mod = next();
    if (mod.kind != Tok::name) syntax_error(mod);
    std::string dotted = mod.text;
    while (accept_op(".")) dotted += "." + next().text;
    if (dotted != "math") throw UnsupportedConstruct(mod.pos, "import", "from " + dotted);
    if (!accept_kw("import")) syntax_error(peek(), "expected 'import'");
    if (is_op("*")) throw UnsupportedConstruct(peek().pos, "star import");
    const bool paren = accept_op("(");
    while (true) {
      const Token& member = next();
      if (member.kind != Tok::name) syntax_error(member);
      if (!is_math_member(member.text)) {
        throw UnsupportedConstruct(member.pos, "math." + member.text);
      }
      std::string alias = member.text;
      if (accept_kw("as")) alias = expect_identifier();
      s.imports.push_back(bind_import(alias, member.text, scope));
      if (!accept_op(",")) break;
      if (paren && is_op(")")) break;
    }
    if (paren) expect_op(")");
    return s;
  }

  std::string expect_identifier() {
    const Token& t = next();
    if (t.kind != Tok::name || kKeywords.contains(t.text)) syntax_error(t);
    return t.text;
  }

  ImportBinding bind_import(const std::string& name, const std::string& member, Scope scope) {
    ImportBinding b{name, member, scope, -1};
    b.slot = scope == Scope::local ? local_slot(name) : global_slot(name);
    return b;
  }

  int local_slot(const std::string& name) {
    auto [it, inserted] = locals_.try_emplace(name, static_cast<int>(locals_.size()));
    return it->second;
  }
  int global_slot(const std::string& name) {
    auto [it, inserted] = globals_.try_emplace(name, static_cast<int>(globals_.size()));
    return it->second;
  }

  void check_target(const Expr& e, bool allow_unpack) const {
    switch (e.kind) {
      case Expr::Kind::name:
        return;
      case Expr::Kind::subscript:
        return;
      case Expr::Kind::slice:
        throw UnsupportedConstruct(e.pos, "slice assignment");
      case Expr::Kind::attribute:
        throw UnsupportedConstruct(e.pos, "attribute assignment");
      case Expr::Kind::tuple:
      case Expr::Kind::list:
        if (!allow_unpack) throw ParseError(e.pos, "illegal expression for augmented assignment");
        for (const auto& c : e.children) check_target(*c, true);
        return;
      default:
        throw ParseError(e.pos, "cannot assign to expression");
    }
  }

  void mark_target(Expr& e) {
    if (e.kind == Expr::Kind::name) {
      if (e.name == function_name_) throw UnsupportedConstruct(e.pos, "rebinding solution");
      e.scope = Scope::local;
      e.slot = local_slot(e.name);
    } else if (e.kind == Expr::Kind::tuple || e.kind == Expr::Kind::list) {
      for (auto& c : e.children) mark_target(*c);
    } else if (e.kind != Expr::Kind::subscript) {
      check_target(e, true);
    }
  }

  static ExprPtr make(Expr::Kind kind, SourcePos pos) {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->pos = pos;
    return e;
  }

  // testlist: test (',' test)* [','] -> tuple when a comma appears.
  ExprPtr parse_testlist() {
    const SourcePos p = peek().pos;
    ExprPtr first = parse_test();
    if (!is_op(",")) return first;
    auto tuple = make(Expr::Kind::tuple, p);
    tuple->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expression()) break;
      tuple->children.push_back(parse_test());
    }
    return tuple;
  }

  bool starts_expression() const {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::name:
        return !kKeywords.contains(t.text) || t.text == "not" || t.text == "True" ||
               t.text == "False" || t.text == "None" || t.text == "lambda" || t.text == "await" ||
               t.text == "yield";
      case Tok::number:
      case Tok::string:
        return true;
      case Tok::op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
               t.text == "+" || t.text == "~" || t.text == "*" || t.text == "...";
      default:
        return false;
    }
  }

  ExprPtr parse_test() {
    DepthGuard guard(*this, peek().pos);
    if (is_kw("lambda")) throw UnsupportedConstruct(peek().pos, "lambda");
    const SourcePos p = peek().pos;
    ExprPtr body = parse_or_test();
    if (is_op(":=")) throw UnsupportedConstruct(peek().pos, "assignment expression");
    if (!is_kw("if")) return body;
    next();
    ExprPtr cond = parse_or_test();
    if (!accept_kw("else")) syntax_error(peek(), "expected 'else' after 'if' expression");
    ExprPtr orelse = parse_test();
    auto e = make(Expr::Kind::if_exp, p);
    e->children.push_back(std::move(body));
    e->children.push_back(std::move(cond));
    e->children.push_back(std::move(orelse));
    return e;
  }

  ExprPtr parse_or_test() {
    const SourcePos p = peek().pos;
    ExprPtr left = parse_and_test();
    if (!is_kw("or")) return left;
    auto e = make(Expr::Kind::or_, p);
    e->children.push_back(std::move(left));
    while (accept_kw("or")) e->children.push_back(parse_and_test());
    return e;
  }

  ExprPtr parse_and_test() {
    const SourcePos p = peek().pos;
    ExprPtr left = parse_not_test();
    if (!is_kw("and")) return left;
    auto e = make(Expr::Kind::and_, p);
    e->children.push_back(std::move(left));
    while (accept_kw("and")) e->children.push_back(parse_not_test());
    return e;
  }

  ExprPtr parse_not_test() {
    DepthGuard guard(*this, peek().pos);
    if (is_kw("not")) {
      const SourcePos p = next().pos;
      auto e = make(Expr::Kind::unary, p);
      e->unary = UnaryOp::not_;
      e->children.push_back(parse_not_test());
      return e;
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    const SourcePos p = peek().pos;
    ExprPtr left = parse_or_expr();
    std::vector<CmpOp> ops;
    std::vector<ExprPtr> operands;
    while (true) {
      std::optional<CmpOp> op;
      const Token& t = peek();
      if (t.kind == Tok::op) {
        if (t.text == "<") op = CmpOp::lt;
        else if (t.text == "<=") op = CmpOp::le;
        else if (t.text == ">") op = CmpOp::gt;
        else if (t.text == ">=") op = CmpOp::ge;
        else if (t.text == "==") op = CmpOp::eq;
        else if (t.text == "!=") op = CmpOp::ne;
        if (op) next();
      } else if (is_kw("in")) {
        next();
        op = CmpOp::in;
      } else if (is_kw("not") && is_kw("in", 1)) {
        next();
        next();
        op = CmpOp::not_in;
      } else if (is_kw("is")) {
        throw UnsupportedConstruct(t.pos, "is operator");
      }
      if (!op) break;
      ops.push_back(*op);
      operands.push_back(parse_or_expr());
    }
    if (ops.empty()) return left;
    auto e = make(Expr::Kind::compare, p);
    e->cmp_ops = std::move(ops);
    e->children.push_back(std::move(left));
    for (auto& o : operands) e->children.push_back(std::move(o));
    return e;
  }

  // Bitwise levels exist in the grammar only to reject them clearly.
  ExprPtr parse_or_expr() {
    ExprPtr left = parse_arith();
    const Token& t = peek();
    if (t.kind == Tok::op &&
        (t.text == "|" || t.text == "&" || t.text == "^" || t.text == "<<" || t.text == ">>")) {
      throw UnsupportedConstruct(t.pos, "bitwise operator");
    }
    return left;
  }

  ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r, SourcePos p) {
    auto e = make(Expr::Kind::binary, p);
    e->bin = op;
    e->children.push_back(std::move(l));
    e->children.push_back(std::move(r));
    return e;
  }

  ExprPtr parse_arith() {
    ExprPtr left = parse_term();
    while (is_op("+") || is_op("-")) {
      const Token& t = next();
      left = binary(t.text == "+" ? BinOp::add : BinOp::sub, std::move(left), parse_term(), t.pos);
    }
    return left;
  }

  ExprPtr parse_term() {
    ExprPtr left = parse_factor();
    while (true) {
      const Token& t = peek();
      if (t.kind != Tok::op) break;
      BinOp op;
      if (t.text == "*") op = BinOp::mul;
      else if (t.text == "/") op = BinOp::div;
      else if (t.text == "//") op = BinOp::floordiv;
      else if (t.text == "%") op = BinOp::mod;
      else if (t.text == "@") throw UnsupportedConstruct(t.pos, "matrix multiplication");
      else break;
      next();
      left = binary(op, std::move(left), parse_factor(), t.pos);
    }
    return left;
  }

  ExprPtr parse_factor() {
    DepthGuard guard(*this, peek().pos);
    const Token& t = peek();
    if (t.kind == Tok::op && (t.text == "-" || t.text == "+")) {
      next();
      auto e = make(Expr::Kind::unary, t.pos);
      e->unary = t.text == "-" ? UnaryOp::neg : UnaryOp::pos;
      e->children.push_back(parse_factor());
      return e;
    }
    if (t.kind == Tok::op && t.text == "~") throw UnsupportedConstruct(t.pos, "bitwise operator");
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_primary();
    if (is_op("**")) {
      const SourcePos p = next().pos;
      return binary(BinOp::pow, std::move(base), parse_factor(), p);
    }
    return base;
  }

  ExprPtr parse_primary() {
    ExprPtr e = parse_atom();
    while (true) {
      if (is_op("(")) {
        e = parse_call(std::move(e));
      } else if (is_op("[")) {
        e = parse_subscript(std::move(e));
      } else if (is_op(".")) {
        e = parse_attribute(std::move(e));
      } else {
        break;
      }
    }
    return e;
  }

  ExprPtr parse_call(ExprPtr callee) {
    const SourcePos p = next().pos;
    if (callee->kind == Expr::Kind::name) {
      if (kEffectfulCalls.contains(callee->name)) {
        throw UnsupportedConstruct(callee->pos, "call to " + callee->name);
      }
      if (callee->name == function_name_) throw UnsupportedConstruct(callee->pos, "recursion");
    }
    auto call = make(Expr::Kind::call, p);
    call->children.push_back(std::move(callee));
    while (!is_op(")")) {
      if (is_op("*") || is_op("**")) throw UnsupportedConstruct(peek().pos, "star arguments");
      if (peek().kind == Tok::name && is_op("=", 1)) {
        std::string name = next().text;
        next();
        call->keywords.push_back(Keyword{std::move(name), parse_test()});
      } else {
        if (!call->keywords.empty()) {
          syntax_error(peek(), "positional argument follows keyword argument");
        }
        call->children.push_back(parse_test());
        if (is_kw("for")) throw UnsupportedConstruct(peek().pos, "generator expression");
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    return call;
  }

  ExprPtr parse_subscript(ExprPtr object) {
    const SourcePos p = next().pos;
    auto bound = [&]() -> ExprPtr {
      if (is_op(":") || is_op("]")) return nullptr;
      return parse_test();
    };
    ExprPtr lower = bound();
    if (!is_op(":")) {
      if (!lower) syntax_error(peek());
      if (is_op(",")) {
        const SourcePos tp = lower->pos;
        auto tuple = make(Expr::Kind::tuple, tp);
        tuple->children.push_back(std::move(lower));
        while (accept_op(",")) {
          if (is_op("]")) break;
          tuple->children.push_back(parse_test());
        }
        lower = std::move(tuple);
      }
      expect_op("]");
      auto e = make(Expr::Kind::subscript, p);
      e->children.push_back(std::move(object));
      e->children.push_back(std::move(lower));
      return e;
    }
    next();
    ExprPtr upper = bound();
    ExprPtr step;
    if (accept_op(":")) step = bound();
    expect_op("]");
    auto e = make(Expr::Kind::slice, p);
    e->children.push_back(std::move(object));
    e->children.push_back(std::move(lower));
    e->children.push_back(std::move(upper));
    e->children.push_back(std::move(step));
    return e;
  }

  ExprPtr parse_attribute(ExprPtr object) {
    const SourcePos p = next().pos;
    const Token& member = next();
    if (member.kind != Tok::name) syntax_error(member);
    if (object->kind != Expr::Kind::name || !module_aliases_.contains(object->name)) {
      throw UnsupportedConstruct(p, "attribute access", "." + member.text);
    }
    if (!is_math_member(member.text)) {
      throw UnsupportedConstruct(member.pos, "math." + member.text);
    }
    auto e = make(Expr::Kind::attribute, p);
    e->name = member.text;
    e->children.push_back(std::move(object));
    return e;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        next();
        auto e = make(Expr::Kind::constant, t.pos);
        e->constant = parse_number(t);
        return e;
      }
      case Tok::string: {
        auto e = make(Expr::Kind::constant, t.pos);
        std::string text;
        while (peek().kind == Tok::string) text += next().text;
        e->constant = Value(std::move(text));
        return e;
      }
      case Tok::name: {
        if (t.text == "True" || t.text == "False") {
          next();
          auto e = make(Expr::Kind::constant, t.pos);
          e->constant = Value(t.text == "True");
          return e;
        }
        if (t.text == "None") {
          next();
          auto e = make(Expr::Kind::constant, t.pos);
          e->constant = Value(NoneValue{});
          return e;
        }
        if (auto it = kUnsupportedKeywords.find(t.text); it != kUnsupportedKeywords.end()) {
          throw UnsupportedConstruct(t.pos, it->second);
        }
        if (kKeywords.contains(t.text)) syntax_error(t);
        next();
        auto e = make(Expr::Kind::name, t.pos);
        e->name = t.text;
        reads_.push_back(e.get());
        return e;
      }
      case Tok::op:
        if (t.text == "(") return parse_paren();
        if (t.text == "[") return parse_list();
        if (t.text == "{") throw UnsupportedConstruct(t.pos, "dict or set literal");
        if (t.text == "...") throw UnsupportedConstruct(t.pos, "ellipsis");
        if (t.text == "*") throw UnsupportedConstruct(t.pos, "star expression");
        syntax_error(t);
      default:
        syntax_error(t);
    }
  }

  ExprPtr parse_paren() {
    const SourcePos p = next().pos;
    DepthGuard guard(*this, p);
    if (accept_op(")")) return make(Expr::Kind::tuple, p);
    if (is_kw("yield")) throw UnsupportedConstruct(peek().pos, "yield");
    ExprPtr first = parse_test();
    if (is_kw("for")) throw UnsupportedConstruct(peek().pos, "generator expression");
    if (accept_op(")")) return first;
    auto tuple = make(Expr::Kind::tuple, p);
    tuple->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (is_op(")")) break;
      tuple->children.push_back(parse_test());
    }
    expect_op(")");
    return tuple;
  }

  ExprPtr parse_list() {
    const SourcePos p = next().pos;
    DepthGuard guard(*this, p);
    auto list = make(Expr::Kind::list, p);
    while (!is_op("]")) {
      list->children.push_back(parse_test());
      if (is_kw("for")) throw UnsupportedConstruct(peek().pos, "list comprehension");
      if (!accept_op(",")) break;
    }
    expect_op("]");
    return list;
  }

  static Value parse_number(const Token& t) {
    std::string s;
    for (char c : t.text) {
      if (c != '_') s.push_back(c);
    }
    const bool prefixed = s.size() > 2 && s[0] == '0' && std::isalpha(static_cast<unsigned char>(s[1]));
    if (prefixed) {
      const char b = static_cast<char>(std::tolower(s[1]));
      const int base = b == 'x' ? 16 : (b == 'o' ? 8 : 2);
      try {
        return Value(Integer::from_decimal(s.substr(2), base));
      } catch (const std::invalid_argument&) {
        throw ParseError(t.pos, "invalid digit in literal");
      }
    }
    if (s.find_first_of(".eE") != std::string::npos) {
      double d = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
      if (ec == std::errc::result_out_of_range) {
        d = std::strtod(s.c_str(), nullptr);
      } else if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(t.pos, "invalid float literal");
      }
      return Value(d);
    }
    if (s.size() > 1 && s[0] == '0' && s.find_first_not_of('0') != std::string::npos) {
      throw ParseError(t.pos, "leading zeros in decimal integer literals are not permitted");
    }
    if (s.size() > 4000) throw ParseError(t.pos, "integer literal too long");
    try {
      return Value(Integer::from_decimal(s));
    } catch (const RuntimeFault& f) {
      throw ParseError(t.pos, f.message);
    }
  }

  void resolve_names(Module& m) {
    for (Expr* e : reads_) {
      if (e->scope == Scope::local && e->slot >= 0) continue;  // assignment target
      if (auto it = locals_.find(e->name); it != locals_.end()) {
        e->scope = Scope::local;
        e->slot = it->second;
      } else if (auto g = globals_.find(e->name); g != globals_.end()) {
        e->scope = Scope::global;
        e->slot = g->second;
      } else if (auto b = lookup_builtin(e->name)) {
        e->scope = Scope::builtin;
        e->constant = *b;
      } else {
        e->scope = Scope::unknown;
      }
    }
    m.local_count = static_cast<int>(locals_.size());
    m.global_count = static_cast<int>(globals_.size());
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  int depth_ = 0;
  int loop_depth_ = 0;
  bool in_function_ = false;
  std::string function_name_;
  std::map<std::string, int, std::less<>> locals_;
  std::map<std::string, int, std::less<>> globals_;
  std::set<std::string, std::less<>> module_aliases_;
  std::vector<Expr*> reads_;
};

}  // namespace

ParseError::ParseError(SourcePos pos, const std::string& message)
    : std::runtime_error("line " + std::to_string(pos.line) + ", col " + std::to_string(pos.col) +
                         ": " + message),
      pos_(pos),
      message_(message) {}

UnsupportedConstruct::UnsupportedConstruct(SourcePos pos, std::string construct,
                                           const std::string& detail)
    : std::runtime_error("line " + std::to_string(pos.line) + ", col " + std::to_string(pos.col) +
                         ": unsupported construct: " + construct +
                         (detail.empty() ? "" : " (" + detail + ")")),
      pos_(pos),
      construct_(std::move(construct)) {}

ProgramAst::ProgramAst(std::shared_ptr<const Module> module) : module_(std::move(module)) {}

const std::string& ProgramAst::function_name() const { return module_->function_name; }
const std::optional<std::string>& ProgramAst::docstring() const { return module_->docstring; }

std::vector<StatementKind> ProgramAst::body_kinds() const {
  std::vector<StatementKind> kinds;
  for (const auto& s : module_->body) kinds.push_back(s.kind);
  return kinds;
}

ProgramAst parse(std::string_view source) {
  Parser parser(tokenize(source));
  return ProgramAst(std::make_shared<const Module>(parser.parse_module()));
}

}  // namespace progshot::interp
