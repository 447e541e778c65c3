#include "builtins.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

#include "fault.hpp"

namespace progshot::interp::detail {

namespace {

const std::map<std::string, Builtin, std::less<>> kBuiltins = {
    {"len", Builtin::len},       {"sum", Builtin::sum},     {"min", Builtin::min},
    {"max", Builtin::max},       {"abs", Builtin::abs},     {"round", Builtin::round},
    {"int", Builtin::int_},      {"float", Builtin::float_}, {"sorted", Builtin::sorted},
    {"range", Builtin::range}};

const std::map<std::string, Builtin, std::less<>> kMathFunctions = {
    {"sqrt", Builtin::math_sqrt},
    {"floor", Builtin::math_floor},
    {"ceil", Builtin::math_ceil},
    {"pow", Builtin::math_pow}};

[[noreturn]] void type_error(const std::string& msg) { throw RuntimeFault{"TypeError: " + msg}; }
[[noreturn]] void value_error(const std::string& msg) { throw RuntimeFault{"ValueError: " + msg}; }

const char* name_of(Builtin fn) {
  for (const auto& [name, id] : kBuiltins) {
    if (id == fn) return name.c_str();
  }
  for (const auto& [name, id] : kMathFunctions) {
    if (id == fn) return name.c_str();
  }
  return "?";
}

void arity(Builtin fn, const std::vector<Value>& args, std::size_t lo, std::size_t hi) {
  if (args.size() >= lo && args.size() <= hi) return;
  std::string expect = lo == hi ? "exactly " + std::to_string(lo)
                                : "from " + std::to_string(lo) + " to " + std::to_string(hi);
  type_error(std::string(name_of(fn)) + "() takes " + expect + " argument(s) (" +
             std::to_string(args.size()) + " given)");
}

std::optional<Value> take_keyword(const KeywordArgs& kwargs, std::string_view name) {
  for (const auto& [k, v] : kwargs) {
    if (k == name) return v;
  }
  return std::nullopt;
}

void allow_keywords(Builtin fn, const KeywordArgs& kwargs, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : kwargs) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      type_error(std::string(name_of(fn)) + "() got an unexpected keyword argument '" + k + "'");
    }
  }
}

Number require_number(Builtin fn, const Value& v) {
  auto n = as_number(v);
  if (!n) {
    type_error(std::string(name_of(fn)) + "() argument must be a real number, not '" +
               type_name(v) + "'");
  }
  return *n;
}

Integer integer_from_float(double d) {
  if (std::isnan(d)) value_error("cannot convert float NaN to integer");
  if (std::isinf(d)) throw RuntimeFault{"OverflowError: cannot convert float infinity to integer"};
  return *Integer::from_double(d);
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\n\r\f\v");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\n\r\f\v");
  return s.substr(b, e - b + 1);
}

Integer parse_int_string(const std::string& raw) {
  const std::string s = strip(raw);
  std::size_t k = 0;
  std::string digits;
  if (k < s.size() && (s[k] == '+' || s[k] == '-')) {
    if (s[k] == '-') digits.push_back('-');
    ++k;
  }
  bool ok = k < s.size();
  bool prev_digit = false;
  for (; k < s.size() && ok; ++k) {
    if (std::isdigit(static_cast<unsigned char>(s[k]))) {
      digits.push_back(s[k]);
      prev_digit = true;
    } else if (s[k] == '_' && prev_digit && k + 1 < s.size() &&
               std::isdigit(static_cast<unsigned char>(s[k + 1]))) {
      prev_digit = false;
    } else {
      ok = false;
    }
  }
  if (!ok || digits.empty() || digits == "-" || digits.size() > 4000) {
    value_error("invalid literal for int() with base 10: '" + raw + "'");
  }
  return Integer::from_decimal(digits);
}

double parse_float_string(const std::string& raw) {
  std::string s = strip(raw);
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::string_view body = lower;
  double sign = 1.0;
  if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
    sign = body[0] == '-' ? -1.0 : 1.0;
    body.remove_prefix(1);
  }
  if (body == "inf" || body == "infinity") return sign * HUGE_VAL;
  if (body == "nan") return std::nan("");
  std::string clean;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] == '_' && k > 0 && k + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[k - 1])) &&
        std::isdigit(static_cast<unsigned char>(s[k + 1]))) {
      continue;
    }
    clean.push_back(s[k]);
  }
  const char* first = clean.data();
  if (!clean.empty() && clean[0] == '+') ++first;
  double d = 0.0;
  auto [ptr, ec] = std::from_chars(first, clean.data() + clean.size(), d);
  if (clean.empty() || ptr != clean.data() + clean.size() ||
      (ec != std::errc() && ec != std::errc::result_out_of_range)) {
    value_error("could not convert string to float: '" + raw + "'");
  }
  if (ec == std::errc::result_out_of_range) d = std::strtod(clean.c_str(), nullptr);
  return d;
}

// Half-even rounding of the exact binary value to `ndigits` decimal places.
double round_float(double x, std::int64_t ndigits) {
  if (ndigits > 323) return x;
  if (ndigits < -308) return 0.0 * x;
  if (x == 0.0 || !std::isfinite(x)) return x;
  std::string text;
  if (ndigits >= 0) {
    char buf[512];
    const int n = std::snprintf(buf, sizeof buf, "%.*f", static_cast<int>(ndigits), x);
    if (n < 0 || n >= static_cast<int>(sizeof buf)) return x;
    text.assign(buf, static_cast<std::size_t>(n));
  } else {
    mpq_class exact;
    mpq_set_d(exact.get_mpq_t(), x);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(-ndigits));
    mpq_class scaled = exact / scale;
    mpz_class q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
    const int c = cmp(mpz_class(r * 2), scaled.get_den());
    if (c > 0 || (c == 0 && mpz_odd_p(q.get_mpz_t()))) q += 1;
    text = q.get_str() + "e" + std::to_string(-ndigits);
  }
  const double y = std::strtod(text.c_str(), nullptr);
  if (std::isinf(y)) throw RuntimeFault{"OverflowError: rounded value too large to represent"};
  return y;
}

Integer round_integer(const Integer& x, std::int64_t ndigits) {
  if (ndigits >= 0) return x;
  if (-ndigits > 5000) return Integer(0);
  const Integer pow10 = Integer::pow(Integer(10), static_cast<std::uint64_t>(-ndigits));
  Integer q = Integer::floordiv(x, pow10);
  const Integer r = Integer::mod(x, pow10);
  const int c = Integer::compare(r + r, pow10);
  if (c > 0 || (c == 0 && !Integer::mod(q, Integer(2)).is_zero())) q = q + Integer(1);
  return q * pow10;
}

Value extremum(Builtin fn, std::vector<Value> args, const KeywordArgs& kwargs, StepMeter& meter) {
  allow_keywords(fn, kwargs, {"default"});
  if (args.empty()) type_error(std::string(name_of(fn)) + " expected at least 1 argument, got 0");
  std::vector<Value> items;
  if (args.size() == 1) {
    items = iterate(args[0], meter);
  } else {
    if (take_keyword(kwargs, "default")) {
      type_error("Cannot specify a default for " + std::string(name_of(fn)) + "() with multiple positional arguments");
    }
    items = std::move(args);
  }
  if (items.empty()) {
    if (auto d = take_keyword(kwargs, "default")) return *d;
    value_error(std::string(name_of(fn)) + "() arg is an empty sequence");
  }
  meter.charge(items.size());
  std::size_t best = 0;
  const bool want_max = fn == Builtin::max;
  for (std::size_t k = 1; k < items.size(); ++k) {
    auto c = order(items[k], items[best], want_max ? ">" : "<", meter);
    if (c && (want_max ? *c > 0 : *c < 0)) best = k;
  }
  return items[best];
}

std::int64_t range_arg(const Value& v) {
  auto n = as_number(v);
  if (!n || !n->is_int) {
    type_error("'" + type_name(v) + "' object cannot be interpreted as an integer");
  }
  auto i = n->i.to_int64();
  constexpr std::int64_t kLimit = std::int64_t{1} << 62;
  if (!i || *i > kLimit || *i < -kLimit) {
    throw RuntimeFault{"OverflowError: range argument too large"};
  }
  return *i;
}

}  // namespace

std::optional<Value> lookup_builtin(std::string_view name) {
  if (auto it = kBuiltins.find(name); it != kBuiltins.end()) return Value(it->second);
  return std::nullopt;
}

bool is_math_member(std::string_view name) {
  return kMathFunctions.contains(name) || name == "pi" || name == "e";
}

Value math_member(std::string_view name) {
  if (name == "pi") return Value(std::numbers::pi);
  if (name == "e") return Value(std::numbers::e);
  return Value(kMathFunctions.find(name)->second);
}

Value call_builtin(Builtin fn, std::vector<Value> args, const KeywordArgs& kwargs,
                   StepMeter& meter) {
  switch (fn) {
    case Builtin::len: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 1, 1);
      const Value& v = args[0];
      if (const auto* s = v.get_if<SequencePtr>()) return Value(Integer(static_cast<std::int64_t>((*s)->items.size())));
      if (const auto* s = v.get_if<std::string>()) return Value(Integer(static_cast<std::int64_t>(utf8_chars(*s).size())));
      if (const auto* r = v.get_if<RangeValue>()) return Value(Integer(r->size()));
      type_error("object of type '" + type_name(v) + "' has no len()");
    }
    case Builtin::sum: {
      allow_keywords(fn, kwargs, {"start"});
      arity(fn, args, 1, 2);
      Value acc = args.size() == 2 ? args[1] : take_keyword(kwargs, "start").value_or(Value(Integer(0)));
      if (acc.is<std::string>()) type_error("sum() can't sum strings [use ''.join(seq) instead]");
      for (const auto& item : iterate(args[0], meter)) {
        meter.charge();
        acc = binary_op(BinOp::add, acc, item, meter);
      }
      return acc;
    }
    case Builtin::min:
    case Builtin::max:
      return extremum(fn, std::move(args), kwargs, meter);
    case Builtin::abs: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 1, 1);
      auto n = as_number(args[0]);
      if (!n) type_error("bad operand type for abs(): '" + type_name(args[0]) + "'");
      return n->is_int ? Value(n->i.abs()) : Value(std::fabs(n->f));
    }
    case Builtin::round: {
      allow_keywords(fn, kwargs, {"ndigits"});
      arity(fn, args, 1, 2);
      std::optional<Value> nd = args.size() == 2 ? std::optional<Value>(args[1]) : take_keyword(kwargs, "ndigits");
      auto n = as_number(args[0]);
      if (!n) type_error("type " + type_name(args[0]) + " doesn't define __round__ method");
      if (!nd || nd->is<NoneValue>()) {
        if (n->is_int) return Value(n->i);
        double r = std::round(n->f);
        if (std::fabs(n->f - r) == 0.5) r = 2.0 * std::round(n->f / 2.0);
        return Value(integer_from_float(r));
      }
      auto digits = as_number(*nd);
      if (!digits || !digits->is_int) {
        type_error("'" + type_name(*nd) + "' object cannot be interpreted as an integer");
      }
      const std::int64_t k = digits->i.to_int64().value_or(digits->i.sign() < 0 ? -100000 : 100000);
      if (n->is_int) return Value(round_integer(n->i, k));
      return Value(round_float(n->f, k));
    }
    case Builtin::int_: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 0, 1);
      if (args.empty()) return Value(Integer(0));
      const Value& v = args[0];
      if (const auto* s = v.get_if<std::string>()) return Value(parse_int_string(*s));
      auto n = as_number(v);
      if (!n) type_error("int() argument must be a string or a real number, not '" + type_name(v) + "'");
      return n->is_int ? Value(n->i) : Value(integer_from_float(n->f));
    }
    case Builtin::float_: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 0, 1);
      if (args.empty()) return Value(0.0);
      const Value& v = args[0];
      if (const auto* s = v.get_if<std::string>()) return Value(parse_float_string(*s));
      auto n = as_number(v);
      if (!n) type_error("float() argument must be a string or a real number, not '" + type_name(v) + "'");
      return Value(to_float(*n));
    }
    case Builtin::sorted: {
      allow_keywords(fn, kwargs, {"reverse"});
      arity(fn, args, 1, 1);
      std::vector<Value> items = iterate(args[0], meter);
      const bool reverse = truthy(take_keyword(kwargs, "reverse").value_or(Value(false)));
      const auto n = items.size();
      meter.charge(n * (static_cast<std::uint64_t>(std::log2(static_cast<double>(n) + 1)) + 1));
      std::stable_sort(items.begin(), items.end(), [&](const Value& a, const Value& b) {
        auto c = reverse ? order(b, a, "<", meter) : order(a, b, "<", meter);
        return c && *c < 0;
      });
      return Value(make_sequence(std::move(items), false));
    }
    case Builtin::range: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 1, 3);
      RangeValue r;
      if (args.size() == 1) {
        r.stop = range_arg(args[0]);
      } else {
        r.start = range_arg(args[0]);
        r.stop = range_arg(args[1]);
        if (args.size() == 3) r.step = range_arg(args[2]);
      }
      if (r.step == 0) value_error("range() arg 3 must not be zero");
      return Value(r);
    }
    case Builtin::math_sqrt: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 1, 1);
      const double x = to_float(require_number(fn, args[0]));
      if (x < 0) value_error("math domain error");
      return Value(std::sqrt(x));
    }
    case Builtin::math_floor:
    case Builtin::math_ceil: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 1, 1);
      const Number n = require_number(fn, args[0]);
      if (n.is_int) return Value(n.i);
      return Value(integer_from_float(fn == Builtin::math_floor ? std::floor(n.f) : std::ceil(n.f)));
    }
    case Builtin::math_pow: {
      allow_keywords(fn, kwargs, {});
      arity(fn, args, 2, 2);
      const double a = to_float(require_number(fn, args[0]));
      const double b = to_float(require_number(fn, args[1]));
      const double r = std::pow(a, b);
      if (std::isnan(r) && !std::isnan(a) && !std::isnan(b)) value_error("math domain error");
      if (std::isinf(r) && std::isfinite(a) && std::isfinite(b)) {
        if (a == 0.0) value_error("math domain error");
        throw RuntimeFault{"OverflowError: math range error"};
      }
      return Value(r);
    }
  }
  type_error("unknown builtin");
}

}  // namespace progshot::interp::detail
