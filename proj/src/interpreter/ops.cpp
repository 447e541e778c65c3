#include "ops.hpp"

#include <cmath>
#include <limits>

#include "fault.hpp"

namespace progshot::interp::detail {

namespace {

constexpr int kMaxValueDepth = 64;

[[noreturn]] void type_error(const std::string& msg) { throw RuntimeFault{"TypeError: " + msg}; }
[[noreturn]] void zero_division(const std::string& msg) {
  throw RuntimeFault{"ZeroDivisionError: " + msg};
}

const char* op_symbol(BinOp op) {
  switch (op) {
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul: return "*";
    case BinOp::div: return "/";
    case BinOp::floordiv: return "//";
    case BinOp::mod: return "%";
    case BinOp::pow: return "**";
  }
  return "?";
}

[[noreturn]] void unsupported_operands(BinOp op, const Value& a, const Value& b) {
  type_error(std::string("unsupported operand type(s) for ") + op_symbol(op) + ": '" +
             type_name(a) + "' and '" + type_name(b) + "'");
}

bool is_odd_integer(double w) { return std::fmod(std::fabs(w), 2.0) == 1.0; }

double float_pow(double iv, double iw) {
  if (iw == 0.0) return 1.0;
  if (std::isnan(iv)) return iv;
  if (std::isnan(iw)) return iv == 1.0 ? 1.0 : iw;
  if (std::isinf(iw)) {
    const double a = std::fabs(iv);
    if (a == 1.0) return 1.0;
    return ((iw > 0) == (a > 1.0)) ? std::fabs(iw) : 0.0;
  }
  const bool odd = is_odd_integer(iw);
  if (std::isinf(iv)) {
    if (iv > 0) return iw > 0 ? iv : 0.0;
    return iw > 0 ? (odd ? iv : -iv) : (odd ? -0.0 : 0.0);
  }
  if (iv == 0.0) {
    if (iw < 0.0) zero_division("0.0 cannot be raised to a negative power");
    return odd ? iv : 0.0;
  }
  bool negate = false;
  if (iv < 0.0) {
    if (iw != std::floor(iw)) {
      throw RuntimeFault{"ValueError: negative number cannot be raised to a fractional power"};
    }
    negate = odd;
    iv = -iv;
  }
  if (iv == 1.0) return negate ? -1.0 : 1.0;
  const double r = std::pow(iv, iw);
  if (std::isinf(r)) throw RuntimeFault{"OverflowError: (34, 'Numerical result out of range')"};
  return negate ? -r : r;
}

double float_floordiv(double vx, double wx, double* mod_out) {
  if (wx == 0.0) zero_division("float floor division by zero");
  double mod = std::fmod(vx, wx);
  double div = (vx - mod) / wx;
  if (mod != 0.0) {
    if ((wx < 0) != (mod < 0)) {
      mod += wx;
      div -= 1.0;
    }
  } else {
    mod = std::copysign(0.0, wx);
  }
  double floordiv;
  if (div != 0.0) {
    floordiv = std::floor(div);
    if (div - floordiv > 0.5) floordiv += 1.0;
  } else {
    floordiv = std::copysign(0.0, vx / wx);
  }
  if (mod_out) *mod_out = mod;
  return floordiv;
}

Value numeric_op(BinOp op, const Number& x, const Number& y) {
  if (x.is_int && y.is_int) {
    switch (op) {
      case BinOp::add: return Value(x.i + y.i);
      case BinOp::sub: return Value(x.i - y.i);
      case BinOp::mul: return Value(x.i * y.i);
      case BinOp::div: {
        if (y.i.is_zero()) zero_division("division by zero");
        auto q = Integer::true_divide(x.i, y.i);
        if (!q) throw RuntimeFault{"OverflowError: integer division result too large for a float"};
        return Value(*q);
      }
      case BinOp::floordiv:
        if (y.i.is_zero()) zero_division("integer division or modulo by zero");
        return Value(Integer::floordiv(x.i, y.i));
      case BinOp::mod:
        if (y.i.is_zero()) zero_division("integer division or modulo by zero");
        return Value(Integer::mod(x.i, y.i));
      case BinOp::pow: {
        if (y.i.sign() >= 0) {
          const auto e = y.i.to_int64();
          if (!e) {
            if (x.i.is_small() && x.i.small() >= -1 && x.i.small() <= 1) {
              return Value(Integer::pow(x.i, Integer::mod(y.i, Integer(2)).small() + 2));
            }
            throw RuntimeFault{"OverflowError: integer result too large"};
          }
          return Value(Integer::pow(x.i, static_cast<std::uint64_t>(*e)));
        }
        return Value(float_pow(to_float(x), to_float(y)));
      }
    }
  }
  const double a = to_float(x);
  const double b = to_float(y);
  switch (op) {
    case BinOp::add: return Value(a + b);
    case BinOp::sub: return Value(a - b);
    case BinOp::mul: return Value(a * b);
    case BinOp::div:
      if (b == 0.0) zero_division("float division by zero");
      return Value(a / b);
    case BinOp::floordiv: return Value(float_floordiv(a, b, nullptr));
    case BinOp::mod: {
      if (b == 0.0) zero_division("float modulo");
      double m = 0.0;
      float_floordiv(a, b, &m);
      return Value(m);
    }
    case BinOp::pow: return Value(float_pow(a, b));
  }
  return Value(NoneValue{});
}

std::int64_t repeat_count(const Number& n) {
  if (!n.is_int) type_error("can't multiply sequence by non-int of type 'float'");
  auto c = n.i.to_int64();
  if (!c) throw RuntimeFault{"OverflowError: cannot fit 'int' into an index-sized integer"};
  return *c < 0 ? 0 : *c;
}

Value repeat(const Value& seq, std::int64_t count, StepMeter& meter) {
  if (const auto* s = seq.get_if<std::string>()) {
    meter.charge(static_cast<std::uint64_t>(count) * s->size() / 8 + 1);
    std::string out;
    out.reserve(s->size() * static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) out += *s;
    return Value(std::move(out));
  }
  const auto& src = seq.as<SequencePtr>();
  meter.charge(static_cast<std::uint64_t>(count) * src->items.size() + 1);
  std::vector<Value> items;
  items.reserve(src->items.size() * static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    items.insert(items.end(), src->items.begin(), src->items.end());
  }
  return Value(make_sequence(std::move(items), src->is_tuple));
}

std::int64_t normalize_index(const Value& index, std::int64_t size, const char* what) {
  auto n = as_number(index);
  if (!n || !n->is_int) {
    type_error(std::string(what) + " indices must be integers, not '" + type_name(index) + "'");
  }
  auto i = n->i.to_int64();
  if (!i) throw RuntimeFault{"IndexError: cannot fit 'int' into an index-sized integer"};
  std::int64_t k = *i < 0 ? *i + size : *i;
  if (k < 0 || k >= size) throw RuntimeFault{std::string("IndexError: ") + what + " index out of range"};
  return k;
}

}  // namespace

std::optional<Number> as_number(const Value& v) {
  if (const auto* i = v.get_if<Integer>()) return Number{true, *i, 0.0};
  if (const auto* b = v.get_if<bool>()) return Number{true, Integer(*b ? 1 : 0), 0.0};
  if (const auto* d = v.get_if<double>()) return Number{false, Integer(), *d};
  return std::nullopt;
}

double to_float(const Integer& i) {
  auto d = i.to_double();
  if (!d) throw RuntimeFault{"OverflowError: int too large to convert to float"};
  return *d;
}

double to_float(const Number& n) { return n.is_int ? to_float(n.i) : n.f; }

Value binary_op(BinOp op, const Value& a, const Value& b, StepMeter& meter) {
  const auto x = as_number(a);
  const auto y = as_number(b);
  if (x && y) return numeric_op(op, *x, *y);

  if (op == BinOp::add) {
    if (a.is<std::string>() && b.is<std::string>()) {
      meter.charge((a.as<std::string>().size() + b.as<std::string>().size()) / 8 + 1);
      return Value(a.as<std::string>() + b.as<std::string>());
    }
    const auto* sa = a.get_if<SequencePtr>();
    const auto* sb = b.get_if<SequencePtr>();
    if (sa && sb && (*sa)->is_tuple == (*sb)->is_tuple) {
      meter.charge((*sa)->items.size() + (*sb)->items.size() + 1);
      std::vector<Value> items = (*sa)->items;
      items.insert(items.end(), (*sb)->items.begin(), (*sb)->items.end());
      return Value(make_sequence(std::move(items), (*sa)->is_tuple));
    }
  }
  if (op == BinOp::mul) {
    const bool a_seq = a.is<std::string>() || a.is<SequencePtr>();
    const bool b_seq = b.is<std::string>() || b.is<SequencePtr>();
    if (a_seq && y) return repeat(a, repeat_count(*y), meter);
    if (b_seq && x) return repeat(b, repeat_count(*x), meter);
  }
  if (op == BinOp::mod && a.is<std::string>()) {
    type_error("string formatting is not supported");
  }
  unsupported_operands(op, a, b);
}

Value inplace_op(BinOp op, const Value& a, const Value& b, StepMeter& meter) {
  if (op == BinOp::add) {
    if (const auto* sa = a.get_if<SequencePtr>(); sa && !(*sa)->is_tuple) {
      if (!b.is<SequencePtr>() && !b.is<std::string>() && !b.is<RangeValue>()) {
        type_error("'" + type_name(b) + "' object is not iterable");
      }
      std::vector<Value> extra = iterate(b, meter);
      meter.charge(extra.size() + 1);
      (*sa)->items.insert((*sa)->items.end(), extra.begin(), extra.end());
      return a;
    }
  }
  if (op == BinOp::mul) {
    if (const auto* sa = a.get_if<SequencePtr>(); sa && !(*sa)->is_tuple) {
      auto n = as_number(b);
      if (!n) unsupported_operands(op, a, b);
      Value repeated = repeat(a, repeat_count(*n), meter);
      (*sa)->items = repeated.as<SequencePtr>()->items;
      return a;
    }
  }
  return binary_op(op, a, b, meter);
}

Value unary_op(UnaryOp op, const Value& v) {
  if (op == UnaryOp::not_) return Value(!truthy(v));
  auto n = as_number(v);
  if (!n) {
    type_error(std::string("bad operand type for unary ") + (op == UnaryOp::neg ? "-" : "+") +
               ": '" + type_name(v) + "'");
  }
  if (op == UnaryOp::pos) return n->is_int ? Value(n->i) : Value(n->f);
  return n->is_int ? Value(-n->i) : Value(-n->f);
}

bool values_equal(const Value& a, const Value& b, StepMeter& meter, int depth) {
  if (depth > kMaxValueDepth) throw RuntimeFault{"RecursionError: maximum recursion depth exceeded in comparison"};
  const auto x = as_number(a);
  const auto y = as_number(b);
  if (x && y) {
    if (x->is_int && y->is_int) return x->i == y->i;
    if (!x->is_int && !y->is_int) return x->f == y->f;
    const double f = x->is_int ? y->f : x->f;
    const Integer& i = x->is_int ? x->i : y->i;
    if (!std::isfinite(f)) return false;
    return Integer::compare(i, f) == 0;
  }
  if (a.is<std::string>() && b.is<std::string>()) return a.as<std::string>() == b.as<std::string>();
  if (a.is<SequencePtr>() && b.is<SequencePtr>()) {
    const auto& sa = a.as<SequencePtr>();
    const auto& sb = b.as<SequencePtr>();
    if (sa->is_tuple != sb->is_tuple) return false;
    if (sa == sb) return true;
    if (sa->items.size() != sb->items.size()) return false;
    meter.charge(sa->items.size());
    for (std::size_t k = 0; k < sa->items.size(); ++k) {
      if (!values_equal(sa->items[k], sb->items[k], meter, depth + 1)) return false;
    }
    return true;
  }
  if (a.is<RangeValue>() && b.is<RangeValue>()) {
    const auto& ra = a.as<RangeValue>();
    const auto& rb = b.as<RangeValue>();
    const auto n = ra.size();
    if (n != rb.size()) return false;
    if (n == 0) return true;
    if (ra.start != rb.start) return false;
    return n == 1 || ra.step == rb.step;
  }
  if (a.is<NoneValue>() && b.is<NoneValue>()) return true;
  if (a.is<ModuleValue>() && b.is<ModuleValue>()) return true;
  if (a.is<Builtin>() && b.is<Builtin>()) return a.as<Builtin>() == b.as<Builtin>();
  return false;
}

std::optional<int> order(const Value& a, const Value& b, const char* op, StepMeter& meter,
                         int depth) {
  if (depth > kMaxValueDepth) throw RuntimeFault{"RecursionError: maximum recursion depth exceeded in comparison"};
  const auto x = as_number(a);
  const auto y = as_number(b);
  if (x && y) {
    if (x->is_int && y->is_int) return Integer::compare(x->i, y->i);
    if (!x->is_int && !y->is_int) {
      if (std::isnan(x->f) || std::isnan(y->f)) return std::nullopt;
      return (x->f > y->f) - (x->f < y->f);
    }
    if (x->is_int) {
      if (std::isnan(y->f)) return std::nullopt;
      if (std::isinf(y->f)) return y->f > 0 ? -1 : 1;
      return Integer::compare(x->i, y->f);
    }
    if (std::isnan(x->f)) return std::nullopt;
    if (std::isinf(x->f)) return x->f > 0 ? 1 : -1;
    return -Integer::compare(y->i, x->f);
  }
  if (a.is<std::string>() && b.is<std::string>()) {
    const int c = a.as<std::string>().compare(b.as<std::string>());
    return (c > 0) - (c < 0);
  }
  if (a.is<SequencePtr>() && b.is<SequencePtr>() &&
      a.as<SequencePtr>()->is_tuple == b.as<SequencePtr>()->is_tuple) {
    const auto& sa = a.as<SequencePtr>()->items;
    const auto& sb = b.as<SequencePtr>()->items;
    const std::size_t n = std::min(sa.size(), sb.size());
    meter.charge(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
      if (!values_equal(sa[k], sb[k], meter, depth + 1)) {
        return order(sa[k], sb[k], op, meter, depth + 1);
      }
    }
    return (sa.size() > sb.size()) - (sa.size() < sb.size());
  }
  type_error(std::string("'") + op + "' not supported between instances of '" + type_name(a) +
             "' and '" + type_name(b) + "'");
}

bool compare(CmpOp op, const Value& a, const Value& b, StepMeter& meter) {
  switch (op) {
    case CmpOp::eq: return values_equal(a, b, meter);
    case CmpOp::ne: return !values_equal(a, b, meter);
    case CmpOp::lt: { auto c = order(a, b, "<", meter); return c && *c < 0; }
    case CmpOp::le: { auto c = order(a, b, "<=", meter); return c && *c <= 0; }
    case CmpOp::gt: { auto c = order(a, b, ">", meter); return c && *c > 0; }
    case CmpOp::ge: { auto c = order(a, b, ">=", meter); return c && *c >= 0; }
    case CmpOp::in:
    case CmpOp::not_in: {
      bool found = false;
      if (const auto* hay = b.get_if<std::string>()) {
        const auto* needle = a.get_if<std::string>();
        if (!needle) type_error("'in <string>' requires string as left operand, not " + type_name(a));
        meter.charge(hay->size() / 8 + 1);
        found = hay->find(*needle) != std::string::npos;
      } else if (const auto* r = b.get_if<RangeValue>()) {
        auto n = as_number(a);
        if (n && n->is_int) {
          if (auto v = n->i.to_int64()) {
            const std::int64_t size = r->size();
            if (size > 0) {
              const std::int64_t off = *v - r->start;
              found = off % r->step == 0 && off / r->step >= 0 && off / r->step < size;
            }
          }
        } else if (n) {
          for (const auto& item : iterate(b, meter)) {
            if (values_equal(a, item, meter)) { found = true; break; }
          }
        }
      } else if (const auto* s = b.get_if<SequencePtr>()) {
        meter.charge((*s)->items.size() + 1);
        for (const auto& item : (*s)->items) {
          if (values_equal(a, item, meter)) { found = true; break; }
        }
      } else {
        type_error("argument of type '" + type_name(b) + "' is not iterable");
      }
      return op == CmpOp::in ? found : !found;
    }
  }
  return false;
}

std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < s.size();) {
    const auto c = static_cast<unsigned char>(s[k]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, s.size() - k);
    out.push_back(s.substr(k, len));
    k += len;
  }
  return out;
}

std::vector<Value> iterate(const Value& v, StepMeter& meter) {
  if (const auto* s = v.get_if<SequencePtr>()) {
    meter.charge((*s)->items.size() + 1);
    return (*s)->items;
  }
  if (const auto* r = v.get_if<RangeValue>()) {
    const auto n = r->size();
    meter.charge(static_cast<std::uint64_t>(n) + 1);
    std::vector<Value> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) out.emplace_back(Integer(r->at(k)));
    return out;
  }
  if (const auto* str = v.get_if<std::string>()) {
    meter.charge(str->size() + 1);
    std::vector<Value> out;
    for (auto& ch : utf8_chars(*str)) out.emplace_back(std::move(ch));
    return out;
  }
  type_error("'" + type_name(v) + "' object is not iterable");
}

Value subscript(const Value& object, const Value& index, StepMeter& meter) {
  (void)meter;
  if (const auto* s = object.get_if<SequencePtr>()) {
    const auto k = normalize_index(index, static_cast<std::int64_t>((*s)->items.size()),
                                   (*s)->is_tuple ? "tuple" : "list");
    return (*s)->items[static_cast<std::size_t>(k)];
  }
  if (const auto* str = object.get_if<std::string>()) {
    auto chars = utf8_chars(*str);
    const auto k = normalize_index(index, static_cast<std::int64_t>(chars.size()), "string");
    return Value(chars[static_cast<std::size_t>(k)]);
  }
  if (const auto* r = object.get_if<RangeValue>()) {
    const auto k = normalize_index(index, r->size(), "range object");
    return Value(Integer(r->at(k)));
  }
  type_error("'" + type_name(object) + "' object is not subscriptable");
}

Value slice(const Value& object, const std::optional<Value>& lower,
            const std::optional<Value>& upper, const std::optional<Value>& step,
            StepMeter& meter) {
  auto bound = [](const std::optional<Value>& v) -> std::optional<std::int64_t> {
    if (!v || v->is<NoneValue>()) return std::nullopt;
    auto n = as_number(*v);
    if (!n || !n->is_int) {
      type_error("slice indices must be integers or None");
    }
    auto i = n->i.to_int64();
    if (!i) return n->i.sign() < 0 ? std::numeric_limits<std::int64_t>::min() / 2
                                   : std::numeric_limits<std::int64_t>::max() / 2;
    return *i;
  };
  std::int64_t len = 0;
  if (const auto* s = object.get_if<SequencePtr>()) len = static_cast<std::int64_t>((*s)->items.size());
  else if (const auto* str = object.get_if<std::string>()) len = static_cast<std::int64_t>(utf8_chars(*str).size());
  else if (const auto* r = object.get_if<RangeValue>()) len = r->size();
  else type_error("'" + type_name(object) + "' object is not subscriptable");

  const std::int64_t st = bound(step).value_or(1);
  if (st == 0) throw RuntimeFault{"ValueError: slice step cannot be zero"};
  auto adjust = [&](std::optional<std::int64_t> v, std::int64_t dflt) {
    if (!v) return dflt;
    std::int64_t x = *v;
    if (x < 0) {
      x += len;
      if (x < 0) x = st < 0 ? -1 : 0;
    } else if (x >= len) {
      x = st < 0 ? len - 1 : len;
    }
    return x;
  };
  const std::int64_t start = adjust(bound(lower), st < 0 ? len - 1 : 0);
  const std::int64_t stop = adjust(bound(upper), st < 0 ? -1 : len);
  std::vector<std::int64_t> idx;
  if (st > 0) {
    for (std::int64_t k = start; k < stop; k += st) idx.push_back(k);
  } else {
    for (std::int64_t k = start; k > stop; k += st) idx.push_back(k);
  }
  meter.charge(idx.size() + 1);

  if (const auto* s = object.get_if<SequencePtr>()) {
    std::vector<Value> items;
    for (auto k : idx) items.push_back((*s)->items[static_cast<std::size_t>(k)]);
    return Value(make_sequence(std::move(items), (*s)->is_tuple));
  }
  if (const auto* str = object.get_if<std::string>()) {
    auto chars = utf8_chars(*str);
    std::string out;
    for (auto k : idx) out += chars[static_cast<std::size_t>(k)];
    return Value(std::move(out));
  }
  const auto& r = object.as<RangeValue>();
  std::vector<Value> items;
  for (auto k : idx) items.emplace_back(Integer(r.at(k)));
  return Value(make_sequence(std::move(items), false));
}

void store_item(const Value& object, const Value& index, Value item) {
  if (const auto* s = object.get_if<SequencePtr>()) {
    if ((*s)->is_tuple) type_error("'tuple' object does not support item assignment");
    const auto k = normalize_index(index, static_cast<std::int64_t>((*s)->items.size()), "list assignment");
    (*s)->items[static_cast<std::size_t>(k)] = std::move(item);
    return;
  }
  type_error("'" + type_name(object) + "' object does not support item assignment");
}

}  // namespace progshot::interp::detail
