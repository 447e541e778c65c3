#include "value.hpp"

#include <charconv>
#include <cmath>

namespace progshot::interp::detail {

std::int64_t RangeValue::size() const {
  if (step > 0 && start < stop) return (stop - start + step - 1) / step;
  if (step < 0 && start > stop) return (start - stop - step - 1) / (-step);
  return 0;
}

Sequence::~Sequence() {
  std::vector<SequencePtr> pending;
  auto detach = [&pending](std::vector<Value>& items) {
    for (auto& item : items) {
      if (auto* p = std::get_if<SequencePtr>(&item.v); p && *p && p->use_count() == 1) {
        pending.push_back(std::move(*p));
      }
    }
    items.clear();
  };
  detach(items);
  while (!pending.empty()) {
    SequencePtr s = std::move(pending.back());
    pending.pop_back();
    detach(s->items);
  }
}

std::string type_name(const Value& v) {
  struct Visitor {
    std::string operator()(NoneValue) const { return "NoneType"; }
    std::string operator()(bool) const { return "bool"; }
    std::string operator()(const Integer&) const { return "int"; }
    std::string operator()(double) const { return "float"; }
    std::string operator()(const std::string&) const { return "str"; }
    std::string operator()(const SequencePtr& s) const { return s->is_tuple ? "tuple" : "list"; }
    std::string operator()(RangeValue) const { return "range"; }
    std::string operator()(ModuleValue) const { return "module"; }
    std::string operator()(Builtin) const { return "builtin_function_or_method"; }
  };
  return std::visit(Visitor{}, v.v);
}

std::string float_repr(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  if (d == 0.0) return std::signbit(d) ? "-0.0" : "0.0";

  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::scientific);
  std::string sci(buf, res.ptr);
  std::string out;
  if (sci.front() == '-') {
    out.push_back('-');
    sci.erase(0, 1);
  }
  const auto e_pos = sci.find('e');
  std::string digits;
  for (std::size_t i = 0; i < e_pos; ++i) {
    if (sci[i] != '.') digits.push_back(sci[i]);
  }
  const int exponent = std::stoi(sci.substr(e_pos + 1));
  const int decpt = exponent + 1;
  const int ndigits = static_cast<int>(digits.size());

  if (decpt <= -4 || decpt > 16) {
    out.push_back(digits[0]);
    if (ndigits > 1) {
      out.push_back('.');
      out.append(digits, 1);
    }
    out.push_back('e');
    out.push_back(exponent < 0 ? '-' : '+');
    const int mag = std::abs(exponent);
    if (mag < 10) out.push_back('0');
    out += std::to_string(mag);
  } else if (decpt <= 0) {
    out += "0.";
    out.append(static_cast<std::size_t>(-decpt), '0');
    out += digits;
  } else if (decpt >= ndigits) {
    out += digits;
    out.append(static_cast<std::size_t>(decpt - ndigits), '0');
    out += ".0";
  } else {
    out.append(digits, 0, static_cast<std::size_t>(decpt));
    out.push_back('.');
    out.append(digits, static_cast<std::size_t>(decpt));
  }
  return out;
}

namespace {

std::string string_repr(const std::string& s) {
  const bool use_double = s.find('\'') != std::string::npos && s.find('"') == std::string::npos;
  const char quote = use_double ? '"' : '\'';
  std::string out(1, quote);
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c == quote) out.push_back('\\');
        out.push_back(c);
    }
  }
  out.push_back(quote);
  return out;
}

const char* builtin_name(Builtin b) {
  switch (b) {
    case Builtin::len: return "len";
    case Builtin::sum: return "sum";
    case Builtin::min: return "min";
    case Builtin::max: return "max";
    case Builtin::abs: return "abs";
    case Builtin::round: return "round";
    case Builtin::int_: return "int";
    case Builtin::float_: return "float";
    case Builtin::sorted: return "sorted";
    case Builtin::range: return "range";
    case Builtin::math_sqrt: return "sqrt";
    case Builtin::math_floor: return "floor";
    case Builtin::math_ceil: return "ceil";
    case Builtin::math_pow: return "pow";
  }
  return "?";
}

std::string repr_impl(const Value& v, int depth) {
  if (depth > 64) return "...";
  struct Visitor {
    int depth;
    std::string operator()(NoneValue) const { return "None"; }
    std::string operator()(bool b) const { return b ? "True" : "False"; }
    std::string operator()(const Integer& i) const { return i.to_string(); }
    std::string operator()(double d) const { return float_repr(d); }
    std::string operator()(const std::string& s) const { return string_repr(s); }
    std::string operator()(const SequencePtr& s) const {
      std::string out = s->is_tuple ? "(" : "[";
      for (std::size_t i = 0; i < s->items.size(); ++i) {
        if (i) out += ", ";
        out += repr_impl(s->items[i], depth + 1);
      }
      if (s->is_tuple && s->items.size() == 1) out += ",";
      out += s->is_tuple ? ")" : "]";
      return out;
    }
    std::string operator()(RangeValue r) const {
      std::string out = "range(" + std::to_string(r.start) + ", " + std::to_string(r.stop);
      if (r.step != 1) out += ", " + std::to_string(r.step);
      return out + ")";
    }
    std::string operator()(ModuleValue) const { return "<module 'math'>"; }
    std::string operator()(Builtin b) const {
      return std::string("<built-in function ") + builtin_name(b) + ">";
    }
  };
  return std::visit(Visitor{depth}, v.v);
}

}  // namespace

std::string repr(const Value& v) { return repr_impl(v, 0); }

bool truthy(const Value& v) {
  struct Visitor {
    bool operator()(NoneValue) const { return false; }
    bool operator()(bool b) const { return b; }
    bool operator()(const Integer& i) const { return !i.is_zero(); }
    bool operator()(double d) const { return d != 0.0; }
    bool operator()(const std::string& s) const { return !s.empty(); }
    bool operator()(const SequencePtr& s) const { return !s->items.empty(); }
    bool operator()(RangeValue r) const { return r.size() > 0; }
    bool operator()(ModuleValue) const { return true; }
    bool operator()(Builtin) const { return true; }
  };
  return std::visit(Visitor{}, v.v);
}

}  // namespace progshot::interp::detail
