#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "integer.hpp"

namespace progshot::interp::detail {

enum class Builtin : std::uint8_t {
  len,
  sum,
  min,
  max,
  abs,
  round,
  int_,
  float_,
  sorted,
  range,
  math_sqrt,
  math_floor,
  math_ceil,
  math_pow,
};

struct NoneValue {
  friend bool operator==(NoneValue, NoneValue) { return true; }
};

// The `math` module object; only its whitelisted members are reachable.
struct ModuleValue {
  friend bool operator==(ModuleValue, ModuleValue) { return true; }
};

struct RangeValue {
  std::int64_t start = 0;
  std::int64_t stop = 0;
  std::int64_t step = 1;

  std::int64_t size() const;
  std::int64_t at(std::int64_t i) const { return start + i * step; }
};

struct Sequence;
using SequencePtr = std::shared_ptr<Sequence>;

struct Value {
  using Storage = std::variant<NoneValue, bool, Integer, double, std::string, SequencePtr,
                               RangeValue, ModuleValue, Builtin>;
  Storage v;

  Value() = default;
  Value(NoneValue n) : v(n) {}      // NOLINT
  Value(bool b) : v(b) {}           // NOLINT
  Value(Integer i) : v(std::move(i)) {}  // NOLINT
  Value(double d) : v(d) {}         // NOLINT
  Value(std::string s) : v(std::move(s)) {}  // NOLINT
  Value(SequencePtr s) : v(std::move(s)) {}  // NOLINT
  Value(RangeValue r) : v(r) {}     // NOLINT
  Value(ModuleValue m) : v(m) {}    // NOLINT
  Value(Builtin b) : v(b) {}        // NOLINT

  template <typename T>
  bool is() const { return std::holds_alternative<T>(v); }
  template <typename T>
  const T& as() const { return std::get<T>(v); }
  template <typename T>
  const T* get_if() const { return std::get_if<T>(&v); }
};

// Python lists are shared by reference; tuples reuse the same storage with a flag.
struct Sequence {
  std::vector<Value> items;
  bool is_tuple = false;

  Sequence() = default;
  Sequence(const Sequence&) = delete;
  Sequence& operator=(const Sequence&) = delete;
  // Tears down nested lists iteratively so deep nesting cannot exhaust the stack.
  ~Sequence();
};

inline SequencePtr make_sequence(std::vector<Value> items, bool is_tuple) {
  auto s = std::make_shared<Sequence>();
  s->items = std::move(items);
  s->is_tuple = is_tuple;
  return s;
}

std::string type_name(const Value& v);
std::string repr(const Value& v);
std::string float_repr(double d);
bool truthy(const Value& v);

}  // namespace progshot::interp::detail
