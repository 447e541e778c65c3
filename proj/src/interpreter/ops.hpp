#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ast.hpp"
#include "fault.hpp"
#include "value.hpp"

namespace progshot::interp::detail {

// Charged by every operation whose cost grows with its operands, before allocating.
class StepMeter {
 public:
  explicit StepMeter(std::uint64_t budget) : budget_(budget) {}
  void charge(std::uint64_t n = 1) {
    used_ += n;
    if (used_ > budget_) throw StepLimitHit{};
  }
  std::uint64_t used() const { return used_ < budget_ ? used_ : budget_; }

 private:
  std::uint64_t budget_;
  std::uint64_t used_ = 0;
};

// Numeric view of int, bool and float values.
struct Number {
  bool is_int = true;
  Integer i;
  double f = 0.0;
};

std::optional<Number> as_number(const Value& v);
double to_float(const Number& n);
double to_float(const Integer& i);

Value binary_op(BinOp op, const Value& a, const Value& b, StepMeter& meter);
/// `a op= b`; mutates lists in place for +=.
Value inplace_op(BinOp op, const Value& a, const Value& b, StepMeter& meter);
Value unary_op(UnaryOp op, const Value& v);

bool values_equal(const Value& a, const Value& b, StepMeter& meter, int depth = 0);
/// Ordering for <, <=, >, >=; nullopt when NaN makes the comparison false.
std::optional<int> order(const Value& a, const Value& b, const char* op, StepMeter& meter,
                         int depth = 0);
bool compare(CmpOp op, const Value& a, const Value& b, StepMeter& meter);

/// Elements of an iterable, materialized (strings yield one-character strings).
std::vector<Value> iterate(const Value& v, StepMeter& meter);

std::vector<std::string> utf8_chars(const std::string& s);

Value subscript(const Value& object, const Value& index, StepMeter& meter);
Value slice(const Value& object, const std::optional<Value>& lower,
            const std::optional<Value>& upper, const std::optional<Value>& step,
            StepMeter& meter);
void store_item(const Value& object, const Value& index, Value item);

}  // namespace progshot::interp::detail
