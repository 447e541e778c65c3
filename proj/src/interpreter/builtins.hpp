#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ops.hpp"
#include "value.hpp"

namespace progshot::interp::detail {

std::optional<Value> lookup_builtin(std::string_view name);
bool is_math_member(std::string_view name);
Value math_member(std::string_view name);

using KeywordArgs = std::vector<std::pair<std::string, Value>>;

Value call_builtin(Builtin fn, std::vector<Value> args, const KeywordArgs& kwargs,
                   StepMeter& meter);

}  // namespace progshot::interp::detail
