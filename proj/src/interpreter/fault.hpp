#pragma once

#include <string>

namespace progshot::interp::detail {

// Raised inside the evaluator for anything Python would raise at runtime.
struct RuntimeFault {
  std::string message;
};

// Raised when the step budget runs out.
struct StepLimitHit {};

}  // namespace progshot::interp::detail
