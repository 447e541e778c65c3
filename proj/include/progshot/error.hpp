#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace progshot {

enum class ErrorCode {
  file_missing,
  malformed_record,
  answer_unparsable,
  fixture_miss,
  backend_unavailable,
  quota_exceeded,
  dimension_mismatch,
  zero_vector,
  empty_index,
  empty_store,
  unknown_problem_id,
  id_set_mismatch,
  empty_split,
  missing_run_artifacts,
  render_unparsable,
  verify_first,
  io_failure,
  config_error,
  provider_mismatch,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace progshot
