#include <progshot/error.hpp>

namespace progshot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::file_missing: return "FileMissing";
    case ErrorCode::malformed_record: return "MalformedRecord";
    case ErrorCode::answer_unparsable: return "AnswerUnparsable";
    case ErrorCode::fixture_miss: return "FixtureMiss";
    case ErrorCode::backend_unavailable: return "BackendUnavailable";
    case ErrorCode::quota_exceeded: return "QuotaExceeded";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::empty_index: return "EmptyIndex";
    case ErrorCode::empty_store: return "EmptyStore";
    case ErrorCode::unknown_problem_id: return "UnknownProblemId";
    case ErrorCode::id_set_mismatch: return "IdSetMismatch";
    case ErrorCode::empty_split: return "EmptySplit";
    case ErrorCode::missing_run_artifacts: return "MissingRunArtifacts";
    case ErrorCode::render_unparsable: return "RenderUnparsable";
    case ErrorCode::verify_first: return "VerifyFirst";
    case ErrorCode::io_failure: return "IoFailure";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::provider_mismatch: return "ProviderMismatch";
  }
  return "Error";
}

}  // namespace progshot
