#include "obsid/error.hpp"

namespace obsid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::model_blowup: return "model_blowup";
    case ErrorCode::segment_overflow: return "segment_overflow";
    case ErrorCode::proposal_mismatch: return "proposal_mismatch";
    case ErrorCode::filter_collapse: return "filter_collapse";
    case ErrorCode::no_consistent_samples: return "no_consistent_samples";
    case ErrorCode::degenerate_pulse: return "degenerate_pulse";
    case ErrorCode::degenerate_covariance: return "degenerate_covariance";
    case ErrorCode::undefined_direction: return "undefined_direction";
    case ErrorCode::optimizer_failure: return "optimizer_failure";
    case ErrorCode::remote_timeout: return "remote_timeout";
    case ErrorCode::remote_malformed: return "remote_malformed";
    case ErrorCode::remote_out_of_range: return "remote_out_of_range";
    case ErrorCode::remote_error: return "remote_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::replay_mismatch: return "replay_mismatch";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

bool Error::retryable() const noexcept {
  return code_ == ErrorCode::remote_timeout || code_ == ErrorCode::remote_error;
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace obsid
