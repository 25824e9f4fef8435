#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obsid {

enum class ErrorCode {
  invalid_argument,
  model_blowup,
  segment_overflow,
  proposal_mismatch,
  filter_collapse,
  no_consistent_samples,
  degenerate_pulse,
  degenerate_covariance,
  undefined_direction,
  optimizer_failure,
  remote_timeout,
  remote_malformed,
  remote_out_of_range,
  remote_error,
  io_error,
  config_error,
  replay_mismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so
/// callers can tell retryable conditions (remote timeouts) from fatal ones.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  bool retryable() const noexcept;

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace obsid
