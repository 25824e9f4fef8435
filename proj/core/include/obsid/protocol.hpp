#pragma once

#include "obsid/quantum_model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace obsid {

using Json = nlohmann::json;

/// [[{"duration_s":..,"re":..,"im":..}, ...], ...], one array per channel.
Json waveform_to_json(const ControlWaveform& pulse);
ControlWaveform waveform_from_json(const Json& j);

/// One newline-free request line of the remote measurement protocol.
std::string encode_measure_request(std::int64_t id, const ControlWaveform& pulse, int shots);

struct RemoteReply {
  std::int64_t id = 0;
  double m = 0.0;
  double sigma = 0.0;
  bool sigma_floored = false;
};

/// Parses and validates one response line against the expected id.
/// Errors: remote_malformed (bad JSON, missing fields, id mismatch),
/// remote_out_of_range (m outside [0, 1], negative or non-finite sigma),
/// remote_error (the server reported {"error": ...}).
RemoteReply decode_measure_response(const std::string& line, std::int64_t expected_id);

}  // namespace obsid
