#include "obsid/protocol.hpp"

#include "obsid/error.hpp"

#include <cmath>

namespace obsid {

Json waveform_to_json(const ControlWaveform& pulse) {
  Json channels = Json::array();
  for (const auto& ch : pulse.channels) {
    Json segs = Json::array();
    for (const auto& s : ch) segs.push_back({{"duration_s", s.duration}, {"re", s.value.real()}, {"im", s.value.imag()}});
    channels.push_back(std::move(segs));
  }
  return channels;
}

ControlWaveform waveform_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::invalid_argument, "waveform must be an array of channels");
  ControlWaveform pulse;
  for (const auto& ch : j) {
    if (!ch.is_array()) fail(ErrorCode::invalid_argument, "waveform channel must be an array of segments");
    auto& out = pulse.channels.emplace_back();
    for (const auto& s : ch) {
      if (!s.is_object() || !s.contains("duration_s") || !s["duration_s"].is_number()) {
        fail(ErrorCode::invalid_argument, "segment needs a numeric duration_s");
      }
      const double re = s.value("re", 0.0);
      const double im = s.value("im", 0.0);
      out.push_back({s["duration_s"].get<double>(), Complex(re, im)});
    }
  }
  pulse.validate();
  return pulse;
}

std::string encode_measure_request(std::int64_t id, const ControlWaveform& pulse, int shots) {
  const Json req = {{"type", "measure"}, {"id", id}, {"channels", waveform_to_json(pulse)}, {"shots", shots}};
  return req.dump();
}

RemoteReply decode_measure_response(const std::string& line, std::int64_t expected_id) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::remote_malformed, std::string("response is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::remote_malformed, "response must be a JSON object");
  if (!j.contains("id") || !j["id"].is_number_integer()) fail(ErrorCode::remote_malformed, "response lacks an integer id");
  RemoteReply reply;
  reply.id = j["id"].get<std::int64_t>();
  if (reply.id != expected_id) {
    fail(ErrorCode::remote_malformed,
         "response id " + std::to_string(reply.id) + " does not echo request id " + std::to_string(expected_id));
  }
  if (j.contains("error")) {
    fail(ErrorCode::remote_error, "remote reported: " + (j["error"].is_string() ? j["error"].get<std::string>()
                                                                               : j["error"].dump()));
  }
  if (!j.contains("m") || !j["m"].is_number() || !j.contains("sigma") || !j["sigma"].is_number()) {
    fail(ErrorCode::remote_malformed, "response needs numeric m and sigma");
  }
  reply.m = j["m"].get<double>();
  reply.sigma = j["sigma"].get<double>();
  if (!std::isfinite(reply.m) || reply.m < 0.0 || reply.m > 1.0) {
    fail(ErrorCode::remote_out_of_range, "m = " + std::to_string(reply.m) + " outside [0, 1]");
  }
  if (!std::isfinite(reply.sigma) || reply.sigma < 0.0) {
    fail(ErrorCode::remote_out_of_range, "sigma = " + std::to_string(reply.sigma) + " is not a valid uncertainty");
  }
  if (reply.sigma < 1e-3) {
    reply.sigma = 1e-3;
    reply.sigma_floored = true;
  }
  return reply;
}

}  // namespace obsid
