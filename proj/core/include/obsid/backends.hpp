#pragma once

#include "obsid/quantum_model.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace obsid {

constexpr double kSigmaFloor = 1e-3;

struct MeasurementRecord {
  ControlWaveform pulse;
  double m = 0.0;
  double sigma = kSigmaFloor;
  int shots = 0;
  double wall_time = 0.0;  // seconds spent in the backend
  std::string backend_tag;
};

struct TrueSystem {
  ParameterVector g_true;
  int shots_per_measurement = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Binomial shot-noise measurement of P0 at g_true. The draw depends only on
/// (system.seed, call_index).
MeasurementRecord simulate_measurement(const TrueSystem& system, const ModelSpec& model, const ControlWaveform& pulse,
                                       std::uint64_t call_index);

/// Plug-in binomial standard error with the 1e-3 floor.
double binomial_sigma(double m, int shots);

class ExperimentBackend {
 public:
  virtual ~ExperimentBackend() = default;
  virtual MeasurementRecord measure(const ControlWaveform& pulse) = 0;
  virtual std::string tag() const = 0;
  /// Known true parameters (simulation only).
  virtual std::optional<ParameterVector> truth() const { return std::nullopt; }
};

class SimulatedBackend : public ExperimentBackend {
 public:
  SimulatedBackend(TrueSystem system, ModelSpec model);

  MeasurementRecord measure(const ControlWaveform& pulse) override;
  std::string tag() const override { return "simulated"; }
  std::optional<ParameterVector> truth() const override { return system_.g_true; }

  std::uint64_t calls() const { return calls_; }

 private:
  TrueSystem system_;
  ModelSpec model_;
  std::uint64_t calls_ = 0;
  std::mutex mutex_;
};

/// Bidirectional newline-delimited text channel.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send_line(const std::string& line) = 0;
  /// Throws remote_timeout when no full line arrives in time.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// "tcp://host:port" connects a socket; "exec:<command>" spawns a shell
/// command and talks to it over its stdin/stdout.
std::unique_ptr<LineTransport> open_transport(const std::string& endpoint);

class RemoteBackend : public ExperimentBackend {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  RemoteBackend(std::string endpoint, int shots, std::chrono::milliseconds timeout = std::chrono::seconds(600),
                WarningSink warn = {});
  RemoteBackend(std::unique_ptr<LineTransport> transport, std::string endpoint, int shots,
                std::chrono::milliseconds timeout = std::chrono::seconds(600), WarningSink warn = {});

  MeasurementRecord measure(const ControlWaveform& pulse) override;
  std::string tag() const override { return "remote:" + endpoint_; }

 private:
  std::unique_ptr<LineTransport> transport_;
  std::string endpoint_;
  int shots_;
  std::chrono::milliseconds timeout_;
  WarningSink warn_;
  std::int64_t next_id_ = 1;
  std::mutex mutex_;
};

}  // namespace obsid
