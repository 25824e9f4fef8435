#include "obsid/backends.hpp"

#include "obsid/error.hpp"
#include "obsid/protocol.hpp"
#include "obsid/rng.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <iostream>
#include <random>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace obsid {

void TrueSystem::validate() const {
  if (g_true.size() == 0 || !g_true.allFinite()) fail(ErrorCode::invalid_argument, "g_true must be finite and non-empty");
  if (shots_per_measurement < 1) fail(ErrorCode::invalid_argument, "shots per measurement must be >= 1");
}

double binomial_sigma(double m, int shots) {
  if (shots < 1) fail(ErrorCode::invalid_argument, "shots must be >= 1");
  return std::max(kSigmaFloor, std::sqrt(std::max(0.0, m * (1.0 - m)) / static_cast<double>(shots)));
}

MeasurementRecord simulate_measurement(const TrueSystem& system, const ModelSpec& model, const ControlWaveform& pulse,
                                       std::uint64_t call_index) {
  system.validate();
  if (static_cast<std::size_t>(system.g_true.size()) != model.parameter_count()) {
    fail(ErrorCode::invalid_argument, "g_true dimension does not match model");
  }
  const auto start = std::chrono::steady_clock::now();
  const double p = std::clamp(evolve(model, system.g_true, pulse).p0, 0.0, 1.0);
  Rng rng = make_rng(system.seed, {tag(Stream::simulator), call_index});
  std::binomial_distribution<long> draw(system.shots_per_measurement, p);
  const long k = draw(rng);

  MeasurementRecord rec;
  rec.pulse = pulse;
  rec.shots = system.shots_per_measurement;
  rec.m = static_cast<double>(k) / static_cast<double>(rec.shots);
  rec.sigma = binomial_sigma(rec.m, rec.shots);
  rec.backend_tag = "simulated";
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

SimulatedBackend::SimulatedBackend(TrueSystem system, ModelSpec model)
    : system_(std::move(system)), model_(std::move(model)) {
  system_.validate();
  model_.validate();
  if (static_cast<std::size_t>(system_.g_true.size()) != model_.parameter_count()) {
    fail(ErrorCode::invalid_argument, "g_true dimension does not match model");
  }
}

MeasurementRecord SimulatedBackend::measure(const ControlWaveform& pulse) {
  std::lock_guard lock(mutex_);
  return simulate_measurement(system_, model_, pulse, calls_++);
}

namespace {

class FdTransport : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  ~FdTransport() override {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
  }

  void send_line(const std::string& line) override {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      const ssize_t n = write_some(p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::remote_error, std::string("write to remote failed: ") + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) fail(ErrorCode::remote_timeout, "no response from remote within timeout");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::remote_error, std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail(ErrorCode::remote_error, std::string("read from remote failed: ") + std::strerror(errno));
      }
      if (n == 0) fail(ErrorCode::remote_error, "remote closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  virtual ssize_t write_some(const char* p, std::size_t n) { return ::write(write_fd_, p, n); }

  int read_fd_;
  int write_fd_;

 private:
  std::string buffer_;
};

class SocketTransport : public FdTransport {
 public:
  explicit SocketTransport(int fd) : FdTransport(fd, fd) {}

 protected:
  ssize_t write_some(const char* p, std::size_t n) override { return ::send(write_fd_, p, n, MSG_NOSIGNAL); }
};

class ProcessTransport : public FdTransport {
 public:
  ProcessTransport(int read_fd, int write_fd, pid_t pid) : FdTransport(read_fd, write_fd), pid_(pid) {}

  ~ProcessTransport() override {
    ::close(write_fd_);
    write_fd_ = -1;
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        ::kill(-pid_, SIGTERM);
        return;
      }
      ::usleep(10000);
    }
    ::kill(-pid_, SIGTERM);
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

std::unique_ptr<LineTransport> connect_tcp(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    fail(ErrorCode::invalid_argument, "tcp endpoint must be tcp://host:port");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    fail(ErrorCode::remote_error, "cannot resolve " + address + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) fail(ErrorCode::remote_error, "cannot connect to " + address);
  return std::make_unique<SocketTransport>(fd);
}

std::unique_ptr<LineTransport> spawn_process(const std::string& command) {
  if (command.empty()) fail(ErrorCode::invalid_argument, "exec endpoint needs a command");
  int to_child[2], from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) fail(ErrorCode::remote_error, "pipe failed");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    fail(ErrorCode::remote_error, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) fail(ErrorCode::remote_error, "fork failed");
  if (pid == 0) {
    // own process group so teardown reaches grandchildren started by the shell
    ::setpgid(0, 0);
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  std::signal(SIGPIPE, SIG_IGN);
  return std::make_unique<ProcessTransport>(from_child[0], to_child[1], pid);
}

}  // namespace

std::unique_ptr<LineTransport> open_transport(const std::string& endpoint) {
  if (endpoint.rfind("tcp://", 0) == 0) return connect_tcp(endpoint.substr(6));
  if (endpoint.rfind("exec:", 0) == 0) return spawn_process(endpoint.substr(5));
  fail(ErrorCode::invalid_argument, "unsupported endpoint '" + endpoint + "' (use tcp://host:port or exec:<command>)");
}

RemoteBackend::RemoteBackend(std::string endpoint, int shots, std::chrono::milliseconds timeout, WarningSink warn)
    : RemoteBackend(open_transport(endpoint), endpoint, shots, timeout, std::move(warn)) {}

RemoteBackend::RemoteBackend(std::unique_ptr<LineTransport> transport, std::string endpoint, int shots,
                             std::chrono::milliseconds timeout, WarningSink warn)
    : transport_(std::move(transport)), endpoint_(std::move(endpoint)), shots_(shots), timeout_(timeout),
      warn_(std::move(warn)) {
  if (!transport_) fail(ErrorCode::invalid_argument, "remote backend needs a transport");
  if (shots_ < 1) fail(ErrorCode::invalid_argument, "shots must be >= 1");
  if (timeout_.count() <= 0) fail(ErrorCode::invalid_argument, "remote timeout must be positive");
  if (!warn_) warn_ = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

MeasurementRecord RemoteBackend::measure(const ControlWaveform& pulse) {
  std::lock_guard lock(mutex_);
  pulse.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t id = next_id_++;
  transport_->send_line(encode_measure_request(id, pulse, shots_));
  const RemoteReply reply = decode_measure_response(transport_->read_line(timeout_), id);
  if (reply.sigma_floored) warn_("remote sigma below 1e-3 for request " + std::to_string(id) + "; floored to 1e-3");

  MeasurementRecord rec;
  rec.pulse = pulse;
  rec.m = reply.m;
  rec.sigma = reply.sigma;
  rec.shots = shots_;
  rec.backend_tag = tag();
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace obsid
