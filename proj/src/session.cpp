#include "artarena/session.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artarena/error.hpp"

namespace artarena {

using nlohmann::json;

// ---------------------------------------------------------------------------
// FdTransport

FdTransport::FdTransport(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

FdTransport::~FdTransport() { close_all(); }

void FdTransport::close_all() {
  close_write();
  if (read_fd_ >= 0) {
    ::close(read_fd_);
    read_fd_ = -1;
  }
}

void FdTransport::write_line(const std::string& line) {
  if (write_fd_ < 0) throw BackendError("write to a closed worker channel");
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::send(write_fd_, p, left, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) {
      const ssize_t m = ::write(write_fd_, p, left);
      if (m < 0) {
        if (errno == EINTR) continue;
        throw BackendError(fmt::format("worker write failed: {}", std::strerror(errno)));
      }
      p += m;
      left -= static_cast<std::size_t>(m);
      continue;
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(fmt::format("worker write failed: {}", std::strerror(errno)));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdTransport::read_line(std::optional<std::chrono::milliseconds> timeout) {
  const auto deadline = timeout ? std::chrono::steady_clock::now() + *timeout : std::chrono::steady_clock::time_point{};
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (read_fd_ < 0) return std::nullopt;
    if (timeout) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw BackendError("timed out waiting for worker");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) throw BackendError("timed out waiting for worker");
    }
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(fmt::format("worker read failed: {}", std::strerror(errno)));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void FdTransport::close_write() {
  if (write_fd_ < 0) return;
  if (write_fd_ == read_fd_) {
    ::shutdown(write_fd_, SHUT_WR);
  } else {
    ::close(write_fd_);
  }
  write_fd_ = -1;
}

// ---------------------------------------------------------------------------
// SubprocessTransport

SubprocessTransport::SubprocessTransport(int read_fd, int write_fd, int pid)
    : FdTransport(read_fd, write_fd), pid_(pid) {}

std::unique_ptr<SubprocessTransport> SubprocessTransport::launch(const std::string& command) {
  // A dead worker must surface as EPIPE on write, not kill the engine.
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw BackendError(fmt::format("pipe: {}", std::strerror(errno)));
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw BackendError(fmt::format("pipe: {}", std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw BackendError(fmt::format("cannot launch worker \"{}\": {}", command, std::strerror(errno)));
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::unique_ptr<SubprocessTransport>(new SubprocessTransport(from_child[0], to_child[1], pid));
}

SubprocessTransport::~SubprocessTransport() {
  close_write();
  // Give the worker a moment to exit on EOF before forcing it.
  for (int i = 0; i < 200; ++i) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_ || r < 0) {
      close_all();
      return;
    }
    ::usleep(10000);
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, nullptr, 0);
  close_all();
}

// ---------------------------------------------------------------------------

std::unique_ptr<FdTransport> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw BackendError(fmt::format("cannot resolve {}:{}: {}", host, port, ::gai_strerror(rc)));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw BackendError(fmt::format("cannot connect to {}:{}", host, port));
  return std::make_unique<FdTransport>(fd, fd);
}

// ---------------------------------------------------------------------------
// LoopbackTransport

LoopbackTransport::LoopbackTransport(std::shared_ptr<MockBackend> backend, MockWorkerFaults faults)
    : backend_(std::move(backend)), worker_(*backend_, faults) {
  outbox_.push_back(worker_.hello_line());
}

void LoopbackTransport::write_line(const std::string& line) {
  // Served on the caller's thread; concurrent callers run in parallel.
  auto response = worker_.handle(line);
  std::lock_guard lock(mutex_);
  if (closed_) throw BackendError("write to a closed worker channel");
  if (!response) {
    closed_ = true;
  } else {
    outbox_.push_back(std::move(*response));
  }
  ready_.notify_all();
}

std::optional<std::string> LoopbackTransport::read_line(std::optional<std::chrono::milliseconds> timeout) {
  std::unique_lock lock(mutex_);
  auto ready = [this] { return !outbox_.empty() || closed_; };
  if (timeout) {
    if (!ready_.wait_for(lock, *timeout, ready)) throw BackendError("timed out waiting for worker");
  } else {
    ready_.wait(lock, ready);
  }
  if (outbox_.empty()) return std::nullopt;
  std::string line = std::move(outbox_.front());
  outbox_.pop_front();
  return line;
}

void LoopbackTransport::close_write() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  ready_.notify_all();
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {}

std::shared_ptr<Session> Session::open(std::unique_ptr<Transport> transport, SessionOptions options) {
  std::shared_ptr<Session> session(new Session(std::move(transport)));
  auto line = session->transport_->read_line(options.handshake_timeout);
  if (!line) throw BackendError("worker exited before its handshake");
  session->hello_ = protocol::handshake_from_json(protocol::decode(*line));
  session->reader_ = std::thread([raw = session.get()] { raw->reader_loop(); });
  return session;
}

Session::~Session() { close(); }

void Session::close() {
  {
    std::lock_guard lock(write_mutex_);
    if (closed_) return;
    closed_ = true;
    try {
      transport_->write_line(protocol::encode({{"op", "shutdown"}}));
    } catch (const BackendError&) {
      // Worker already gone.
    }
    transport_->close_write();
  }
  if (reader_.joinable()) reader_.join();
}

void Session::fail_all(const std::exception_ptr& error) {
  std::lock_guard lock(table_mutex_);
  if (!poisoned_) poisoned_ = error;
  for (auto& [id, promise] : outstanding_) promise.set_exception(error);
  outstanding_.clear();
}

void Session::reader_loop() {
  for (;;) {
    std::optional<std::string> line;
    try {
      line = transport_->read_line();
    } catch (const ArenaError&) {
      fail_all(std::current_exception());
      return;
    }
    if (!line) {
      fail_all(std::make_exception_ptr(BackendError("worker closed its output")));
      return;
    }
    json message;
    try {
      message = protocol::decode(*line);
    } catch (const ProtocolError&) {
      fail_all(std::current_exception());
      return;
    }
    const json& id = message.contains("request_id") ? message["request_id"] : json(nullptr);
    std::promise<json> promise;
    {
      std::lock_guard lock(table_mutex_);
      auto it = id.is_string() ? outstanding_.find(id.get<std::string>()) : outstanding_.end();
      if (it == outstanding_.end()) {
        auto error = std::make_exception_ptr(
            ProtocolError(fmt::format("response for unknown request_id {}: {}", id.dump(), *line)));
        if (!poisoned_) poisoned_ = error;
        for (auto& [rid, p] : outstanding_) p.set_exception(error);
        outstanding_.clear();
        return;
      }
      promise = std::move(it->second);
      outstanding_.erase(it);
    }
    promise.set_value(std::move(message));
  }
}

std::future<json> Session::send(json request) {
  std::promise<json> promise;
  auto future = promise.get_future();
  std::string id;
  {
    std::lock_guard lock(table_mutex_);
    if (poisoned_) std::rethrow_exception(poisoned_);
    id = fmt::format("r{}", next_id_++);
    request["request_id"] = id;
    outstanding_.emplace(id, std::move(promise));
  }
  try {
    const std::string line = protocol::encode(request);
    if (transport_->concurrent_writes()) {
      if (closed_) throw BackendError("session closed");
      transport_->write_line(line);
    } else {
      std::lock_guard lock(write_mutex_);
      if (closed_) throw BackendError("session closed");
      transport_->write_line(line);
    }
  } catch (...) {
    std::lock_guard lock(table_mutex_);
    if (auto it = outstanding_.find(id); it != outstanding_.end()) {
      it->second.set_exception(std::current_exception());
      outstanding_.erase(it);
    }
  }
  return future;
}

json Session::await(std::future<json> pending, const std::string& what) {
  json response = pending.get();
  if (auto it = response.find("error"); it != response.end()) {
    throw BackendError(fmt::format("{} (request {}): worker error: {}", what, response["request_id"].dump(),
                                   it->is_string() ? it->get<std::string>() : it->dump()));
  }
  return response;
}

std::vector<std::string> Session::generate(const std::string& prompt, int k, std::uint64_t seed) {
  json response = await(send(protocol::to_json(protocol::GenerateRequest{"", prompt, k, seed})), "generate");
  const auto rid = response["request_id"].dump();
  auto images = response.find("images");
  if (images == response.end() || !images->is_array()) {
    throw ContractViolation(fmt::format("generate (request {}): response carries no images", rid));
  }
  if (images->size() != static_cast<std::size_t>(k)) {
    throw ContractViolation(
        fmt::format("generate (request {}): {} images returned, {} requested", rid, images->size(), k));
  }
  std::vector<std::string> out;
  for (const auto& h : *images) {
    if (!h.is_string()) throw ContractViolation(fmt::format("generate (request {}): non-string image handle", rid));
    out.push_back(h.get<std::string>());
  }
  return out;
}

double Session::proximity(const std::string& image, const std::string& reference_id, const std::string& metric) {
  json response = await(send(protocol::to_json(protocol::ProximityRequest{"", image, reference_id, metric})),
                        "proximity");
  auto score = response.find("score");
  if (score == response.end() || !score->is_number()) {
    throw ContractViolation(
        fmt::format("proximity (request {}): response carries no numeric score", response["request_id"].dump()));
  }
  const double value = score->get<double>();
  if (!std::isfinite(value)) {
    throw ContractViolation(fmt::format("proximity (request {}): non-finite score", response["request_id"].dump()));
  }
  return value;
}

// ---------------------------------------------------------------------------

WorkerSpec WorkerSpec::parse(std::string_view text) {
  WorkerSpec spec;
  if (text == "mock") return spec;
  if (text.rfind("worker:", 0) == 0) {
    spec.kind = Kind::kSubprocess;
    spec.command = std::string(text.substr(7));
    if (spec.command.empty()) throw ConfigError("--backend worker: needs a command");
    return spec;
  }
  if (text.rfind("tcp:", 0) == 0) {
    spec.kind = Kind::kTcp;
    const auto addr = text.substr(4);
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos || colon == 0) throw ConfigError(fmt::format("bad tcp address \"{}\"", addr));
    spec.host = std::string(addr.substr(0, colon));
    try {
      spec.port = std::stoi(std::string(addr.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("bad tcp port in \"{}\"", addr));
    }
    if (spec.port <= 0 || spec.port > 65535) throw ConfigError(fmt::format("bad tcp port in \"{}\"", addr));
    return spec;
  }
  throw ConfigError(fmt::format("unknown backend \"{}\" (expected mock, worker:CMD or tcp:HOST:PORT)", text));
}

std::shared_ptr<Session> connect(const WorkerSpec& spec, const ConnectOptions& options) {
  std::unique_ptr<Transport> transport;
  switch (spec.kind) {
    case WorkerSpec::Kind::kMock: {
      if (options.catalog == nullptr) throw ConfigError("the mock backend needs a catalog");
      auto backend = std::make_shared<MockBackend>(*options.catalog, options.mock);
      transport = std::make_unique<LoopbackTransport>(std::move(backend), options.faults);
      break;
    }
    case WorkerSpec::Kind::kSubprocess:
      transport = SubprocessTransport::launch(spec.command);
      break;
    case WorkerSpec::Kind::kTcp:
      transport = connect_tcp(spec.host, spec.port);
      break;
  }
  auto session = Session::open(std::move(transport), options.session);
  spdlog::debug("worker handshake: {}", protocol::encode(protocol::to_json(session->handshake())));
  protocol::check_handshake(session->handshake(), options.registry, options.required_metrics, true, true);
  return session;
}

}  // namespace artarena
