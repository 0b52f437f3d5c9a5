#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "artarena/backend.hpp"
#include "artarena/mock_backend.hpp"
#include "artarena/protocol.hpp"

namespace artarena {

/// Bidirectional line channel to a worker.
class Transport {
 public:
  virtual ~Transport() = default;

  /// Writes one line; the newline is appended. Throws BackendError.
  virtual void write_line(const std::string& line) = 0;

  /// Next line without its newline, or nullopt at end of stream. With a
  /// timeout, throws BackendError when nothing arrives in time.
  virtual std::optional<std::string> read_line(std::optional<std::chrono::milliseconds> timeout = std::nullopt) = 0;

  /// Closes the engine-to-worker direction; the worker sees EOF.
  virtual void close_write() = 0;

  /// True when write_line may be called from several threads at once.
  virtual bool concurrent_writes() const { return false; }
};

/// Line transport over a pair of file descriptors (pipe or socket).
class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd);
  ~FdTransport() override;
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line(std::optional<std::chrono::milliseconds> timeout) override;
  void close_write() override;

 protected:
  void close_all();

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

/// Launches `/bin/sh -c command` and speaks over its stdin/stdout. The child's
/// stderr is inherited.
class SubprocessTransport : public FdTransport {
 public:
  static std::unique_ptr<SubprocessTransport> launch(const std::string& command);
  ~SubprocessTransport() override;

 private:
  SubprocessTransport(int read_fd, int write_fd, int pid);
  int pid_;
};

/// Connects to host:port over TCP with the same framing.
std::unique_ptr<FdTransport> connect_tcp(const std::string& host, int port);

/// In-process transport that feeds requests straight to a MockWorker.
class LoopbackTransport : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<MockBackend> backend, MockWorkerFaults faults = {});

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line(std::optional<std::chrono::milliseconds> timeout) override;
  void close_write() override;
  bool concurrent_writes() const override { return true; }

 private:
  std::shared_ptr<MockBackend> backend_;
  MockWorker worker_;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::string> outbox_;
  bool closed_ = false;
};

struct SessionOptions {
  std::chrono::milliseconds handshake_timeout{30000};
};

/// One connection to one worker. Requests from any thread are multiplexed
/// onto the transport and matched to responses by request_id; a reader thread
/// demultiplexes. A response naming an unknown request_id poisons the session:
/// every outstanding and later call fails with ProtocolError.
class Session : public Backend {
 public:
  static std::shared_ptr<Session> open(std::unique_ptr<Transport> transport, SessionOptions options = {});
  ~Session() override;
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const protocol::Handshake& handshake() const noexcept { return hello_; }

  /// Sends one request (request_id assigned here) and returns the raw
  /// response once it arrives.
  std::future<nlohmann::json> send(nlohmann::json request);

  std::vector<std::string> generate(const std::string& prompt, int k, std::uint64_t seed) override;
  double proximity(const std::string& image, const std::string& reference_id, const std::string& metric) override;

  /// Sends shutdown, closes the write side and joins the reader.
  void close();

 private:
  explicit Session(std::unique_ptr<Transport> transport);
  void reader_loop();
  void fail_all(const std::exception_ptr& error);
  nlohmann::json await(std::future<nlohmann::json> pending, const std::string& what);

  std::unique_ptr<Transport> transport_;
  protocol::Handshake hello_;
  std::mutex write_mutex_;
  std::mutex table_mutex_;
  std::map<std::string, std::promise<nlohmann::json>> outstanding_;
  std::exception_ptr poisoned_;
  std::uint64_t next_id_ = 1;
  std::thread reader_;
  std::atomic<bool> closed_{false};
};

/// Parsed --backend value: "mock", "worker:<command>", or "tcp:<host>:<port>".
struct WorkerSpec {
  enum class Kind { kMock, kSubprocess, kTcp };
  Kind kind = Kind::kMock;
  std::string command;
  std::string host;
  int port = 0;

  static WorkerSpec parse(std::string_view text);
};

struct ConnectOptions {
  SessionOptions session;
  // Used only by the mock.
  const Catalog* catalog = nullptr;
  MockOptions mock;
  MockWorkerFaults faults;
  // The handshake is checked against these.
  MetricRegistry registry;
  std::vector<std::string> required_metrics;
};

/// Opens a session, completes the handshake and checks it (version,
/// capabilities, metric orientations, required metrics).
std::shared_ptr<Session> connect(const WorkerSpec& spec, const ConnectOptions& options);

}  // namespace artarena
