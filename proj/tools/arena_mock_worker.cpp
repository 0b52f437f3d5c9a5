// Stand-alone mock worker speaking the wire protocol on stdin/stdout, or on
// one TCP connection with --listen.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "artarena/catalog.hpp"
#include "artarena/error.hpp"
#include "artarena/mock_backend.hpp"

namespace {

using artarena::MockWorker;

void serve_stdio(MockWorker& worker) {
  std::cout << worker.hello_line() << '\n' << std::flush;
  std::string line;
  while (std::getline(std::cin, line)) {
    auto response = worker.handle(line);
    if (!response) return;
    std::cout << *response << '\n' << std::flush;
  }
}

bool send_line(int fd, const std::string& text) {
  std::string line = text + "\n";
  const char* data = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    const ssize_t n = ::send(fd, data, left, MSG_NOSIGNAL);
    if (n <= 0) return false;
    data += n;
    left -= static_cast<std::size_t>(n);
  }
  return true;
}

int serve_tcp(MockWorker& worker, int port) {
  const int server = ::socket(AF_INET, SOCK_STREAM, 0);
  const int one = 1;
  ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(server, 1) != 0) {
    std::cerr << "arena-mock-worker: cannot listen on port " << port << '\n';
    return 1;
  }
  socklen_t len = sizeof addr;
  ::getsockname(server, reinterpret_cast<sockaddr*>(&addr), &len);
  std::cout << ntohs(addr.sin_port) << '\n' << std::flush;

  const int fd = ::accept(server, nullptr, nullptr);
  ::close(server);
  if (fd < 0) return 1;
  if (!send_line(fd, worker.hello_line())) return 1;
  std::string buffer;
  char chunk[4096];
  for (;;) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      const std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      auto response = worker.handle(line);
      if (!response) {
        ::close(fd);
        return 0;
      }
      if (!send_line(fd, *response)) {
        ::close(fd);
        return 1;
      }
    }
  }
  ::close(fd);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Deterministic mock worker for the arena wire protocol", "arena-mock-worker"};
  std::string catalog_path;
  artarena::MockOptions options;
  artarena::MockWorkerFaults faults;
  int listen_port = -1;
  app.add_option("--catalog", catalog_path, "Catalog manifest")->required()->check(CLI::ExistingFile);
  app.add_option("--jitter", options.jitter, "Gaussian jitter of image vectors");
  app.add_option("--delay-ms", options.delay_ms, "Latency per generate call");
  app.add_option("--listen", listen_port, "Serve one TCP connection on this port (0 picks one, printed on stdout)");
  app.add_option("--protocol-version", faults.protocol_version, "Version to advertise");
  app.add_option("--fail-generate", faults.fail_generate, "Answer the first N generate requests with an error");
  app.add_flag("--corrupt-request-id", faults.corrupt_request_id, "Echo a request_id that was never sent");
  auto* override_opt = app.add_option("--score-override", faults.score_override, "Return this proximity score");
  CLI11_PARSE(app, argc, argv);
  faults.use_score_override = override_opt->count() > 0;

  try {
    artarena::MockBackend backend(artarena::load_catalog(catalog_path, {false}), options);
    MockWorker worker(backend, faults);
    if (listen_port >= 0) return serve_tcp(worker, listen_port);
    serve_stdio(worker);
  } catch (const artarena::ArenaError& e) {
    std::cerr << "arena-mock-worker: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
