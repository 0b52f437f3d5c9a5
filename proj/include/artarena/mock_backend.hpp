#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artarena/backend.hpp"
#include "artarena/catalog.hpp"
#include "artarena/protocol.hpp"

namespace artarena {

struct MockOptions {
  // Standard deviation of the per-dimension Gaussian jitter added before
  // normalization. Zero keeps every score exact.
  double jitter = 0.0;
  // Artificial latency per generate call.
  int delay_ms = 0;
};

/// Deterministic synthetic backend. Every catalog artwork owns one basis axis.
/// A prompt's image vector is the normalized sum of the basis vectors of every
/// artwork whose title or artist appears in the prompt (as a whole-word,
/// case-insensitive phrase; each occurrence counts once). Proximity is the
/// cosine to the reference's axis, or 1 - cosine for aesthetics.
class MockBackend : public Backend {
 public:
  explicit MockBackend(Catalog catalog, MockOptions options = {});

  std::vector<std::string> generate(const std::string& prompt, int k, std::uint64_t seed) override;
  double proximity(const std::string& image, const std::string& reference_id, const std::string& metric) override;

  /// Un-normalized phrase counts per catalog axis.
  std::vector<double> style_weights(std::string_view prompt) const;

  /// The image vector for sample `sample` of a generate(prompt, k, seed) call.
  std::vector<double> image_vector(std::string_view prompt, std::uint64_t seed, int sample) const;

  const Catalog& catalog() const noexcept { return catalog_; }
  const MockOptions& options() const noexcept { return options_; }

  /// Handshake the mock advertises: both capabilities, the three built-in
  /// metrics with their registry orientation and range.
  protocol::Handshake hello() const;

  // Handle codec. Only tests and the mock itself may look inside a handle.
  static std::string encode_handle(const std::vector<double>& vec);
  static std::vector<double> decode_handle(std::string_view handle);

 private:
  Catalog catalog_;
  MockOptions options_;
  std::vector<std::vector<std::string>> title_tokens_;
  std::vector<std::vector<std::string>> artist_tokens_;
};

/// Lower-cased alphanumeric runs; bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view text);

struct MockWorkerFaults {
  int protocol_version = protocol::kProtocolVersion;
  int fail_generate = 0;        // answer the first N generate requests with an error
  bool corrupt_request_id = false;  // echo a request_id the engine never sent
  double score_override = 0.0;  // when use_score_override, every proximity returns this
  bool use_score_override = false;
};

/// Line-oriented protocol front end for MockBackend. Stateless apart from the
/// fault counters, so it can serve a loopback transport or a process' stdio.
class MockWorker {
 public:
  explicit MockWorker(MockBackend& backend, MockWorkerFaults faults = {});

  std::string hello_line() const;

  /// Response line for one request line, or nullopt for shutdown.
  std::optional<std::string> handle(const std::string& line);

 private:
  MockBackend& backend_;
  MockWorkerFaults faults_;
  std::atomic<int> generate_failures_left_;
};

}  // namespace artarena
