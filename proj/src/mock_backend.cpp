#include "artarena/mock_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>

#include "artarena/error.hpp"
#include "artarena/hashing.hpp"

namespace artarena {

namespace {

constexpr std::string_view kHandlePrefix = "mock:";

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

int count_phrase(const std::vector<std::string>& haystack, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > haystack.size()) return 0;
  int count = 0;
  for (std::size_t i = 0; i + phrase.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < phrase.size() && match; ++j) match = haystack[i + j] == phrase[j];
    if (match) ++count;
  }
  return count;
}

double standard_normal(SplitMix64& rng) {
  // Box-Muller; 1 - unit() keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.unit();
  const double u2 = rng.unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

MockBackend::MockBackend(Catalog catalog, MockOptions options)
    : catalog_(std::move(catalog)), options_(options) {
  for (const auto& art : catalog_.artworks()) {
    title_tokens_.push_back(tokenize(art.title));
    artist_tokens_.push_back(tokenize(art.artist));
  }
}

std::vector<double> MockBackend::style_weights(std::string_view prompt) const {
  const auto tokens = tokenize(prompt);
  std::vector<double> weights(catalog_.size(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = count_phrase(tokens, title_tokens_[i]) + count_phrase(tokens, artist_tokens_[i]);
  }
  return weights;
}

std::vector<double> MockBackend::image_vector(std::string_view prompt, std::uint64_t seed, int sample) const {
  std::vector<double> vec = style_weights(prompt);
  if (options_.jitter > 0.0) {
    SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(sample)}));
    for (double& x : vec) x += options_.jitter * standard_normal(rng);
  }
  double norm_sq = 0.0;
  for (double x : vec) norm_sq += x * x;
  if (norm_sq > 0.0) {
    const double norm = std::sqrt(norm_sq);
    for (double& x : vec) x /= norm;
  }
  return vec;
}

std::vector<std::string> MockBackend::generate(const std::string& prompt, int k, std::uint64_t seed) {
  if (k < 1) throw BackendError(fmt::format("generate: k must be >= 1 (got {})", k));
  if (options_.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(options_.delay_ms));
  std::vector<std::string> images;
  images.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) images.push_back(encode_handle(image_vector(prompt, seed, i)));
  return images;
}

double MockBackend::proximity(const std::string& image, const std::string& reference_id, const std::string& metric) {
  const ArtworkRecord* ref = catalog_.find(reference_id);
  if (ref == nullptr) throw BackendError(fmt::format("unknown reference \"{}\"", reference_id));
  const auto vec = decode_handle(image);
  if (vec.size() != catalog_.size()) throw BackendError("image handle does not match the mock catalog");

  const std::size_t axis = catalog_.position(reference_id);
  double norm_sq = 0.0;
  for (double x : vec) norm_sq += x * x;
  const double cosine = norm_sq > 0.0 ? vec[axis] / std::sqrt(norm_sq) : 0.0;

  if (metric == "semantics" || metric == "fidelity") return cosine;
  if (metric == "aesthetics") return 1.0 - cosine;
  throw BackendError(fmt::format("unsupported metric \"{}\"", metric));
}

protocol::Handshake MockBackend::hello() const {
  protocol::Handshake hello;
  hello.capabilities = {"generate", "proximity"};
  const MetricRegistry builtin;
  for (const char* key : {"semantics", "aesthetics", "fidelity"}) {
    const auto& spec = builtin.resolve(key);
    hello.metrics.push_back({spec.key, spec.orientation, spec.range_min, spec.range_max});
  }
  hello.metadata = {{"backend", "mock"}, {"jitter", options_.jitter}, {"axes", catalog_.size()}};
  return hello;
}

std::string MockBackend::encode_handle(const std::vector<double>& vec) {
  std::string out(kHandlePrefix);
  for (std::size_t i = 0; i < vec.size(); ++i) {
    if (i != 0) out += ',';
    // Hex floats round-trip exactly on every platform.
    out += fmt::format("{:a}", vec[i]);
  }
  return out;
}

std::vector<double> MockBackend::decode_handle(std::string_view handle) {
  if (handle.substr(0, kHandlePrefix.size()) != kHandlePrefix) {
    throw BackendError(fmt::format("not a mock image handle: {}", handle.substr(0, 32)));
  }
  std::string body(handle.substr(kHandlePrefix.size()));
  std::vector<double> vec;
  if (body.empty()) return vec;
  const char* p = body.c_str();
  for (;;) {
    char* end = nullptr;
    const double x = std::strtod(p, &end);
    if (end == p) throw BackendError("malformed mock image handle");
    vec.push_back(x);
    if (*end == '\0') break;
    if (*end != ',') throw BackendError("malformed mock image handle");
    p = end + 1;
  }
  return vec;
}

// ---------------------------------------------------------------------------

MockWorker::MockWorker(MockBackend& backend, MockWorkerFaults faults)
    : backend_(backend), faults_(faults), generate_failures_left_(faults.fail_generate) {}

std::string MockWorker::hello_line() const {
  auto hello = backend_.hello();
  hello.protocol_version = faults_.protocol_version;
  return protocol::encode(protocol::to_json(hello));
}

std::optional<std::string> MockWorker::handle(const std::string& line) {
  using nlohmann::json;
  json request;
  try {
    request = protocol::decode(line);
  } catch (const ProtocolError& e) {
    return protocol::encode(protocol::error_response(nullptr, e.what()));
  }
  json id = request.contains("request_id") ? request["request_id"] : json(nullptr);
  if (faults_.corrupt_request_id) id = "unknown-" + (id.is_string() ? id.get<std::string>() : std::string("?"));

  try {
    const std::string op = request.at("op").get<std::string>();
    if (op == "shutdown") return std::nullopt;
    if (!id.is_string()) return protocol::encode(protocol::error_response(id, "missing request_id"));
    const std::string rid = id.get<std::string>();

    if (op == "generate") {
      if (generate_failures_left_.fetch_sub(1) > 0) {
        return protocol::encode(protocol::error_response(id, "injected generate failure"));
      }
      auto images = backend_.generate(request.at("prompt").get<std::string>(), request.at("k").get<int>(),
                                      request.at("seed").get<std::uint64_t>());
      return protocol::encode(protocol::generate_response(rid, images));
    }
    if (op == "proximity") {
      double score = backend_.proximity(request.at("image").get<std::string>(),
                                        request.at("reference").get<std::string>(),
                                        request.at("metric").get<std::string>());
      if (faults_.use_score_override) score = faults_.score_override;
      return protocol::encode(protocol::proximity_response(rid, score));
    }
    return protocol::encode(protocol::error_response(id, fmt::format("unknown op \"{}\"", op)));
  } catch (const nlohmann::json::exception& e) {
    return protocol::encode(protocol::error_response(id, fmt::format("bad request: {}", e.what())));
  } catch (const ArenaError& e) {
    return protocol::encode(protocol::error_response(id, e.what()));
  }
}

}  // namespace artarena
