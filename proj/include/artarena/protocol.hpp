#pragma once

// Wire protocol between the engine and generation/proximity workers.
//
// Framing: one UTF-8 JSON object per line in each direction. The worker speaks
// first with a hello line; afterwards every engine request carries a
// request_id and every worker response echoes it. Responses may arrive out of
// order. Objects are serialized with sorted keys and no whitespace.

#include <cstdint>
#include <string>
#include <vector>

#include "artarena/catalog.hpp"
#include "json.hpp"

namespace artarena::protocol {

inline constexpr int kProtocolVersion = 1;

struct MetricAdvert {
  std::string key;
  Orientation orientation = Orientation::kHigherIsCloser;
  double range_min = 0.0;
  double range_max = 1.0;
};

struct Handshake {
  int protocol_version = kProtocolVersion;
  std::vector<std::string> capabilities;  // "generate", "proximity"
  std::vector<MetricAdvert> metrics;
  // Worker provenance (model id, sampler settings, adapter). Uninterpreted.
  nlohmann::json metadata = nlohmann::json::object();

  bool can(std::string_view capability) const;
  const MetricAdvert* metric(std::string_view key) const;
};

struct GenerateRequest {
  std::string request_id;
  std::string prompt;
  int k = 1;
  std::uint64_t seed = 0;
};

struct ProximityRequest {
  std::string request_id;
  std::string image;
  std::string reference;
  std::string metric;
};

nlohmann::json to_json(const Handshake& hello);
Handshake handshake_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GenerateRequest& req);
nlohmann::json to_json(const ProximityRequest& req);

nlohmann::json generate_response(const std::string& request_id, const std::vector<std::string>& images);
nlohmann::json proximity_response(const std::string& request_id, double score);
nlohmann::json error_response(const nlohmann::json& request_id, const std::string& message);

/// Compact, key-sorted, single line without the trailing newline.
std::string encode(const nlohmann::json& message);

/// Throws ProtocolError on malformed lines.
nlohmann::json decode(const std::string& line);

/// Refuses mismatched versions, missing capabilities, orientation
/// disagreements with the engine registry, and required metrics the worker
/// does not advertise. Throws ProtocolError.
void check_handshake(const Handshake& hello, const MetricRegistry& registry,
                     const std::vector<std::string>& required_metrics, bool need_generate, bool need_proximity);

}  // namespace artarena::protocol
