#include "artarena/protocol.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "artarena/error.hpp"

namespace artarena::protocol {

using nlohmann::json;

bool Handshake::can(std::string_view capability) const {
  return std::find(capabilities.begin(), capabilities.end(), capability) != capabilities.end();
}

const MetricAdvert* Handshake::metric(std::string_view key) const {
  for (const auto& m : metrics) {
    if (m.key == key) return &m;
  }
  return nullptr;
}

json to_json(const Handshake& hello) {
  json metrics = json::array();
  for (const auto& m : hello.metrics) {
    metrics.push_back({{"key", m.key},
                       {"orientation", std::string(to_string(m.orientation))},
                       {"valid_range", {m.range_min, m.range_max}}});
  }
  return {{"op", "hello"},
          {"protocol_version", hello.protocol_version},
          {"capabilities", hello.capabilities},
          {"metrics", std::move(metrics)},
          {"metadata", hello.metadata}};
}

Handshake handshake_from_json(const json& j) {
  Handshake hello;
  try {
    if (j.at("op").get<std::string>() != "hello") throw ProtocolError("first worker message is not a hello");
    hello.protocol_version = j.at("protocol_version").get<int>();
    hello.capabilities = j.at("capabilities").get<std::vector<std::string>>();
    for (const auto& m : j.at("metrics")) {
      MetricAdvert advert;
      advert.key = m.at("key").get<std::string>();
      advert.orientation = parse_orientation(m.at("orientation").get<std::string>());
      const auto& range = m.at("valid_range");
      if (!range.is_array() || range.size() != 2) throw ProtocolError("valid_range must be [min, max]");
      advert.range_min = range[0].get<double>();
      advert.range_max = range[1].get<double>();
      hello.metrics.push_back(std::move(advert));
    }
    if (auto it = j.find("metadata"); it != j.end()) hello.metadata = *it;
  } catch (const json::exception& e) {
    throw ProtocolError(fmt::format("malformed hello: {}", e.what()));
  } catch (const ValidationError& e) {
    throw ProtocolError(fmt::format("malformed hello: {}", e.what()));
  }
  return hello;
}

json to_json(const GenerateRequest& req) {
  return {{"op", "generate"}, {"prompt", req.prompt}, {"k", req.k}, {"seed", req.seed}, {"request_id", req.request_id}};
}

json to_json(const ProximityRequest& req) {
  return {{"op", "proximity"},
          {"image", req.image},
          {"reference", req.reference},
          {"metric", req.metric},
          {"request_id", req.request_id}};
}

json generate_response(const std::string& request_id, const std::vector<std::string>& images) {
  return {{"request_id", request_id}, {"images", images}};
}

json proximity_response(const std::string& request_id, double score) {
  return {{"request_id", request_id}, {"score", score}};
}

json error_response(const json& request_id, const std::string& message) {
  return {{"request_id", request_id}, {"error", message}};
}

std::string encode(const json& message) { return message.dump(); }

json decode(const std::string& line) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ProtocolError(fmt::format("message is not a JSON object: {}", line));
    return j;
  } catch (const json::parse_error& e) {
    throw ProtocolError(fmt::format("malformed message ({}): {}", e.what(), line));
  }
}

void check_handshake(const Handshake& hello, const MetricRegistry& registry,
                     const std::vector<std::string>& required_metrics, bool need_generate, bool need_proximity) {
  if (hello.protocol_version != kProtocolVersion) {
    throw ProtocolError(fmt::format("protocol version mismatch: worker speaks {}, engine speaks {}",
                                    hello.protocol_version, kProtocolVersion));
  }
  if (need_generate && !hello.can("generate")) throw ProtocolError("worker lacks the generate capability");
  if (need_proximity && !hello.can("proximity")) throw ProtocolError("worker lacks the proximity capability");

  for (const auto& advert : hello.metrics) {
    if (!registry.contains(advert.key)) continue;
    const auto& spec = registry.resolve(advert.key);
    if (spec.orientation != advert.orientation) {
      throw ProtocolError(fmt::format("metric \"{}\": worker orientation {} disagrees with engine orientation {}",
                                      advert.key, to_string(advert.orientation), to_string(spec.orientation)));
    }
  }
  if (need_proximity) {
    for (const auto& key : required_metrics) {
      if (hello.metric(key) == nullptr) {
        throw ProtocolError(fmt::format("worker does not advertise metric \"{}\"", key));
      }
    }
  }
}

}  // namespace artarena::protocol
