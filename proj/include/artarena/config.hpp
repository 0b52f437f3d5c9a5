#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "artarena/catalog.hpp"

namespace artarena {

/// How Entry Trials admit artworks into the FitSet.
struct Admission {
  enum class Kind { kThreshold, kTopN };

  Kind kind = Kind::kTopN;
  double threshold = 0.0;  // used when kind == kThreshold
  int top_n = 20;          // used when kind == kTopN

  static Admission Threshold(double tau) { return {Kind::kThreshold, tau, 0}; }
  static Admission TopN(int n) { return {Kind::kTopN, 0.0, n}; }

  bool operator==(const Admission&) const = default;
};

struct RetryPolicy {
  int retries = 2;
  double backoff_ms = 100.0;  // doubled after each failed attempt

  bool operator==(const RetryPolicy&) const = default;
};

struct TournamentConfig {
  int samples = 1;  // K: images per prompt
  int rounds = 5;   // R: rounds per match, equal to each prompt-set size
  Admission admission;
  double delta = 0.0;
  std::uint64_t seed = 0;
  // Each metric is an independent tournament over the same catalog.
  std::vector<std::string> metrics{"semantics"};

  int max_motifs = 20;
  std::string catalog;       // optional catalog manifest path
  std::string blending_dir;  // optional pre-authored blending manifests, <artwork_id>.json

  RetryPolicy retry;
  double handshake_timeout_s = 30.0;

  double mock_jitter = 0.0;
  int mock_delay_ms = 0;

  std::vector<MetricSpec> metric_overrides;

  bool operator==(const TournamentConfig&) const = default;
};

/// Parses the sectioned key = value format. Unknown sections or keys are
/// errors. Missing keys keep their defaults.
TournamentConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
TournamentConfig load_config(const std::filesystem::path& file);

/// Canonical form: every key written, fixed order. Used for the run snapshot
/// and its hash.
std::string serialize_config(const TournamentConfig& config);

/// Throws ConfigError if any field is out of its domain.
void validate_config(const TournamentConfig& config);

/// Built-in metrics with the config's overrides applied.
MetricRegistry make_registry(const TournamentConfig& config);

}  // namespace artarena
