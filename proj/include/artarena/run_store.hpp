#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "artarena/arena.hpp"
#include "artarena/catalog.hpp"
#include "artarena/config.hpp"
#include "json.hpp"

namespace artarena {

inline constexpr int kRecordSchema = 1;

nlohmann::json to_json(const TrialResult& trial);
TrialResult trial_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const DuelRecord& duel);
DuelRecord duel_from_json(const nlohmann::json& doc);

enum class RecordKind { kTrial, kDuel };

/// One log line (newline included):
/// {"checksum":..,"index":..,"kind":..,"metric":..,"payload":{..},"schema":1}
/// The checksum is fnv1a64 over the compact payload dump, as 16 hex digits.
std::string encode_record(RecordKind kind, const std::string& metric, std::size_t index, const nlohmann::json& payload);

struct LogEntry {
  RecordKind kind = RecordKind::kTrial;
  std::string metric;
  std::size_t index = 0;
  nlohmann::json payload;
  std::size_t line = 0;
};

struct LogScan {
  std::vector<LogEntry> entries;
  // Bytes up to and including the last complete, valid line.
  std::uintmax_t valid_bytes = 0;
  // The file ends in a partial line (interrupted write).
  bool torn_tail = false;
};

/// Reads and verifies a log. A bad record on a complete line throws
/// ValidationError naming file:line; only an unterminated last line is
/// tolerated, reported as torn_tail.
LogScan scan_log(const std::filesystem::path& file, RecordKind expected);

/// Appends records to one log file in a fixed order regardless of the order
/// they are submitted in. Submitters hand over finished lines; a single writer
/// thread owns the file.
class OrderedLogWriter {
 public:
  /// `order` lists the indices that will be submitted, in write order.
  /// With `crash_after`, the process writes that many records plus half of
  /// the next one and then exits abruptly (fault injection).
  OrderedLogWriter(const std::filesystem::path& file, std::vector<std::size_t> order,
                   std::optional<std::size_t> crash_after = std::nullopt);
  ~OrderedLogWriter();
  OrderedLogWriter(const OrderedLogWriter&) = delete;
  OrderedLogWriter& operator=(const OrderedLogWriter&) = delete;

  void submit(std::size_t index, std::string line);

  /// Waits until everything submitted so far that can be written is written.
  /// Rethrows a write failure.
  void close();

 private:
  void run();

  int fd_ = -1;
  std::filesystem::path file_;
  std::vector<std::size_t> order_;
  std::size_t next_ = 0;
  std::optional<std::size_t> crash_after_;
  std::size_t written_ = 0;

  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<std::pair<std::size_t, std::string>> queue_;
  std::map<std::size_t, std::string> pending_;
  bool stopping_ = false;
  std::exception_ptr failure_;
  std::thread thread_;
};

/// A run directory:
///   config.toml   canonical config snapshot
///   catalog.json  canonical catalog snapshot
///   trials.jsonl  trial records
///   duels.jsonl   duel records
///   meta.json     timestamps and backend metadata (not hashed)
///   reports/      derived tables, reproducible from the above
class RunStore {
 public:
  /// New run. Fails if the directory exists and is not empty.
  static RunStore create(const std::filesystem::path& dir, const TournamentConfig& config, const Catalog& catalog);

  /// Existing run. The invocation's config and catalog must serialize to the
  /// stored snapshots byte for byte. A torn last log line is truncated.
  static RunStore resume(const std::filesystem::path& dir, const TournamentConfig& config, const Catalog& catalog);

  /// Read-only view from the snapshots alone; no backend needed.
  static RunStore open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const TournamentConfig& config() const noexcept { return config_; }
  const Catalog& catalog() const noexcept { return catalog_; }
  std::filesystem::path trials_log() const { return dir_ / "trials.jsonl"; }
  std::filesystem::path duels_log() const { return dir_ / "duels.jsonl"; }
  std::filesystem::path reports_dir() const { return dir_ / "reports"; }

  /// Latest record per index for one metric.
  std::map<std::size_t, TrialResult> trials(const std::string& metric) const;
  std::map<std::size_t, DuelRecord> duels(const std::string& metric) const;

  /// Rewrites meta.json with an updated timestamp and optional backend info.
  void touch(const nlohmann::json& backend_metadata = nullptr) const;

 private:
  RunStore(std::filesystem::path dir, TournamentConfig config, Catalog catalog);

  std::filesystem::path dir_;
  TournamentConfig config_;
  Catalog catalog_;
};

/// Writes text to a file, replacing it atomically.
void write_file(const std::filesystem::path& file, const std::string& text);
std::string read_file(const std::filesystem::path& file);

}  // namespace artarena
