#include "artarena/run_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artarena/error.hpp"
#include "artarena/hashing.hpp"

namespace artarena {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCrashExitCode = 86;

std::string_view kind_name(RecordKind kind) { return kind == RecordKind::kTrial ? "trial" : "duel"; }

std::string checksum(const json& payload) { return fmt::format("{:016x}", fnv1a64(payload.dump())); }

std::vector<double> doubles(const json& doc, const char* key) { return doc.at(key).get<std::vector<double>>(); }

void write_all(int fd, const char* data, std::size_t size, const fs::path& file) {
  while (size > 0) {
    const ssize_t n = ::write(fd, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ValidationError(fmt::format("{}: write failed: {}", file.string(), std::strerror(errno)));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

void check_snapshot(const fs::path& file, const std::string& expected, std::string_view what) {
  if (!fs::exists(file)) throw ValidationError(fmt::format("{}: missing {} snapshot", file.string(), what));
  const std::string stored = read_file(file);
  if (fnv1a64(stored) != fnv1a64(expected)) {
    throw ValidationError(fmt::format("{}: {} does not match the run's snapshot (hash {:016x}, invocation {:016x})",
                                      file.string(), what, fnv1a64(stored), fnv1a64(expected)));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Record payloads

json to_json(const TrialResult& trial) {
  return json{{"artwork_id", trial.artwork_id}, {"metric", trial.metric},
              {"prompt", trial.prompt},         {"images", trial.images},
              {"sample_scores", trial.sample_scores}, {"fit", trial.fit},
              {"failed", trial.failed},         {"error", trial.error}};
}

TrialResult trial_from_json(const json& doc) {
  TrialResult t;
  t.artwork_id = doc.at("artwork_id").get<std::string>();
  t.metric = doc.at("metric").get<std::string>();
  t.prompt = doc.at("prompt").get<std::string>();
  t.images = doc.at("images").get<std::vector<std::string>>();
  t.sample_scores = doubles(doc, "sample_scores");
  t.fit = doc.at("fit").get<double>();
  t.failed = doc.at("failed").get<bool>();
  t.error = doc.at("error").get<std::string>();
  return t;
}

json to_json(const DuelRecord& duel) {
  json rounds = json::array();
  for (const auto& r : duel.rounds) {
    rounds.push_back({{"round_index", r.round_index},
                      {"combo_id", r.combo_id},
                      {"prompt", r.prompt},
                      {"images", r.images},
                      {"scores_c", r.scores_c},
                      {"scores_d", r.scores_d},
                      {"prox_c", r.prox_c},
                      {"prox_d", r.prox_d},
                      {"award", to_string(r.award)}});
  }
  return json{{"metric", duel.metric},
              {"challenger_id", duel.challenger_id},
              {"defender_id", duel.defender_id},
              {"rounds", std::move(rounds)},
              {"wins_c", duel.wins_c},
              {"wins_d", duel.wins_d},
              {"winner", to_string(duel.winner)},
              {"aborted", duel.aborted},
              {"error", duel.error}};
}

DuelRecord duel_from_json(const json& doc) {
  DuelRecord d;
  d.metric = doc.at("metric").get<std::string>();
  d.challenger_id = doc.at("challenger_id").get<std::string>();
  d.defender_id = doc.at("defender_id").get<std::string>();
  for (const auto& r : doc.at("rounds")) {
    RoundOutcome round;
    round.round_index = r.at("round_index").get<int>();
    round.combo_id = r.at("combo_id").get<int>();
    round.prompt = r.at("prompt").get<std::string>();
    round.images = r.at("images").get<std::vector<std::string>>();
    round.scores_c = doubles(r, "scores_c");
    round.scores_d = doubles(r, "scores_d");
    round.prox_c = r.at("prox_c").get<double>();
    round.prox_d = r.at("prox_d").get<double>();
    round.award = parse_award(r.at("award").get<std::string>());
    d.rounds.push_back(std::move(round));
  }
  d.wins_c = doc.at("wins_c").get<int>();
  d.wins_d = doc.at("wins_d").get<int>();
  d.winner = parse_winner(doc.at("winner").get<std::string>());
  d.aborted = doc.at("aborted").get<bool>();
  d.error = doc.at("error").get<std::string>();
  return d;
}

std::string encode_record(RecordKind kind, const std::string& metric, std::size_t index, const json& payload) {
  json line{{"schema", kRecordSchema}, {"kind", kind_name(kind)}, {"metric", metric},
            {"index", index},          {"payload", payload},       {"checksum", checksum(payload)}};
  return line.dump() + "\n";
}

LogScan scan_log(const fs::path& file, RecordKind expected) {
  LogScan scan;
  if (!fs::exists(file)) return scan;
  const std::string text = read_file(file);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) {
      scan.torn_tail = true;
      break;
    }
    const std::string_view line(text.data() + pos, end - pos);
    auto bad = [&](std::string_view why) {
      return ValidationError(fmt::format("{}:{}: {}", file.string(), line_no, why));
    };
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw bad(fmt::format("malformed record: {}", e.what()));
    }
    try {
      if (doc.at("schema").get<int>() != kRecordSchema) {
        throw bad(fmt::format("unsupported record schema {}", doc.at("schema").dump()));
      }
      if (doc.at("kind").get<std::string>() != kind_name(expected)) {
        throw bad(fmt::format("expected a {} record, found {}", kind_name(expected), doc.at("kind").dump()));
      }
      LogEntry entry;
      entry.kind = expected;
      entry.metric = doc.at("metric").get<std::string>();
      entry.index = doc.at("index").get<std::size_t>();
      entry.payload = doc.at("payload");
      entry.line = line_no;
      if (doc.at("checksum").get<std::string>() != checksum(entry.payload)) throw bad("checksum mismatch");
      scan.entries.push_back(std::move(entry));
    } catch (const json::exception& e) {
      throw bad(fmt::format("malformed record: {}", e.what()));
    }
    pos = end + 1;
    scan.valid_bytes = pos;
  }
  return scan;
}

// ---------------------------------------------------------------------------
// OrderedLogWriter

OrderedLogWriter::OrderedLogWriter(const fs::path& file, std::vector<std::size_t> order,
                                   std::optional<std::size_t> crash_after)
    : file_(file), order_(std::move(order)), crash_after_(crash_after) {
  fd_ = ::open(file.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw ValidationError(fmt::format("{}: cannot open log: {}", file.string(), std::strerror(errno)));
  thread_ = std::thread([this] { run(); });
}

OrderedLogWriter::~OrderedLogWriter() {
  try {
    close();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
  }
}

void OrderedLogWriter::submit(std::size_t index, std::string line) {
  {
    std::lock_guard lock(mutex_);
    queue_.emplace_back(index, std::move(line));
  }
  wake_.notify_one();
}

void OrderedLogWriter::run() {
  std::unique_lock lock(mutex_);
  for (;;) {
    wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    while (!queue_.empty()) {
      pending_.insert(std::move(queue_.front()));
      queue_.pop_front();
    }
    while (next_ < order_.size() && failure_ == nullptr) {
      auto it = pending_.find(order_[next_]);
      if (it == pending_.end()) break;
      std::string line = std::move(it->second);
      pending_.erase(it);
      ++next_;
      lock.unlock();
      try {
        if (crash_after_ && written_ == *crash_after_) {
          write_all(fd_, line.data(), line.size() / 2, file_);
          std::_Exit(kCrashExitCode);
        }
        write_all(fd_, line.data(), line.size(), file_);
        ++written_;
      } catch (...) {
        lock.lock();
        failure_ = std::current_exception();
        continue;
      }
      lock.lock();
    }
    if (stopping_ && queue_.empty()) return;
  }
}

void OrderedLogWriter::close() {
  if (!thread_.joinable()) return;
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_one();
  thread_.join();
  ::fsync(fd_);
  ::close(fd_);
  fd_ = -1;
  if (failure_) std::rethrow_exception(failure_);
}

// ---------------------------------------------------------------------------
// RunStore

RunStore::RunStore(fs::path dir, TournamentConfig config, Catalog catalog)
    : dir_(std::move(dir)), config_(std::move(config)), catalog_(std::move(catalog)) {}

RunStore RunStore::create(const fs::path& dir, const TournamentConfig& config, const Catalog& catalog) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    throw ValidationError(fmt::format("{}: run directory already exists (use --resume to continue it)", dir.string()));
  }
  fs::create_directories(dir);
  write_file(dir / "config.toml", serialize_config(config));
  write_file(dir / "catalog.json", serialize_catalog(catalog));
  RunStore store(dir, config, catalog);
  store.touch();
  return store;
}

RunStore RunStore::resume(const fs::path& dir, const TournamentConfig& config, const Catalog& catalog) {
  if (!fs::is_directory(dir)) throw ValidationError(fmt::format("{}: no run directory to resume", dir.string()));
  check_snapshot(dir / "config.toml", serialize_config(config), "config");
  check_snapshot(dir / "catalog.json", serialize_catalog(catalog), "catalog");
  for (const auto& [name, kind] : {std::pair{"trials.jsonl", RecordKind::kTrial}, {"duels.jsonl", RecordKind::kDuel}}) {
    const fs::path log = dir / name;
    const LogScan scan = scan_log(log, kind);
    if (scan.torn_tail) {
      spdlog::warn("{}: discarding interrupted record after line {}", log.string(), scan.entries.size());
      fs::resize_file(log, scan.valid_bytes);
    }
  }
  RunStore store(dir, config, catalog);
  store.touch();
  return store;
}

RunStore RunStore::open(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError(fmt::format("{}: not a run directory", dir.string()));
  TournamentConfig config = load_config(dir / "config.toml");
  Catalog catalog = parse_catalog(read_file(dir / "catalog.json"), dir, CatalogLoadOptions{false});
  return RunStore(dir, std::move(config), std::move(catalog));
}

std::map<std::size_t, TrialResult> RunStore::trials(const std::string& metric) const {
  const LogScan scan = scan_log(trials_log(), RecordKind::kTrial);
  if (scan.torn_tail) spdlog::warn("{}: ignoring an interrupted last record", trials_log().string());
  std::map<std::size_t, TrialResult> out;
  for (const auto& entry : scan.entries) {
    if (entry.metric != metric) continue;
    try {
      out[entry.index] = trial_from_json(entry.payload);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: bad trial payload: {}", trials_log().string(), entry.line, e.what()));
    }
  }
  return out;
}

std::map<std::size_t, DuelRecord> RunStore::duels(const std::string& metric) const {
  const LogScan scan = scan_log(duels_log(), RecordKind::kDuel);
  if (scan.torn_tail) spdlog::warn("{}: ignoring an interrupted last record", duels_log().string());
  std::map<std::size_t, DuelRecord> out;
  for (const auto& entry : scan.entries) {
    if (entry.metric != metric) continue;
    try {
      out[entry.index] = duel_from_json(entry.payload);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: bad duel payload: {}", duels_log().string(), entry.line, e.what()));
    }
  }
  return out;
}

void RunStore::touch(const json& backend_metadata) const {
  const fs::path file = dir_ / "meta.json";
  json meta = json::object();
  if (fs::exists(file)) {
    try {
      meta = json::parse(read_file(file));
    } catch (const json::exception&) {
      meta = json::object();
    }
  }
  const std::string now = now_utc();
  if (!meta.contains("created")) meta["created"] = now;
  meta["updated"] = now;
  meta["config_hash"] = fmt::format("{:016x}", fnv1a64(serialize_config(config_)));
  meta["catalog_hash"] = fmt::format("{:016x}", fnv1a64(serialize_catalog(catalog_)));
  meta["record_schema"] = kRecordSchema;
  if (!backend_metadata.is_null()) meta["backend"] = backend_metadata;
  write_file(file, meta.dump(2) + "\n");
}

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw ValidationError(fmt::format("{}: cannot write", tmp.string()));
  }
  fs::rename(tmp, file);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("{}: cannot read", file.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace artarena
