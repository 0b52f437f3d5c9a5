#pragma once

#include <stdlib.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "artarena/arena.hpp"
#include "artarena/backend.hpp"
#include "artarena/catalog.hpp"
#include "artarena/error.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ARENA_FIXTURES_DIR) / name;
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "arena-test-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Artworks a0..a(n-1) with `motifs` motifs each; titles and artists are
/// distinct single words so nothing collides.
inline artarena::Catalog synthetic_catalog(int n, int motifs = 3) {
  std::vector<artarena::ArtworkRecord> records;
  for (int i = 0; i < n; ++i) {
    artarena::ArtworkRecord art;
    art.id = fmt::format("a{}", i);
    art.title = fmt::format("Title{}", i);
    art.artist = fmt::format("Painter{}", i);
    art.reference_image = fmt::format("images/a{}.png", i);
    for (int m = 0; m < motifs; ++m) {
      art.motifs.push_back({fmt::format("m{}", m), fmt::format("thing {} of work {}", m, i)});
    }
    records.push_back(std::move(art));
  }
  return artarena::Catalog(std::move(records));
}

/// Backend whose images are "<prompt>|<seed>|<k>" and whose scores come from
/// a caller-supplied function. Thread-safe.
class ScriptedBackend : public artarena::Backend {
 public:
  using ScoreFn = std::function<double(const std::string& image, const std::string& reference, const std::string& metric)>;

  explicit ScriptedBackend(ScoreFn score) : score_(std::move(score)) {}

  std::vector<std::string> generate(const std::string& prompt, int k, std::uint64_t seed) override {
    ++generate_calls;
    {
      std::lock_guard lock(mutex_);
      if (failing_.count(prompt) != 0) throw artarena::BackendError("scripted generate failure");
    }
    std::vector<std::string> images;
    for (int i = 0; i < k; ++i) images.push_back(fmt::format("{}|{}|{}", prompt, seed, i));
    return images;
  }

  double proximity(const std::string& image, const std::string& reference, const std::string& metric) override {
    ++proximity_calls;
    return score_(image, reference, metric);
  }

  void fail_prompt(const std::string& prompt) {
    std::lock_guard lock(mutex_);
    failing_.insert(prompt);
  }

  static std::string prompt_of(const std::string& image) { return image.substr(0, image.find('|')); }

  std::atomic<int> generate_calls{0};
  std::atomic<int> proximity_calls{0};

 private:
  ScoreFn score_;
  std::mutex mutex_;
  std::set<std::string> failing_;
};

struct EngineRun {
  std::vector<artarena::TrialResult> trials;
  artarena::FitSet fitset;
  std::vector<artarena::DuelRecord> duels;
  artarena::Ledger ledger;
};

/// Trials, admission, round robin and ledger in memory.
inline EngineRun run_engine(const artarena::Catalog& catalog, const artarena::TournamentConfig& config,
                            const artarena::MetricSpec& metric, artarena::Backend& backend, int jobs = 1) {
  const artarena::ArenaContext ctx{catalog, config, metric, backend, backend};
  EngineRun run;
  run.trials = artarena::run_entry_trials(ctx, {jobs, {}, {}});
  run.fitset = artarena::admit(run.trials, config, metric, catalog);
  const auto sets = artarena::draw_prompt_sets(catalog, run.fitset, config);
  run.duels = artarena::run_round_robin(ctx, run.fitset, sets, {jobs, {}, {}});
  run.ledger = artarena::build_ledger(run.duels, run.fitset);
  return run;
}

}  // namespace testing_support
