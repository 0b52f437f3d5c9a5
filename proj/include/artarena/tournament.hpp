#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "artarena/analysis.hpp"
#include "artarena/arena.hpp"
#include "artarena/backend.hpp"
#include "artarena/run_store.hpp"

namespace artarena {

struct TournamentOptions {
  int jobs = 1;
  // False stops after Entry Trials.
  bool run_duels = true;
  // Fault injection: abrupt exit after this many duel records are written.
  std::optional<std::size_t> crash_after_duels;
};

/// Everything one metric's tournament produced, as read back from the logs.
struct MetricRun {
  std::string metric;
  MetricSpec spec;
  std::vector<TrialResult> trials;  // catalog order; empty until all trials are logged
  std::optional<FitSet> fitset;
  std::vector<DuelRecord> duels;  // round_robin_pairs order; empty until all duels are logged
  std::optional<Ledger> ledger;
};

/// Runs (or continues) every configured metric in the store: Entry Trials,
/// admission, round robin, ledger. Records already logged are skipped;
/// failed trials and aborted duels are retried.
std::vector<MetricRun> run_tournament(const RunStore& store, Backend& backend, const TournamentOptions& options = {});

/// Reassembles one metric from the logs without a backend.
MetricRun load_metric_run(const RunStore& store, const std::string& metric);

/// All report files for the run, keyed by path relative to the reports
/// directory. Deterministic in the run's logs and snapshots.
std::map<std::string, std::string> build_reports(const RunStore& store);

/// Sensitivity curves for every metric with a complete round robin.
std::vector<SensitivityCurve> build_sensitivity(const RunStore& store, const std::vector<double>& grid);

/// Writes build_reports(store) under out_dir.
void write_reports(const RunStore& store, const std::filesystem::path& out_dir);

}  // namespace artarena
