#include "artarena/tournament.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artarena/error.hpp"
#include "artarena/report.hpp"

namespace artarena {

namespace {

std::vector<std::size_t> missing(std::size_t count, const std::vector<bool>& done) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (!done[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<MetricRun> run_tournament(const RunStore& store, Backend& backend, const TournamentOptions& options) {
  const TournamentConfig& config = store.config();
  const Catalog& catalog = store.catalog();
  const MetricRegistry registry = make_registry(config);
  std::vector<MetricRun> runs;

  for (const auto& key : config.metrics) {
    const MetricSpec& spec = registry.resolve(key);
    const ArenaContext ctx{catalog, config, spec, backend, backend};
    const std::size_t n = catalog.size();

    // Step 1: Entry Trials.
    std::vector<TrialResult> trials(n);
    std::vector<bool> trial_done(n, false);
    for (auto& [index, trial] : store.trials(key)) {
      if (index >= n || trial.artwork_id != catalog.artworks()[index].id) {
        throw ValidationError(fmt::format("{}: trial record {} for \"{}\" does not match the catalog",
                                          store.trials_log().string(), index, trial.artwork_id));
      }
      trial_done[index] = !trial.failed;
      trials[index] = std::move(trial);
    }
    {
      OrderedLogWriter writer(store.trials_log(), missing(n, trial_done));
      TrialOptions topts;
      topts.jobs = options.jobs;
      topts.skip = [&](std::size_t i) { return trial_done[i]; };
      topts.on_complete = [&](std::size_t i, const TrialResult& t) {
        writer.submit(i, encode_record(RecordKind::kTrial, key, i, to_json(t)));
      };
      auto fresh = run_entry_trials(ctx, topts);
      writer.close();
      for (std::size_t i = 0; i < n; ++i) {
        if (!trial_done[i]) trials[i] = std::move(fresh[i]);
      }
    }
    spdlog::info("metric {}: {} entry trials", key, n);
    if (!options.run_duels) {
      runs.push_back(load_metric_run(store, key));
      continue;
    }

    // Step 2: round robin over the FitSet.
    const FitSet fitset = admit(trials, config, spec, catalog);
    spdlog::info("metric {}: {} artworks admitted", key, fitset.size());
    const auto pairs = round_robin_pairs(fitset);
    std::vector<bool> duel_done(pairs.size(), false);
    for (const auto& [index, duel] : store.duels(key)) {
      if (index >= pairs.size() || pairs[index].first != duel.challenger_id ||
          pairs[index].second != duel.defender_id) {
        throw ValidationError(fmt::format("{}: duel record {} ({}, {}) does not match the round robin",
                                          store.duels_log().string(), index, duel.challenger_id, duel.defender_id));
      }
      duel_done[index] = !duel.aborted;
    }
    const auto prompt_sets = draw_prompt_sets(catalog, fitset, config);
    {
      OrderedLogWriter writer(store.duels_log(), missing(pairs.size(), duel_done), options.crash_after_duels);
      RoundRobinOptions ropts;
      ropts.jobs = options.jobs;
      ropts.skip = [&](std::size_t i) { return duel_done[i]; };
      ropts.on_complete = [&](std::size_t i, const DuelRecord& d) {
        writer.submit(i, encode_record(RecordKind::kDuel, key, i, to_json(d)));
      };
      run_round_robin(ctx, fitset, prompt_sets, ropts);
      writer.close();
    }

    // Step 3: the ledger, rebuilt from what was logged.
    MetricRun run = load_metric_run(store, key);
    if (run.ledger && run.ledger->aborted_matches > 0) {
      spdlog::warn("metric {}: {} aborted duel(s) excluded from the ledger; rerun with --resume to retry", key,
                   run.ledger->aborted_matches);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

MetricRun load_metric_run(const RunStore& store, const std::string& metric) {
  const Catalog& catalog = store.catalog();
  const MetricRegistry registry = make_registry(store.config());
  MetricRun run;
  run.metric = metric;
  run.spec = registry.resolve(metric);

  auto logged_trials = store.trials(metric);
  if (logged_trials.size() != catalog.size()) return run;
  for (auto& [index, trial] : logged_trials) {
    if (index >= catalog.size() || trial.artwork_id != catalog.artworks()[index].id) {
      throw ValidationError(fmt::format("{}: trial record {} for \"{}\" does not match the catalog",
                                        store.trials_log().string(), index, trial.artwork_id));
    }
    run.trials.push_back(std::move(trial));
  }
  try {
    run.fitset = admit(run.trials, store.config(), run.spec, catalog);
  } catch (const ValidationError& e) {
    spdlog::warn("{}", e.what());
    return run;
  }

  const auto pairs = round_robin_pairs(*run.fitset);
  auto logged_duels = store.duels(metric);
  if (pairs.empty() || logged_duels.size() != pairs.size()) return run;
  for (auto& [index, duel] : logged_duels) {
    if (index >= pairs.size() || pairs[index].first != duel.challenger_id || pairs[index].second != duel.defender_id) {
      throw ValidationError(fmt::format("{}: duel record {} ({}, {}) does not match the round robin",
                                        store.duels_log().string(), index, duel.challenger_id, duel.defender_id));
    }
    run.duels.push_back(std::move(duel));
  }
  run.ledger = build_ledger(run.duels, *run.fitset);
  return run;
}

std::map<std::string, std::string> build_reports(const RunStore& store) {
  const Catalog& catalog = store.catalog();
  std::map<std::string, std::string> files;
  for (const auto& key : store.config().metrics) {
    const MetricRun run = load_metric_run(store, key);
    const std::string dir = key + "/";
    if (run.trials.empty()) continue;
    const FitSet fitset = run.fitset.value_or(FitSet{});
    files[dir + "trials.csv"] = report::trials_csv(run.trials, fitset, catalog);

    std::size_t succeeded = 0;
    for (const auto& t : run.trials) succeeded += t.failed ? 0 : 1;
    if (succeeded >= 4) {
      const auto stats = fit_distribution(run.trials);
      files[dir + "fit_distribution.json"] = report::fit_distribution_json(stats);
      files[dir + "fit_distribution.txt"] = report::fit_distribution_text(stats);
    }
    if (!run.ledger) continue;
    files[dir + "ledger.csv"] = report::ledger_csv(*run.ledger, catalog);
    files[dir + "ledger.json"] = report::ledger_json(*run.ledger, catalog);
    files[dir + "ledger.txt"] = report::ledger_text(*run.ledger, catalog);

    const auto matrix = build_consistency_matrix(run.trials, *run.fitset, run.duels, run.spec);
    files[dir + "consistency.csv"] = report::consistency_csv(matrix);
    files[dir + "consistency.json"] = report::consistency_json(matrix);
    files[dir + "consistency.txt"] = report::consistency_text(matrix, catalog);
  }
  return files;
}

std::vector<SensitivityCurve> build_sensitivity(const RunStore& store, const std::vector<double>& grid) {
  std::vector<SensitivityCurve> curves;
  for (const auto& key : store.config().metrics) {
    const MetricRun run = load_metric_run(store, key);
    if (!run.ledger) {
      spdlog::warn("metric {}: round robin incomplete, no sensitivity curve", key);
      continue;
    }
    curves.push_back(sweep_delta(run.duels, run.spec, grid));
  }
  return curves;
}

void write_reports(const RunStore& store, const std::filesystem::path& out_dir) {
  for (const auto& [name, text] : build_reports(store)) write_file(out_dir / name, text);
}

}  // namespace artarena
