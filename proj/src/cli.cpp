#include "artarena/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "artarena/analysis.hpp"
#include "artarena/arena.hpp"
#include "artarena/error.hpp"
#include "artarena/prompting.hpp"
#include "artarena/report.hpp"
#include "artarena/run_store.hpp"
#include "artarena/session.hpp"
#include "artarena/tournament.hpp"

namespace artarena {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::string catalog_path;
  std::string backend = "mock";
  std::vector<std::string> metrics;
  int jobs = 1;
};

void setup_logging() {
  auto logger = spdlog::get("arena");
  if (!logger) logger = spdlog::stderr_color_mt("arena");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^[%l]%$ %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ARENA_LOG_LEVEL"); env != nullptr && *env != '\0') {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      spdlog::warn("ARENA_LOG_LEVEL={} is not a log level; using info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig: return kExitConfig;
    case ErrorCategory::kParse:
    case ErrorCategory::kValidation: return kExitValidation;
    case ErrorCategory::kBackend:
    case ErrorCategory::kContract:
    case ErrorCategory::kProtocol: return kExitBackend;
  }
  return kExitInternal;
}

std::string anchor(const fs::path& base, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (base / p).lexically_normal().string();
}

/// Config from --config (or defaults) with paths anchored at the config
/// file's directory and --metric applied.
TournamentConfig effective_config(const Common& common) {
  TournamentConfig cfg;
  fs::path base = fs::current_path();
  if (!common.config_path.empty()) {
    cfg = load_config(common.config_path);
    base = fs::absolute(common.config_path).parent_path();
  }
  cfg.catalog = anchor(base, cfg.catalog);
  cfg.blending_dir = anchor(base, cfg.blending_dir);
  if (!common.metrics.empty()) cfg.metrics = common.metrics;
  validate_config(cfg);
  return cfg;
}

Catalog effective_catalog(const Common& common, const TournamentConfig& cfg) {
  const std::string path = !common.catalog_path.empty() ? common.catalog_path : cfg.catalog;
  if (path.empty()) throw ConfigError("no catalog: pass --catalog or set catalog in [tournament]");
  return load_catalog(path);
}

std::shared_ptr<Session> open_backend(const Common& common, const TournamentConfig& cfg, const Catalog& catalog) {
  ConnectOptions options;
  options.session.handshake_timeout =
      std::chrono::milliseconds(static_cast<long long>(cfg.handshake_timeout_s * 1000.0));
  options.catalog = &catalog;
  options.mock = MockOptions{cfg.mock_jitter, cfg.mock_delay_ms};
  options.registry = make_registry(cfg);
  options.required_metrics = cfg.metrics;
  return connect(WorkerSpec::parse(common.backend), options);
}

RunStore open_or_create(const fs::path& dir, bool resume, const TournamentConfig& cfg, const Catalog& catalog) {
  if (resume && fs::exists(dir) && !fs::is_empty(dir)) return RunStore::resume(dir, cfg, catalog);
  return RunStore::create(dir, cfg, catalog);
}

std::vector<std::string> selected_metrics(const std::vector<std::string>& configured,
                                          const std::vector<std::string>& filter) {
  if (filter.empty()) return configured;
  for (const auto& key : filter) {
    if (std::find(configured.begin(), configured.end(), key) == configured.end()) {
      throw ValidationError(fmt::format("metric \"{}\" is not part of this run", key));
    }
  }
  return filter;
}

void print_trials(const MetricRun& run, const Catalog& catalog) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : run.trials) {
    std::string rank = "-";
    if (run.fitset) {
      for (std::size_t i = 0; i < run.fitset->members.size(); ++i) {
        if (run.fitset->members[i].artwork_id == t.artwork_id) rank = std::to_string(i + 1);
      }
    }
    rows.push_back({t.artwork_id, catalog.at(t.artwork_id).title, t.failed ? "failed" : fmt::format("{:.6f}", t.fit),
                    rank});
  }
  fmt::print("Entry trials ({})\n\n{}\n", run.metric,
             report::text_table({"artwork_id", "title", "fit", "admitted"}, rows, {false, false, true, true}));
}

// ---------------------------------------------------------------------------

int cmd_trials(const Common& common, const std::string& run_dir, bool resume) {
  const TournamentConfig cfg = effective_config(common);
  const Catalog catalog = effective_catalog(common, cfg);
  auto session = open_backend(common, cfg, catalog);
  if (run_dir.empty()) {
    const MetricRegistry registry = make_registry(cfg);
    for (const auto& key : cfg.metrics) {
      const MetricSpec& spec = registry.resolve(key);
      const ArenaContext ctx{catalog, cfg, spec, *session, *session};
      MetricRun run;
      run.metric = key;
      run.trials = run_entry_trials(ctx, TrialOptions{common.jobs, {}, {}});
      try {
        run.fitset = admit(run.trials, cfg, spec, catalog);
      } catch (const ValidationError& e) {
        spdlog::warn("{}", e.what());
      }
      print_trials(run, catalog);
    }
    session->close();
    return kExitOk;
  }
  const RunStore store = open_or_create(run_dir, resume, cfg, catalog);
  store.touch(session->handshake().metadata);
  TournamentOptions options;
  options.jobs = common.jobs;
  options.run_duels = false;
  for (const auto& run : run_tournament(store, *session, options)) print_trials(run, catalog);
  session->close();
  write_reports(store, store.reports_dir());
  fmt::print("run directory: {}\n", store.dir().string());
  return kExitOk;
}

int cmd_tournament(const Common& common, const std::string& run_dir, bool resume, std::optional<std::size_t> abort_after) {
  const TournamentConfig cfg = effective_config(common);
  const Catalog catalog = effective_catalog(common, cfg);
  auto session = open_backend(common, cfg, catalog);
  const RunStore store = open_or_create(run_dir, resume, cfg, catalog);
  store.touch(session->handshake().metadata);
  TournamentOptions options;
  options.jobs = common.jobs;
  options.crash_after_duels = abort_after;
  const auto runs = run_tournament(store, *session, options);
  session->close();
  write_reports(store, store.reports_dir());
  for (const auto& run : runs) {
    if (run.ledger) fmt::print("{}\n", report::ledger_text(*run.ledger, catalog));
  }
  fmt::print("run directory: {}\n", store.dir().string());
  return kExitOk;
}

int cmd_duel(const Common& common, const std::string& challenger_id, const std::string& defender_id,
             const std::string& out) {
  const TournamentConfig cfg = effective_config(common);
  const Catalog catalog = effective_catalog(common, cfg);
  const ArtworkRecord& challenger = catalog.at(challenger_id);
  const ArtworkRecord& defender = catalog.at(defender_id);
  auto session = open_backend(common, cfg, catalog);
  const MetricRegistry registry = make_registry(cfg);

  FitSet single;
  single.members.push_back({challenger.id, 0.0, catalog.position(challenger.id)});
  const auto prompt_sets = draw_prompt_sets(catalog, single, cfg);

  nlohmann::json records = nlohmann::json::array();
  for (const auto& key : cfg.metrics) {
    const MetricSpec& spec = registry.resolve(key);
    const ArenaContext ctx{catalog, cfg, spec, *session, *session};
    const DuelRecord duel = run_duel(ctx, challenger, defender, prompt_sets.at(challenger.id));
    records.push_back(to_json(duel));
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : duel.rounds) {
      rows.push_back({std::to_string(r.round_index), std::to_string(r.combo_id), fmt::format("{:.6f}", r.prox_c),
                      fmt::format("{:.6f}", r.prox_d), std::string(to_string(r.award))});
    }
    fmt::print("Duel {} (challenger) vs {} (defender), {}\n\n{}\n", challenger.id, defender.id, key,
               report::text_table({"round", "combo", "prox_c", "prox_d", "award"}, rows, {true, true, true, true, false}));
    if (duel.aborted) {
      fmt::print("aborted: {}\n\n", duel.error);
    } else {
      fmt::print("winner: {} ({} to {})\n\n", to_string(duel.winner), duel.wins_c, duel.wins_d);
    }
  }
  session->close();
  if (!out.empty()) write_file(out, records.dump(2) + "\n");
  return kExitOk;
}

int cmd_ledger(const std::string& run_dir, const std::vector<std::string>& metrics) {
  const RunStore store = RunStore::open(run_dir);
  for (const auto& key : selected_metrics(store.config().metrics, metrics)) {
    const MetricRun run = load_metric_run(store, key);
    if (!run.ledger) throw ValidationError(fmt::format("{}: metric {} has no complete round robin", run_dir, key));
    fmt::print("{}\n", report::ledger_text(*run.ledger, store.catalog()));
  }
  return kExitOk;
}

int cmd_analyze(const std::string& run_dir, const std::string& out, const std::vector<double>& grid) {
  const RunStore store = RunStore::open(run_dir);
  const fs::path out_dir = out.empty() ? store.reports_dir() : fs::path(out);
  const auto files = build_reports(store);
  for (const auto& [name, text] : files) {
    write_file(out_dir / name, text);
    fmt::print("{}\n", (out_dir / name).string());
  }
  if (!grid.empty()) {
    const auto curves = build_sensitivity(store, grid);
    write_file(out_dir / "sensitivity.csv", report::sensitivity_csv(curves));
    fmt::print("{}\n", (out_dir / "sensitivity.csv").string());
  }
  return kExitOk;
}

int cmd_sensitivity(const std::string& run_dir, const std::vector<double>& grid, const std::string& out) {
  const RunStore store = RunStore::open(run_dir);
  const auto curves = build_sensitivity(store, grid);
  const std::string csv = report::sensitivity_csv(curves);
  write_file(out.empty() ? store.reports_dir() / "sensitivity.csv" : fs::path(out), csv);
  fmt::print("{}", csv);
  return kExitOk;
}

int cmd_rank_delta(const std::vector<std::string>& runs, const std::vector<std::string>& metrics,
                   const std::string& out) {
  if (runs.size() != 2) throw ValidationError("rank-delta takes --run twice: the run before, then the run after");
  const RunStore before = RunStore::open(runs[0]);
  const RunStore after = RunStore::open(runs[1]);
  std::vector<std::string> shared;
  for (const auto& key : after.config().metrics) {
    const auto& b = before.config().metrics;
    if (std::find(b.begin(), b.end(), key) != b.end()) shared.push_back(key);
  }
  if (shared.empty()) throw ValidationError("the two runs share no metric");
  for (const auto& key : selected_metrics(shared, metrics)) {
    const MetricRun run_b = load_metric_run(before, key);
    const MetricRun run_a = load_metric_run(after, key);
    if (!run_b.ledger) throw ValidationError(fmt::format("{}: metric {} has no complete round robin", runs[0], key));
    if (!run_a.ledger) throw ValidationError(fmt::format("{}: metric {} has no complete round robin", runs[1], key));
    const RankDeltaReport report = rank_deltas(*run_b.ledger, *run_a.ledger);
    if (!report.only_before.empty() || !report.only_after.empty()) {
      spdlog::warn("metric {}: the ledgers rank different artworks ({} only before, {} only after)", key,
                   report.only_before.size(), report.only_after.size());
    }
    fmt::print("{}\n", report::rank_delta_text(report, &after.catalog()));
    if (!out.empty()) {
      const fs::path dir = fs::path(out) / key;
      write_file(dir / "rank_delta.csv", report::rank_delta_csv(report));
      write_file(dir / "rank_delta.json", report::rank_delta_json(report));
      write_file(dir / "rank_delta.txt", report::rank_delta_text(report, &after.catalog()));
    }
  }
  return kExitOk;
}

int cmd_validate(const std::string& catalog_path, const std::vector<std::string>& blending, bool check_assets) {
  if (catalog_path.empty() && blending.empty()) throw ValidationError("nothing to validate: pass --catalog and/or --blending");
  std::optional<Catalog> catalog;
  if (!catalog_path.empty()) {
    catalog = load_catalog(catalog_path, CatalogLoadOptions{check_assets});
    fmt::print("{}: ok, {} artworks\n", catalog_path, catalog->size());
  }
  for (const auto& file : blending) {
    const std::vector<MotifEntry>* motifs = nullptr;
    if (catalog) {
      if (const ArtworkRecord* art = catalog->find(fs::path(file).stem().string())) motifs = &art->motifs;
    }
    const BlendingManifest manifest = parse_blending_manifest(read_file(file), motifs, file);
    fmt::print("{}: ok, {} motifs, {} combinations\n", file, manifest.num_motifs, manifest.items.size());
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Art Arena: entry trials, motif duels and influence ledgers for text-to-image models", "arena"};
  app.require_subcommand(1);

  Common common;
  std::string run_dir;
  std::string trials_run;
  std::string tournament_run = "arena-run";
  std::vector<std::string> run_dirs;
  bool resume = false;
  std::string out;
  std::vector<double> grid;
  std::string challenger;
  std::string defender;
  std::vector<std::string> blending;
  bool no_assets = false;
  std::size_t abort_after = 0;

  auto add_inputs = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Tournament config file")->check(CLI::ExistingFile);
    sub->add_option("--catalog", common.catalog_path, "Catalog manifest (overrides the config)")
        ->check(CLI::ExistingFile);
    sub->add_option("--backend", common.backend, "mock | worker:CMD | tcp:HOST:PORT")->capture_default_str();
    sub->add_option("--metric", common.metrics, "Comma-separated metric keys (overrides the config)")
        ->delimiter(',');
  };

  auto* trials = app.add_subcommand("trials", "Run Entry Trials and report fitness");
  add_inputs(trials);
  trials->add_option("--run", trials_run, "Run directory to record into");
  trials->add_flag("--resume", resume, "Continue an existing run directory");
  trials->add_option("--jobs", common.jobs, "Concurrent trials")->check(CLI::PositiveNumber);

  auto* tournament = app.add_subcommand("tournament", "Run trials, the round robin and the ledger end to end");
  add_inputs(tournament);
  tournament->add_option("--run", tournament_run, "Run directory")->capture_default_str();
  tournament->add_flag("--resume", resume, "Continue an interrupted run");
  tournament->add_option("--jobs", common.jobs, "Concurrent duels")->check(CLI::PositiveNumber);
  tournament->add_option("--abort-after", abort_after)->group("");

  auto* duel = app.add_subcommand("duel", "Run a single ordered match");
  add_inputs(duel);
  duel->add_option("--challenger", challenger, "Challenger artwork id")->required();
  duel->add_option("--defender", defender, "Defender artwork id")->required();
  duel->add_option("--out", out, "Write the duel records as JSON");

  auto* ledger = app.add_subcommand("ledger", "Print the influence ledger of a run");
  ledger->add_option("--run", run_dir, "Run directory")->required();
  ledger->add_option("--metric", common.metrics, "Metric keys to show")->delimiter(',');

  auto* analyze = app.add_subcommand("analyze", "Recompute every report of a run offline");
  analyze->add_option("--run", run_dir, "Run directory")->required();
  analyze->add_option("--out", out, "Report directory (default: <run>/reports)");
  analyze->add_option("--grid", grid, "Also write a delta sweep over these values")->delimiter(',');

  auto* sensitivity = app.add_subcommand("sensitivity", "Re-decide a run's duels over a grid of margins");
  sensitivity->add_option("--run", run_dir, "Run directory")->required();
  sensitivity->add_option("--grid", grid, "Ascending delta values, comma-separated")->delimiter(',')->required();
  sensitivity->add_option("--out", out, "CSV file (default: <run>/reports/sensitivity.csv)");

  auto* rank_delta = app.add_subcommand("rank-delta", "Compare ledger ranks of two runs");
  rank_delta->add_option("--run", run_dirs, "Run before, then run after (give --run twice)")->required()->expected(2);
  rank_delta->add_option("--metric", common.metrics, "Metric keys to compare")->delimiter(',');
  rank_delta->add_option("--out", out, "Report directory");

  auto* validate = app.add_subcommand("validate-manifest", "Check catalog and blending manifests");
  validate->add_option("--catalog", common.catalog_path, "Catalog manifest");
  validate->add_option("--blending", blending, "Blending manifest(s), named <artwork_id>.json");
  validate->add_flag("--no-assets", no_assets, "Skip the reference image existence check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*trials) return cmd_trials(common, trials_run, resume);
    if (*tournament) {
      return cmd_tournament(common, tournament_run, resume,
                            tournament->count("--abort-after") > 0 ? std::optional<std::size_t>(abort_after)
                                                                   : std::nullopt);
    }
    if (*duel) return cmd_duel(common, challenger, defender, out);
    if (*ledger) return cmd_ledger(run_dir, common.metrics);
    if (*analyze) return cmd_analyze(run_dir, out, grid);
    if (*sensitivity) return cmd_sensitivity(run_dir, grid, out);
    if (*rank_delta) return cmd_rank_delta(run_dirs, common.metrics, out);
    if (*validate) return cmd_validate(common.catalog_path, blending, !no_assets);
  } catch (const ArenaError& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace artarena
