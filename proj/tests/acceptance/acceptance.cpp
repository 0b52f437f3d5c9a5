// Acceptance checks for the arena engine. One PASS/FAIL line per criterion;
// exit status is the number of failures.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <thread>

#include "artarena/analysis.hpp"
#include "artarena/arena.hpp"
#include "artarena/mock_backend.hpp"
#include "artarena/prompting.hpp"
#include "json.hpp"
#include "oracle.hpp"
#include "support.hpp"

extern char** environ;

using namespace artarena;
using testing_support::fixture;
using testing_support::run_engine;
using testing_support::synthetic_catalog;
using testing_support::TempDir;

namespace {

// Pinned tolerances.
constexpr double kStructureSeconds = 10.0;  // 20-artwork round robin under the mock
constexpr int kMeanUlps = 1;                // fit and round means vs the naive oracle
constexpr int kOracleTournaments = 50;
constexpr int kMonotoneTables = 1000;
constexpr int kOrientationTournaments = 100;
constexpr int kMaxMotifs = 12;
constexpr int kPermutations = 100;

struct Failure {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

bool within_ulps(double a, double b, int ulps) {
  if (a == b) return true;
  double x = a;
  for (int i = 0; i < ulps; ++i) {
    x = std::nextafter(x, b);
    if (x == b) return true;
  }
  return false;
}

int sign_of(Award a) { return a == Award::kChallenger ? 1 : (a == Award::kDefender ? -1 : 0); }
int sign_of(Winner w) { return w == Winner::kChallenger ? 1 : (w == Winner::kDefender ? -1 : 0); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> run_tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "meta.json") continue;
    files[std::filesystem::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

std::string first_difference(const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b) {
  for (const auto& [name, body] : a) {
    const auto it = b.find(name);
    if (it == b.end()) return name + " missing";
    if (it->second != body) return name + " differs";
  }
  for (const auto& [name, body] : b) {
    if (!a.count(name)) return name + " unexpected";
  }
  return "";
}

pid_t spawn_arena(const std::vector<std::string>& args, const std::filesystem::path& log) {
  std::vector<std::string> argv{ARENA_BIN};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<char*> raw;
  for (auto& a : argv) raw.push_back(a.data());
  raw.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  posix_spawn_file_actions_addopen(&actions, 2, log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, ARENA_BIN, &actions, nullptr, raw.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  require(rc == 0, "cannot spawn " + std::string(ARENA_BIN));
  return pid;
}

int wait_status(pid_t pid) {
  int raw = 0;
  ::waitpid(pid, &raw, 0);
  if (WIFEXITED(raw)) return WEXITSTATUS(raw);
  if (WIFSIGNALED(raw)) return 128 + WTERMSIG(raw);
  return -1;
}

int arena(const std::vector<std::string>& args, const std::filesystem::path& log) {
  return wait_status(spawn_arena(args, log));
}

std::size_t line_count(const std::filesystem::path& p) {
  const std::string text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// ---------------------------------------------------------------------------

std::string round_robin_structure() {
  const Catalog catalog = load_catalog(fixture("sd15_fidelity_fitset.json"));
  TournamentConfig config;
  config.rounds = 5;
  config.admission = Admission::TopN(20);
  config.seed = 2024;
  MockBackend mock(catalog, {0.1, 0});
  const auto start = std::chrono::steady_clock::now();
  const auto run = run_engine(catalog, config, resolve_metric("semantics"), mock, 1);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  require(run.fitset.members.size() == 20, "fitset size");
  require(run.duels.size() == 380, fmt::format("{} duels", run.duels.size()));
  std::size_t rounds = 0;
  std::map<std::string, int> as_c;
  std::map<std::string, int> as_d;
  for (const auto& duel : run.duels) {
    require(!duel.aborted, "aborted duel");
    rounds += duel.rounds.size();
    ++as_c[duel.challenger_id];
    ++as_d[duel.defender_id];
  }
  require(rounds == 1900, fmt::format("{} rounds", rounds));
  int max_c = 0;
  int max_d = 0;
  for (const auto& row : run.ledger.rows) {
    require(as_c[row.artwork_id] == 19 && as_d[row.artwork_id] == 19, row.artwork_id + " role count");
    max_c = std::max(max_c, row.challenger_wins);
    max_d = std::max(max_d, row.defender_wins);
  }
  require(max_c <= 19 && max_d <= 19, "wins above 19");
  require(seconds < kStructureSeconds, fmt::format("took {:.2f}s", seconds));
  return fmt::format("380 duels, 1900 rounds, max wins {}/{}, {:.2f}s", max_c, max_d, seconds);
}

std::string oracle_equivalence() {
  std::mt19937_64 rng(20240611);
  int decisions = 0;
  int refused_small = 0;
  int compared = 0;
  int extra = 0;
  for (int i = 0; compared < kOracleTournaments; ++i) {
    const int n = 3 + static_cast<int>(rng() % 4);
    TournamentConfig config;
    config.rounds = 1 + static_cast<int>(rng() % 5);
    config.samples = 1 + static_cast<int>(rng() % 3);
    config.seed = rng();
    config.delta = static_cast<double>(rng() % 3) * 0.05;
    const int pool = n + static_cast<int>(rng() % 3);
    if (rng() % 2 == 0) {
      config.admission = Admission::TopN(n);
    } else {
      config.admission = Admission::Threshold(0.3);
    }
    const Catalog catalog = synthetic_catalog(pool, 3 + static_cast<int>(rng() % 2));
    const bool higher = rng() % 2 == 0;
    const auto score = oracle::grid_scores(rng());
    oracle::Backend backend(score);
    const std::string tag = fmt::format("tournament {}", i);

    const auto want = oracle::evaluate(catalog, config, higher, score);
    if (want.fitset.size() < 2) {
      // The engine must refuse a FitSet too small for a round robin.
      bool refused = false;
      try {
        run_engine(catalog, config, resolve_metric(higher ? "semantics" : "aesthetics"), backend);
      } catch (const ValidationError&) {
        refused = true;
      }
      require(refused, tag + ": tiny fitset accepted");
      ++refused_small;
      continue;
    }
    const auto run = run_engine(catalog, config, resolve_metric(higher ? "semantics" : "aesthetics"), backend);
    for (const auto& t : run.trials) {
      require(within_ulps(t.fit, want.fit.at(t.artwork_id), kMeanUlps), tag + ": fit of " + t.artwork_id);
    }
    require(run.fitset.ids() == want.fitset, tag + ": fitset");
    require(run.duels.size() == want.matches.size(), tag + ": duel count");
    for (std::size_t m = 0; m < want.matches.size(); ++m) {
      const auto& got = run.duels[m];
      const auto& exp = want.matches[m];
      require(got.challenger_id == exp.challenger && got.defender_id == exp.defender, tag + ": pairing");
      require(got.rounds.size() == exp.rounds.size(), tag + ": round count");
      for (std::size_t r = 0; r < exp.rounds.size(); ++r) {
        require(within_ulps(got.rounds[r].prox_c, exp.rounds[r].prox_c, kMeanUlps) &&
                    within_ulps(got.rounds[r].prox_d, exp.rounds[r].prox_d, kMeanUlps),
                tag + ": round proximity");
        require(sign_of(got.rounds[r].award) == exp.rounds[r].award, tag + ": round award");
        ++decisions;
      }
      require(sign_of(got.winner) == exp.winner, tag + ": match winner");
      ++decisions;
    }
    for (const auto& row : run.ledger.rows) {
      const auto& exp = want.rows.at(row.artwork_id);
      require(row.challenger_wins == exp.challenger_wins && row.defender_wins == exp.defender_wins,
              tag + ": wins of " + row.artwork_id);
      require(row.rank == exp.rank, tag + ": rank of " + row.artwork_id);
      ++decisions;
    }
    // Only FitSets of 3 to 6 count toward the quota; threshold admission can
    // land outside that range and those are compared as extras.
    if (want.fitset.size() >= 3 && want.fitset.size() <= 6) {
      ++compared;
    } else {
      ++extra;
    }
  }
  return fmt::format("{} tournaments with N in 3..6 plus {} others compared, {} discrete decisions identical; "
                     "{} draws with a FitSet under 2 refused",
                     compared, extra, decisions, refused_small);
}

std::string tie_break() {
  std::vector<LedgerRow> rows{{"vg-green-wheat-fields", 13, 15, 0, 0, false},
                              {"cm-pool-waterlilies", 13, 15, 0, 0, false},
                              {"ld-madonna-litta", 16, 13, 0, 0, false}};
  const std::map<std::string, std::size_t, std::less<>> positions{
      {"vg-green-wheat-fields", 0}, {"cm-pool-waterlilies", 1}, {"ld-madonna-litta", 2}};
  rank_rows(rows, positions);
  require(rows[0].artwork_id == "ld-madonna-litta" && rows[0].rank == 1 && rows[0].total_wins == 29, "Madonna Litta not first");
  require(!rows[0].stable_tiebreak, "Madonna Litta flagged");
  require(rows[1].total_wins == 28 && rows[2].total_wins == 28, "totals");
  require(rows[1].artwork_id == "vg-green-wheat-fields" && rows[2].artwork_id == "cm-pool-waterlilies",
          "equal pair not in catalog order");
  require(rows[1].rank == 2 && rows[2].rank == 3, "ranks");
  require(rows[1].stable_tiebreak && rows[2].stable_tiebreak, "equal pair not flagged");
  return "Madonna Litta 29 ranks 1; equal (13,15) pair ordered by catalog position and flagged";
}

std::vector<DuelRecord> random_table(std::mt19937_64& rng) {
  const int n = 3 + static_cast<int>(rng() % 4);
  const int rounds = 1 + static_cast<int>(rng() % 5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<DuelRecord> duels;
  for (int c = 0; c < n; ++c) {
    for (int d = 0; d < n; ++d) {
      if (c == d) continue;
      DuelRecord duel;
      duel.challenger_id = fmt::format("a{}", c);
      duel.defender_id = fmt::format("a{}", d);
      for (int r = 1; r <= rounds; ++r) {
        RoundOutcome round;
        round.round_index = r;
        // Half the tables on a coarse grid so exact ties and gaps equal to a
        // grid delta occur.
        const bool coarse = rng() % 2 == 0;
        round.prox_c = coarse ? std::round(unit(rng) * 20) / 20 : unit(rng);
        round.prox_d = coarse ? std::round(unit(rng) * 20) / 20 : unit(rng);
        duel.rounds.push_back(round);
      }
      duels.push_back(duel);
    }
  }
  return duels;
}

std::string delta_monotonicity() {
  std::mt19937_64 rng(77);
  const std::vector<double> grid{0.0, 0.01, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 2.5};
  long subsets = 0;
  for (int t = 0; t < kMonotoneTables; ++t) {
    const auto duels = random_table(rng);
    const MetricSpec metric = resolve_metric(t % 2 == 0 ? "semantics" : "aesthetics");
    std::vector<AwardedRound> previous = awarded_rounds(duels, metric, grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const auto current = awarded_rounds(duels, metric, grid[i]);
      require(std::includes(previous.begin(), previous.end(), current.begin(), current.end()),
              fmt::format("table {}: awards at {} not a subset of {}", t, grid[i], grid[i - 1]));
      ++subsets;
      previous = current;
    }
    const auto curve = sweep_delta(duels, metric, grid);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      require(curve.points[i].round_challenger <= curve.points[i - 1].round_challenger &&
                  curve.points[i].round_defender <= curve.points[i - 1].round_defender,
              fmt::format("table {}: round counts grew", t));
    }
  }

  // Replaying engine tournaments at their configured delta.
  int replays = 0;
  for (double delta : {0.0, 0.05, 0.1, 0.2}) {
    for (const char* key : {"semantics", "aesthetics"}) {
      const Catalog catalog = synthetic_catalog(5);
      TournamentConfig config;
      config.admission = Admission::TopN(5);
      config.delta = delta;
      config.seed = rng();
      oracle::Backend backend(oracle::grid_scores(rng()));
      const MetricSpec metric = resolve_metric(key);
      const auto run = run_engine(catalog, config, metric, backend);
      std::vector<AwardedRound> stored;
      for (std::size_t i = 0; i < run.duels.size(); ++i) {
        for (const auto& r : run.duels[i].rounds) {
          if (r.award != Award::kNone) stored.push_back({i, r.round_index, r.award});
        }
      }
      require(awarded_rounds(run.duels, metric, delta) == stored, fmt::format("{} at {}: replay differs", key, delta));
      for (auto duel : run.duels) {
        const DuelRecord original = duel;
        redecide(duel, metric, delta);
        require(duel == original, fmt::format("{} at {}: redecided duel differs", key, delta));
      }
      const std::vector<double> one{delta};
      const auto point = sweep_delta(run.duels, metric, one).points.at(0);
      std::set<std::string> rc, rd, mc, md;
      for (const auto& duel : run.duels) {
        for (const auto& r : duel.rounds) {
          if (r.award == Award::kChallenger) rc.insert(duel.challenger_id);
          if (r.award == Award::kDefender) rd.insert(duel.defender_id);
        }
        if (duel.winner == Winner::kChallenger) mc.insert(duel.challenger_id);
        if (duel.winner == Winner::kDefender) md.insert(duel.defender_id);
      }
      require(point == SensitivityPoint{delta, static_cast<int>(rc.size()), static_cast<int>(rd.size()),
                                        static_cast<int>(mc.size()), static_cast<int>(md.size())},
              fmt::format("{} at {}: sweep counts differ", key, delta));
      ++replays;
    }
  }
  return fmt::format("{} tables, {} subset checks; {} stored tournaments replayed exactly", kMonotoneTables, subsets,
                     replays);
}

std::string orientation_invariance() {
  std::mt19937_64 rng(5);
  const MetricSpec up{"up", Orientation::kHigherIsCloser, -1.0, 1.0};
  const MetricSpec down{"down", Orientation::kLowerIsCloser, -1.0, 1.0};
  const std::vector<double> grid{0.0, 0.05, 0.1, 0.2, 0.4};
  for (int i = 0; i < kOrientationTournaments; ++i) {
    const int n = 3 + static_cast<int>(rng() % 4);
    const Catalog catalog = synthetic_catalog(n + 1);
    TournamentConfig config;
    config.admission = Admission::TopN(n);
    config.rounds = 1 + static_cast<int>(rng() % 5);
    config.samples = 1 + static_cast<int>(rng() % 3);
    config.delta = static_cast<double>(rng() % 3) * 0.1;
    config.seed = rng();
    const std::uint64_t salt = rng();
    oracle::Backend plain(oracle::grid_scores(salt));
    oracle::Backend negated(oracle::grid_scores(salt, -1.0));
    const auto a = run_engine(catalog, config, up, plain);
    const auto b = run_engine(catalog, config, down, negated);
    const std::string tag = fmt::format("tournament {}", i);

    require(a.fitset.ids() == b.fitset.ids(), tag + ": fitset");
    require(a.duels.size() == b.duels.size(), tag + ": duel count");
    for (std::size_t d = 0; d < a.duels.size(); ++d) {
      require(a.duels[d].winner == b.duels[d].winner, tag + ": winner");
      for (std::size_t r = 0; r < a.duels[d].rounds.size(); ++r) {
        require(a.duels[d].rounds[r].award == b.duels[d].rounds[r].award, tag + ": award");
      }
    }
    for (std::size_t r = 0; r < a.ledger.rows.size(); ++r) {
      auto x = a.ledger.rows[r];
      auto y = b.ledger.rows[r];
      require(x == y, tag + ": ledger row");
    }
    const auto ca = build_consistency_matrix(a.trials, a.fitset, a.duels, up);
    const auto cb = build_consistency_matrix(b.trials, b.fitset, b.duels, down);
    require(ca.order == cb.order && ca.cells == cb.cells, tag + ": consistency cells");
    require(ca.total_agree == cb.total_agree && ca.fit_ties == cb.fit_ties, tag + ": consistency totals");
    const auto sa = sweep_delta(a.duels, up, grid);
    const auto sb = sweep_delta(b.duels, down, grid);
    require(sa.points == sb.points, tag + ": sensitivity counts");
  }
  return fmt::format("{} tournaments: awards, winners, ranks, consistency cells, sensitivity counts equal",
                     kOrientationTournaments);
}

std::vector<MotifEntry> motifs_of(int n) {
  std::vector<MotifEntry> motifs;
  for (int i = 0; i < n; ++i) motifs.push_back({fmt::format("motif {}", i), fmt::format("detail number {}", i)});
  return motifs;
}

nlohmann::json manifest_json(const std::vector<MotifCombination>& items, int n) {
  nlohmann::json doc;
  doc["num_motifs"] = n;
  doc["expected_combinations"] = (std::int64_t{1} << n) - 1;
  doc["items"] = nlohmann::json::array();
  for (const auto& c : items) {
    doc["items"].push_back({{"combo_id", c.combo_id},
                            {"motifs", c.motif_names},
                            {"content_prompt", c.content_prompt},
                            {"style_injection_slot", c.style_injection_slot}});
  }
  return doc;
}

bool rejected(const nlohmann::json& doc, const std::vector<MotifEntry>& motifs) {
  try {
    parse_blending_manifest(doc.dump(), &motifs);
  } catch (const ValidationError&) {
    return true;
  }
  return false;
}

std::string combinatorics() {
  for (int n = 1; n <= kMaxMotifs; ++n) {
    const auto motifs = motifs_of(n);
    const auto items = enumerate_combinations(motifs);
    require(items.size() == (std::size_t{1} << n) - 1, fmt::format("N={}: {} items", n, items.size()));
    std::set<std::vector<std::string>> seen;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& c = items[i];
      require(c.combo_id == static_cast<int>(i) + 1, fmt::format("N={}: ids not contiguous", n));
      require(seen.insert(c.motif_names).second, fmt::format("N={}: duplicate", n));
      std::vector<int> positions;
      for (const auto& name : c.motif_names) positions.push_back(std::stoi(name.substr(6)));
      require(std::is_sorted(positions.begin(), positions.end()) &&
                  std::adjacent_find(positions.begin(), positions.end()) == positions.end(),
              fmt::format("N={}: motifs out of original order", n));
      if (i > 0) {
        const auto& prev = items[i - 1];
        require(prev.motif_names.size() <= c.motif_names.size(), fmt::format("N={}: cardinality decreases", n));
      }
    }
    // The enumerated list itself must pass manifest validation.
    require(!rejected(manifest_json(items, n), motifs), fmt::format("N={}: valid manifest rejected", n));
  }

  // Every adjacent swap across a cardinality boundary must be rejected.
  int violations = 0;
  for (int n = 2; n <= 6; ++n) {
    const auto motifs = motifs_of(n);
    const auto items = enumerate_combinations(motifs);
    for (std::size_t i = 1; i < items.size(); ++i) {
      if (items[i - 1].motif_names.size() == items[i].motif_names.size()) continue;
      auto swapped = items;
      std::swap(swapped[i - 1], swapped[i]);
      for (std::size_t j = 0; j < swapped.size(); ++j) swapped[j].combo_id = static_cast<int>(j) + 1;
      require(rejected(manifest_json(swapped, n), motifs), fmt::format("N={}: swap at {} accepted", n, i));
      ++violations;
    }
  }

  const Catalog catalog = load_catalog(fixture("six_artworks.json"));
  const auto& scream = catalog.at("em-the-scream");
  bool fixture_rejected = false;
  try {
    load_blending_manifest(fixture("blending_bad/em-the-scream.json"), &scream.motifs);
  } catch (const ValidationError& e) {
    fixture_rejected = std::string(e.what()).find("increasing-number-of-motifs") != std::string::npos;
  }
  require(fixture_rejected, "bad fixture manifest accepted");
  load_blending_manifest(fixture("blending/em-the-scream.json"), &scream.motifs);
  return fmt::format("N=1..{} give 2^N-1 ordered items; {} cardinality violations and the bad fixture rejected",
                     kMaxMotifs, violations);
}

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& name, int top_n, int delay_ms) {
  const auto file = dir / name;
  std::ofstream(file) << fmt::format(
      "[tournament]\nseed = 4242\nsamples = 2\nmetric = [\"semantics\", \"aesthetics\"]\ncatalog = \"{}\"\n\n"
      "[admission]\ntop_n = {}\n\n[mock]\njitter = 0.25\ndelay_ms = {}\n",
      fixture("sd15_fidelity_fitset.json").string(), top_n, delay_ms);
  return file;
}

std::string determinism_and_resume() {
  TempDir dir;
  const auto log = dir / "arena.log";
  const auto config = write_config(dir.path(), "run.toml", 12, 0);
  const std::string cfg = config.string();

  require(arena({"tournament", "--config", cfg, "--run", (dir / "serial").string(), "--jobs", "1"}, log) == 0,
          "serial run failed, see " + log.string());
  require(arena({"tournament", "--config", cfg, "--run", (dir / "parallel").string(), "--jobs", "8"}, log) == 0,
          "parallel run failed");
  const auto clean = run_tree(dir / "serial");
  require(line_count(dir / "serial" / "duels.jsonl") == 2 * 132, "duel record count");
  const std::string parallel_diff = first_difference(clean, run_tree(dir / "parallel"));
  require(parallel_diff.empty(), "--jobs 8: " + parallel_diff);

  // Injected crash after a fixed number of duels, then resume.
  const std::string crashed = (dir / "crashed").string();
  require(arena({"tournament", "--config", cfg, "--run", crashed, "--jobs", "8", "--abort-after", "37"}, log) == 86,
          "abort-after exit status");
  require(arena({"tournament", "--config", cfg, "--run", crashed, "--resume", "--jobs", "3"}, log) == 0, "resume failed");
  const std::string crash_diff = first_difference(clean, run_tree(crashed));
  require(crash_diff.empty(), "abort-after resume: " + crash_diff);

  // A real SIGKILL in the middle of the round robin. The same tournament with
  // a slow mock; the delay does not enter any recorded value.
  const auto slow = write_config(dir.path(), "slow.toml", 12, 1);
  const std::string killed = (dir / "killed").string();
  const pid_t pid = spawn_arena({"tournament", "--config", slow.string(), "--run", killed, "--jobs", "4"}, log);
  const auto duels = dir / "killed" / "duels.jsonl";
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  while (std::chrono::steady_clock::now() < deadline) {
    if (std::filesystem::exists(duels) && line_count(duels) >= 20) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::kill(pid, SIGKILL);
  const int killed_status = wait_status(pid);
  const std::size_t at_kill = std::filesystem::exists(duels) ? line_count(duels) : 0;
  require(killed_status == 128 + SIGKILL, fmt::format("worker finished before the kill (status {})", killed_status));
  require(at_kill < 2 * 132, "kill came too late");
  require(arena({"tournament", "--config", slow.string(), "--run", killed, "--resume", "--jobs", "8"}, log) == 0,
          "resume after SIGKILL failed");
  auto resumed = run_tree(dir / "killed");
  resumed.erase("config.toml");
  auto reference = clean;
  reference.erase("config.toml");
  const std::string kill_diff = first_difference(reference, resumed);
  require(kill_diff.empty(), "SIGKILL resume: " + kill_diff);

  return fmt::format("{} files identical across --jobs 1/8, abort-after 37 + resume, SIGKILL at {} duel records + resume",
                     clean.size(), at_kill);
}

Ledger ledger_from_order(const std::vector<std::string>& ids) {
  Ledger l;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    LedgerRow row;
    row.artwork_id = ids[i];
    row.rank = static_cast<int>(i) + 1;
    l.rows.push_back(row);
  }
  return l;
}

std::string rank_delta_arithmetic() {
  std::vector<std::string> before;
  for (int i = 1; i <= 20; ++i) before.push_back(i == 18 ? "pp-weeping-woman" : fmt::format("w{}", i));
  std::vector<std::string> after = before;
  after.erase(after.begin() + 17);
  after.insert(after.begin(), "pp-weeping-woman");
  const auto report = rank_deltas(ledger_from_order(before), ledger_from_order(after));
  const auto it = std::find_if(report.rows.begin(), report.rows.end(),
                               [](const auto& r) { return r.artwork_id == "pp-weeping-woman"; });
  require(it != report.rows.end() && it->rank_before == 18 && it->rank_after == 1 && it->delta == 17,
          "Weeping Woman is not +17");

  std::mt19937_64 rng(17);
  for (int t = 0; t < kPermutations; ++t) {
    auto shuffled = before;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    int sum = 0;
    for (const auto& row : rank_deltas(ledger_from_order(before), ledger_from_order(shuffled)).rows) sum += row.delta.value();
    require(sum == 0, fmt::format("permutation {} sums to {}", t, sum));
  }
  return fmt::format("18 -> 1 gives +17; {} permutations sum to 0", kPermutations);
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
      {"round-robin structure", round_robin_structure},
      {"oracle equivalence", oracle_equivalence},
      {"tie-break reproduction", tie_break},
      {"delta monotonicity", delta_monotonicity},
      {"orientation invariance", orientation_invariance},
      {"combinatorics", combinatorics},
      {"determinism and resume", determinism_and_resume},
      {"rank-delta arithmetic", rank_delta_arithmetic},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    try {
      const std::string detail = check();
      fmt::print("PASS {}: {}\n", name, detail);
    } catch (const Failure& f) {
      ++failures;
      fmt::print("FAIL {}: {}\n", name, f.what);
    } catch (const std::exception& e) {
      ++failures;
      fmt::print("FAIL {}: {}\n", name, e.what());
    }
    std::fflush(stdout);
  }
  return failures;
}
