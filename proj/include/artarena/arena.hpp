#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artarena/backend.hpp"
#include "artarena/catalog.hpp"
#include "artarena/config.hpp"
#include "artarena/prompting.hpp"

namespace artarena {

// ---------------------------------------------------------------------------
// Entry Trials

struct TrialResult {
  std::string artwork_id;
  std::string metric;
  std::string prompt;
  std::vector<std::string> images;
  std::vector<double> sample_scores;
  double fit = 0.0;
  // Backend failure after retries; such trials are never admitted.
  bool failed = false;
  std::string error;

  bool operator==(const TrialResult&) const = default;
};

struct FitSetMember {
  std::string artwork_id;
  double fit = 0.0;
  std::size_t catalog_position = 0;

  bool operator==(const FitSetMember&) const = default;
};

/// Admitted artworks, best fit first.
struct FitSet {
  std::string metric;
  Orientation orientation = Orientation::kHigherIsCloser;
  Admission admission;
  std::vector<FitSetMember> members;

  std::vector<std::string> ids() const;
  const FitSetMember* find(std::string_view id) const;
  std::size_t size() const noexcept { return members.size(); }
};

// ---------------------------------------------------------------------------
// Motif Duels

enum class Award { kChallenger, kDefender, kNone };
enum class Winner { kChallenger, kDefender, kDraw };

std::string_view to_string(Award award);
std::string_view to_string(Winner winner);
Award parse_award(std::string_view text);
Winner parse_winner(std::string_view text);

struct RoundOutcome {
  int round_index = 0;  // 1..R
  int combo_id = 0;
  std::string prompt;
  std::vector<std::string> images;
  std::vector<double> scores_c;  // per sample, against the challenger reference
  std::vector<double> scores_d;  // per sample, against the defender reference
  double prox_c = 0.0;
  double prox_d = 0.0;
  Award award = Award::kNone;

  bool operator==(const RoundOutcome&) const = default;
};

struct DuelRecord {
  std::string metric;
  std::string challenger_id;
  std::string defender_id;
  std::vector<RoundOutcome> rounds;
  int wins_c = 0;
  int wins_d = 0;
  Winner winner = Winner::kDraw;
  // Backend failure after retries; excluded from the ledger.
  bool aborted = false;
  std::string error;

  bool operator==(const DuelRecord&) const = default;
};

/// Arithmetic mean (sum / count). Empty input is an error.
double mean(std::span<const double> values);

/// Challenger iff closeness(c) - closeness(d) > delta; Defender iff
/// closeness(d) - closeness(c) > delta; else no award. Strict inequalities.
Award decide_round(double prox_c, double prox_d, const MetricSpec& metric, double delta);

/// Majority of awarded rounds; equal counts draw.
Winner decide_match(int wins_c, int wins_d);

/// Recounts awards and the winner from the stored rounds at the given delta.
void redecide(DuelRecord& duel, const MetricSpec& metric, double delta);

// ---------------------------------------------------------------------------
// Influence Ledger

struct LedgerRow {
  std::string artwork_id;
  int challenger_wins = 0;
  int defender_wins = 0;
  int total_wins = 0;
  int rank = 0;
  // Another row has the same (total, challenger) pair; the order between
  // them comes from catalog position alone.
  bool stable_tiebreak = false;

  bool operator==(const LedgerRow&) const = default;
};

/// Rows in rank order.
struct Ledger {
  std::string metric;
  std::vector<LedgerRow> rows;
  int decisive_matches = 0;
  int drawn_matches = 0;
  int aborted_matches = 0;

  const LedgerRow* find(std::string_view id) const;
  bool operator==(const Ledger&) const = default;
};

/// Sorts rows by total desc, challenger wins desc, catalog position asc, and
/// assigns 1-based ranks. positions maps artwork id to catalog position.
void rank_rows(std::vector<LedgerRow>& rows, const std::map<std::string, std::size_t, std::less<>>& positions);

/// Counts match wins per role over non-aborted duels; draws count nothing.
/// Throws ValidationError for a duel naming an artwork outside the FitSet.
Ledger build_ledger(std::span<const DuelRecord> duels, const FitSet& fitset);

// ---------------------------------------------------------------------------
// Execution

/// Everything a tournament step needs. References must outlive the call.
struct ArenaContext {
  const Catalog& catalog;
  const TournamentConfig& config;
  const MetricSpec& metric;
  Backend& generator;
  Backend& proximity;
};

std::uint64_t trial_seed(std::uint64_t tournament_seed, std::string_view artwork_id);
std::uint64_t round_seed(std::uint64_t tournament_seed, std::string_view challenger_id, std::string_view defender_id,
                         int round_index);

/// Runs body(i) for every i in [0, count) on up to `jobs` threads. The first
/// exception stops further scheduling and is rethrown after all threads join.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// Fitness test for one artwork.
TrialResult run_trial(const ArenaContext& ctx, const ArtworkRecord& artwork);

struct TrialOptions {
  int jobs = 1;
  // Indices (catalog order) already done; their slots are left default.
  std::function<bool(std::size_t)> skip;
  // Called from worker threads as each trial finishes.
  std::function<void(std::size_t, const TrialResult&)> on_complete;
};

/// Step 1 over the whole catalog, results in catalog order.
std::vector<TrialResult> run_entry_trials(const ArenaContext& ctx, const TrialOptions& options = {});

/// Applies the admission rule in closeness orientation. Ties are broken by
/// catalog position. Throws ValidationError when no trial succeeded or top_n
/// exceeds the successful trial count.
FitSet admit(std::span<const TrialResult> trials, const TournamentConfig& config, const MetricSpec& metric,
             const Catalog& catalog);

/// One ordered match. Backend failures after retries yield an aborted record;
/// contract violations propagate.
DuelRecord run_duel(const ArenaContext& ctx, const ArtworkRecord& challenger, const ArtworkRecord& defender,
                    const ChallengerPromptSet& prompt_set);

/// Ordered pairs (c, d), c != d, in FitSet order: c outer, d inner.
std::vector<std::pair<std::string, std::string>> round_robin_pairs(const FitSet& fitset);

/// Prompt sets for every FitSet member. Uses blending manifests from
/// config.blending_dir when present.
std::map<std::string, ChallengerPromptSet, std::less<>> draw_prompt_sets(const Catalog& catalog, const FitSet& fitset,
                                                                         const TournamentConfig& config);

struct RoundRobinOptions {
  int jobs = 1;
  std::function<bool(std::size_t)> skip;
  std::function<void(std::size_t, const DuelRecord&)> on_complete;
};

/// Step 2: every ordered pair once, results in round_robin_pairs order
/// regardless of completion order.
std::vector<DuelRecord> run_round_robin(const ArenaContext& ctx, const FitSet& fitset,
                                        const std::map<std::string, ChallengerPromptSet, std::less<>>& prompt_sets,
                                        const RoundRobinOptions& options = {});

}  // namespace artarena
