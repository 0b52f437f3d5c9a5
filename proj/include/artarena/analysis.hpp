#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "artarena/arena.hpp"

namespace artarena {

// ---------------------------------------------------------------------------
// Imitation vs. duel consistency

enum class Agreement { kChallengerAgree, kDefenderAgree, kDisagree };

std::string_view to_string(Agreement agreement);

/// Rows are challengers, columns defenders, both in imitation-rank order
/// (best fit first). The diagonal is empty.
struct ConsistencyMatrix {
  std::string metric;
  std::vector<std::string> order;
  std::vector<std::vector<std::optional<Agreement>>> cells;

  std::vector<int> row_challenger_agree;
  std::vector<int> row_defender_agree;
  std::vector<int> col_challenger_agree;
  std::vector<int> col_defender_agree;
  int challenger_agree = 0;
  int defender_agree = 0;
  int total_agree = 0;

  // Pairs with exactly equal fit: no imitation winner, labelled Disagree.
  std::vector<std::pair<std::string, std::string>> fit_ties;
  // Duels that were aborted, labelled Disagree.
  int aborted_cells = 0;
};

/// Labels every ordered FitSet pair. ChallengerAgree: the row artwork has the
/// strictly better fit and won the duel as challenger. DefenderAgree: the
/// column artwork has the strictly better fit and won as defender. Anything
/// else, draws included, is Disagree.
ConsistencyMatrix build_consistency_matrix(std::span<const TrialResult> trials, const FitSet& fitset,
                                           std::span<const DuelRecord> duels, const MetricSpec& metric);

// ---------------------------------------------------------------------------
// Delta sensitivity

struct SensitivityPoint {
  double delta = 0.0;
  // Artworks with at least one round awarded in that role.
  int round_challenger = 0;
  int round_defender = 0;
  // Artworks with at least one match won in that role.
  int match_challenger = 0;
  int match_defender = 0;

  bool operator==(const SensitivityPoint&) const = default;
};

struct SensitivityCurve {
  std::string metric;
  std::vector<SensitivityPoint> points;
};

/// Re-decides every stored round and match at each delta. The grid must be
/// strictly ascending and non-negative. Aborted duels are skipped.
SensitivityCurve sweep_delta(std::span<const DuelRecord> duels, const MetricSpec& metric, std::span<const double> grid);

struct AwardedRound {
  std::size_t duel = 0;
  int round_index = 0;
  Award award = Award::kNone;
  auto operator<=>(const AwardedRound&) const = default;
};

/// Every round that receives an award at delta, in duel/round order.
std::vector<AwardedRound> awarded_rounds(std::span<const DuelRecord> duels, const MetricSpec& metric, double delta);

// ---------------------------------------------------------------------------
// Fitness distribution

struct FitDistributionStats {
  std::string metric;
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double iqr = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  // Outside [lower_fence, upper_fence], ordered by fit then id.
  std::vector<std::string> outliers;
};

/// Linear interpolation at (n - 1) * p over sorted values.
double quantile(std::span<const double> sorted, double p);

/// Tukey box statistics over successful trials. Needs at least 4.
FitDistributionStats fit_distribution(std::span<const TrialResult> trials);

// ---------------------------------------------------------------------------
// Rank deltas

struct RankDelta {
  std::string artwork_id;
  std::optional<int> rank_before;
  std::optional<int> rank_after;
  // rank_before - rank_after; positive moved toward rank 1.
  std::optional<int> delta;
};

struct RankDeltaReport {
  std::string metric;
  // Present in both, ordered by rank_after; then before-only, then after-only.
  std::vector<RankDelta> rows;
  std::vector<std::string> only_before;
  std::vector<std::string> only_after;
};

RankDeltaReport rank_deltas(const Ledger& before, const Ledger& after);

}  // namespace artarena
