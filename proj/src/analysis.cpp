#include "artarena/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "artarena/error.hpp"

namespace artarena {

std::string_view to_string(Agreement agreement) {
  switch (agreement) {
    case Agreement::kChallengerAgree: return "challenger_agree";
    case Agreement::kDefenderAgree: return "defender_agree";
    case Agreement::kDisagree: return "disagree";
  }
  return "disagree";
}

ConsistencyMatrix build_consistency_matrix(std::span<const TrialResult> trials, const FitSet& fitset,
                                           std::span<const DuelRecord> duels, const MetricSpec& metric) {
  std::map<std::string, double, std::less<>> fits;
  for (const auto& t : trials) {
    if (!t.failed) fits[t.artwork_id] = t.fit;
  }
  ConsistencyMatrix m;
  m.metric = metric.key;

  // FitSet order is already best fit first with catalog position breaking
  // ties, which is the imitation rank.
  for (const auto& member : fitset.members) {
    if (fits.find(member.artwork_id) == fits.end()) {
      throw ValidationError(fmt::format("no successful trial for FitSet artwork \"{}\"", member.artwork_id));
    }
    m.order.push_back(member.artwork_id);
  }
  const std::size_t n = m.order.size();
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(m.order[i], i);

  std::vector<std::vector<const DuelRecord*>> by_pair(n, std::vector<const DuelRecord*>(n, nullptr));
  for (const auto& duel : duels) {
    auto c = index.find(duel.challenger_id);
    auto d = index.find(duel.defender_id);
    if (c == index.end() || d == index.end()) {
      throw ValidationError(fmt::format("duel ({}, {}) references an artwork outside the FitSet", duel.challenger_id,
                                        duel.defender_id));
    }
    by_pair[c->second][d->second] = &duel;
  }

  m.cells.assign(n, std::vector<std::optional<Agreement>>(n));
  m.row_challenger_agree.assign(n, 0);
  m.row_defender_agree.assign(n, 0);
  m.col_challenger_agree.assign(n, 0);
  m.col_defender_agree.assign(n, 0);

  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (r == c) continue;
      const DuelRecord* duel = by_pair[r][c];
      if (duel == nullptr) {
        throw ValidationError(fmt::format("missing duel ({}, {})", m.order[r], m.order[c]));
      }
      const double fit_row = metric.closeness(fits.at(m.order[r]));
      const double fit_col = metric.closeness(fits.at(m.order[c]));
      if (fit_row == fit_col && r < c) m.fit_ties.emplace_back(m.order[r], m.order[c]);
      if (duel->aborted) ++m.aborted_cells;

      Agreement label = Agreement::kDisagree;
      if (!duel->aborted) {
        if (fit_row > fit_col && duel->winner == Winner::kChallenger) label = Agreement::kChallengerAgree;
        if (fit_col > fit_row && duel->winner == Winner::kDefender) label = Agreement::kDefenderAgree;
      }
      m.cells[r][c] = label;
      if (label == Agreement::kChallengerAgree) {
        ++m.row_challenger_agree[r];
        ++m.col_challenger_agree[c];
        ++m.challenger_agree;
      } else if (label == Agreement::kDefenderAgree) {
        ++m.row_defender_agree[r];
        ++m.col_defender_agree[c];
        ++m.defender_agree;
      }
    }
  }
  m.total_agree = m.challenger_agree + m.defender_agree;
  return m;
}

// ---------------------------------------------------------------------------

std::vector<AwardedRound> awarded_rounds(std::span<const DuelRecord> duels, const MetricSpec& metric, double delta) {
  std::vector<AwardedRound> out;
  for (std::size_t i = 0; i < duels.size(); ++i) {
    if (duels[i].aborted) continue;
    for (const auto& round : duels[i].rounds) {
      const Award award = decide_round(round.prox_c, round.prox_d, metric, delta);
      if (award != Award::kNone) out.push_back({i, round.round_index, award});
    }
  }
  return out;
}

SensitivityCurve sweep_delta(std::span<const DuelRecord> duels, const MetricSpec& metric, std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) {
      throw ValidationError(fmt::format("delta grid value {} is not a finite non-negative number", grid[i]));
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ValidationError(fmt::format("delta grid must be strictly ascending ({} after {})", grid[i], grid[i - 1]));
    }
  }
  SensitivityCurve curve;
  curve.metric = metric.key;
  for (double delta : grid) {
    std::set<std::string> round_c, round_d, match_c, match_d;
    for (const auto& duel : duels) {
      if (duel.aborted) continue;
      int wins_c = 0;
      int wins_d = 0;
      for (const auto& round : duel.rounds) {
        const Award award = decide_round(round.prox_c, round.prox_d, metric, delta);
        if (award == Award::kChallenger) ++wins_c;
        if (award == Award::kDefender) ++wins_d;
      }
      if (wins_c > 0) round_c.insert(duel.challenger_id);
      if (wins_d > 0) round_d.insert(duel.defender_id);
      const Winner winner = decide_match(wins_c, wins_d);
      if (winner == Winner::kChallenger) match_c.insert(duel.challenger_id);
      if (winner == Winner::kDefender) match_d.insert(duel.defender_id);
    }
    curve.points.push_back({delta, static_cast<int>(round_c.size()), static_cast<int>(round_d.size()),
                            static_cast<int>(match_c.size()), static_cast<int>(match_d.size())});
  }
  return curve;
}

// ---------------------------------------------------------------------------

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FitDistributionStats fit_distribution(std::span<const TrialResult> trials) {
  std::vector<std::pair<double, std::string>> points;
  FitDistributionStats stats;
  for (const auto& t : trials) {
    if (t.failed) continue;
    points.emplace_back(t.fit, t.artwork_id);
    stats.metric = t.metric;
  }
  if (points.size() < 4) {
    throw ValidationError(fmt::format("fit distribution needs at least 4 trials (have {})", points.size()));
  }
  std::sort(points.begin(), points.end());
  std::vector<double> values;
  values.reserve(points.size());
  for (const auto& [fit, id] : points) values.push_back(fit);

  stats.count = values.size();
  stats.min = values.front();
  stats.max = values.back();
  stats.q1 = quantile(values, 0.25);
  stats.median = quantile(values, 0.5);
  stats.q3 = quantile(values, 0.75);
  stats.iqr = stats.q3 - stats.q1;
  stats.lower_fence = stats.q1 - 1.5 * stats.iqr;
  stats.upper_fence = stats.q3 + 1.5 * stats.iqr;
  stats.whisker_low = stats.max;
  stats.whisker_high = stats.min;
  for (const auto& [fit, id] : points) {
    if (fit < stats.lower_fence || fit > stats.upper_fence) {
      stats.outliers.push_back(id);
    } else {
      stats.whisker_low = std::min(stats.whisker_low, fit);
      stats.whisker_high = std::max(stats.whisker_high, fit);
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------

RankDeltaReport rank_deltas(const Ledger& before, const Ledger& after) {
  RankDeltaReport report;
  report.metric = after.metric.empty() ? before.metric : after.metric;
  std::map<std::string, int, std::less<>> before_rank;
  for (const auto& row : before.rows) before_rank.emplace(row.artwork_id, row.rank);

  std::set<std::string, std::less<>> seen;
  for (const auto& row : after.rows) {
    seen.insert(row.artwork_id);
    RankDelta d;
    d.artwork_id = row.artwork_id;
    d.rank_after = row.rank;
    if (auto it = before_rank.find(row.artwork_id); it != before_rank.end()) {
      d.rank_before = it->second;
      d.delta = it->second - row.rank;
      report.rows.push_back(std::move(d));
    } else {
      report.only_after.push_back(row.artwork_id);
    }
  }
  for (const auto& row : before.rows) {
    if (seen.count(row.artwork_id) == 0) report.only_before.push_back(row.artwork_id);
  }
  for (const auto& id : report.only_before) report.rows.push_back({id, before_rank.at(id), std::nullopt, std::nullopt});
  for (const auto& row : after.rows) {
    if (before_rank.count(row.artwork_id) == 0) report.rows.push_back({row.artwork_id, std::nullopt, row.rank, std::nullopt});
  }
  return report;
}

}  // namespace artarena
