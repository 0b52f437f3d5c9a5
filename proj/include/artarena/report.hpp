#pragma once

#include <span>
#include <string>
#include <vector>

#include "artarena/analysis.hpp"
#include "artarena/arena.hpp"
#include "artarena/catalog.hpp"

namespace artarena::report {

/// One CSV field, quoted when it contains a comma, quote or line break.
std::string csv_field(std::string_view text);

/// Shortest text that parses back to the same double.
std::string number(double value);

/// Left-aligned text columns, right-aligned where `numeric` is set.
std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                       const std::vector<bool>& numeric);

/// "▲+3", "▼-2", or "0".
std::string delta_marker(int delta);

std::string trials_csv(std::span<const TrialResult> trials, const FitSet& fitset, const Catalog& catalog);

std::string ledger_csv(const Ledger& ledger, const Catalog& catalog);
std::string ledger_json(const Ledger& ledger, const Catalog& catalog);
std::string ledger_text(const Ledger& ledger, const Catalog& catalog);

std::string consistency_csv(const ConsistencyMatrix& matrix);
std::string consistency_json(const ConsistencyMatrix& matrix);
std::string consistency_text(const ConsistencyMatrix& matrix, const Catalog& catalog);

/// Header: metric,delta,challenger_count,defender_count,
/// match_challenger_count,match_defender_count.
std::string sensitivity_csv(std::span<const SensitivityCurve> curves);

std::string fit_distribution_json(const FitDistributionStats& stats);
std::string fit_distribution_text(const FitDistributionStats& stats);

std::string rank_delta_csv(const RankDeltaReport& report);
std::string rank_delta_json(const RankDeltaReport& report);
std::string rank_delta_text(const RankDeltaReport& report, const Catalog* catalog);

}  // namespace artarena::report
