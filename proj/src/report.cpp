#include "artarena/report.hpp"

#include <algorithm>

#include <fmt/format.h>
#include "json.hpp"

namespace artarena::report {

namespace {

using ojson = nlohmann::ordered_json;

std::size_t display_width(std::string_view text) {
  std::size_t width = 0;
  for (unsigned char ch : text) {
    if ((ch & 0xC0) != 0x80) ++width;
  }
  return width;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += csv_field(fields[i]);
  }
  line += '\n';
  return line;
}

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

std::string title_of(const Catalog& catalog, std::string_view id) {
  const ArtworkRecord* art = catalog.find(id);
  return art != nullptr ? art->title : std::string();
}

std::string artist_of(const Catalog& catalog, std::string_view id) {
  const ArtworkRecord* art = catalog.find(id);
  return art != nullptr ? art->artist : std::string();
}

char cell_symbol(const std::optional<Agreement>& cell) {
  if (!cell) return '-';
  switch (*cell) {
    case Agreement::kChallengerAgree: return 'C';
    case Agreement::kDefenderAgree: return 'D';
    case Agreement::kDisagree: return '.';
  }
  return '.';
}

}  // namespace

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string number(double value) { return fmt::format("{}", value); }

std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                       const std::vector<bool>& numeric) {
  std::vector<std::size_t> widths(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = display_width(header[c]);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) {
      widths[c] = std::max(widths[c], display_width(row[c]));
    }
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < widths.size(); ++c) {
      const std::string& cell = c < cells.size() ? cells[c] : std::string();
      const std::string pad(widths[c] - display_width(cell), ' ');
      if (c > 0) line += "  ";
      const bool right = c < numeric.size() && numeric[c];
      line += right ? pad + cell : cell + pad;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + "\n";
  };
  std::string out = emit(header);
  std::vector<std::string> rule;
  for (std::size_t w : widths) rule.emplace_back(w, '-');
  out += emit(rule);
  for (const auto& row : rows) out += emit(row);
  return out;
}

std::string delta_marker(int delta) {
  if (delta > 0) return fmt::format("▲+{}", delta);
  if (delta < 0) return fmt::format("▼{}", delta);
  return "0";
}

// ---------------------------------------------------------------------------

std::string trials_csv(std::span<const TrialResult> trials, const FitSet& fitset, const Catalog& catalog) {
  std::string out = join_csv({"artwork_id", "title", "artist", "status", "fit", "admitted", "fit_rank"});
  for (const auto& t : trials) {
    std::string rank;
    for (std::size_t i = 0; i < fitset.members.size(); ++i) {
      if (fitset.members[i].artwork_id == t.artwork_id) rank = std::to_string(i + 1);
    }
    out += join_csv({t.artwork_id, title_of(catalog, t.artwork_id), artist_of(catalog, t.artwork_id),
                     t.failed ? "failed" : "ok", t.failed ? "" : number(t.fit), rank.empty() ? "false" : "true", rank});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string ledger_csv(const Ledger& ledger, const Catalog& catalog) {
  std::string out = join_csv(
      {"rank", "artwork_id", "title", "artist", "challenger_wins", "defender_wins", "total_wins", "stable_tiebreak"});
  for (const auto& row : ledger.rows) {
    out += join_csv({std::to_string(row.rank), row.artwork_id, title_of(catalog, row.artwork_id),
                     artist_of(catalog, row.artwork_id), std::to_string(row.challenger_wins),
                     std::to_string(row.defender_wins), std::to_string(row.total_wins),
                     row.stable_tiebreak ? "true" : "false"});
  }
  return out;
}

std::string ledger_json(const Ledger& ledger, const Catalog& catalog) {
  ojson doc;
  doc["metric"] = ledger.metric;
  doc["decisive_matches"] = ledger.decisive_matches;
  doc["drawn_matches"] = ledger.drawn_matches;
  doc["aborted_matches"] = ledger.aborted_matches;
  doc["tie_break"] = "total_wins desc, challenger_wins desc, catalog position asc";
  ojson rows = ojson::array();
  for (const auto& row : ledger.rows) {
    rows.push_back({{"rank", row.rank},
                    {"artwork_id", row.artwork_id},
                    {"title", title_of(catalog, row.artwork_id)},
                    {"artist", artist_of(catalog, row.artwork_id)},
                    {"challenger_wins", row.challenger_wins},
                    {"defender_wins", row.defender_wins},
                    {"total_wins", row.total_wins},
                    {"stable_tiebreak", row.stable_tiebreak}});
  }
  doc["rows"] = std::move(rows);
  return dump(doc);
}

std::string ledger_text(const Ledger& ledger, const Catalog& catalog) {
  std::vector<std::vector<std::string>> rows;
  bool any_tiebreak = false;
  for (const auto& row : ledger.rows) {
    any_tiebreak = any_tiebreak || row.stable_tiebreak;
    rows.push_back({std::to_string(row.rank) + (row.stable_tiebreak ? "*" : ""),
                    fmt::format("{}, {}", artist_of(catalog, row.artwork_id), title_of(catalog, row.artwork_id)),
                    std::to_string(row.challenger_wins), std::to_string(row.defender_wins),
                    std::to_string(row.total_wins)});
  }
  std::string out = fmt::format("Influence ledger ({})\n\n", ledger.metric);
  out += text_table({"rank", "artwork", "challenger", "defender", "total"}, rows, {true, false, true, true, true});
  out += fmt::format("\n{} decisive, {} drawn, {} aborted matches\n", ledger.decisive_matches, ledger.drawn_matches,
                     ledger.aborted_matches);
  if (any_tiebreak) out += "* order within equal (total, challenger) pairs follows catalog position\n";
  return out;
}

// ---------------------------------------------------------------------------

std::string consistency_csv(const ConsistencyMatrix& matrix) {
  std::vector<std::string> header{"challenger"};
  header.insert(header.end(), matrix.order.begin(), matrix.order.end());
  header.emplace_back("row_challenger_agree");
  header.emplace_back("row_defender_agree");
  std::string out = join_csv(header);
  const std::size_t n = matrix.order.size();
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<std::string> fields{matrix.order[r]};
    for (std::size_t c = 0; c < n; ++c) {
      fields.emplace_back(matrix.cells[r][c] ? std::string(to_string(*matrix.cells[r][c])) : "");
    }
    fields.push_back(std::to_string(matrix.row_challenger_agree[r]));
    fields.push_back(std::to_string(matrix.row_defender_agree[r]));
    out += join_csv(fields);
  }
  std::vector<std::string> col_c{"col_challenger_agree"};
  std::vector<std::string> col_d{"col_defender_agree"};
  for (std::size_t c = 0; c < n; ++c) {
    col_c.push_back(std::to_string(matrix.col_challenger_agree[c]));
    col_d.push_back(std::to_string(matrix.col_defender_agree[c]));
  }
  col_c.push_back(std::to_string(matrix.challenger_agree));
  col_c.emplace_back("");
  col_d.emplace_back("");
  col_d.push_back(std::to_string(matrix.defender_agree));
  out += join_csv(col_c);
  out += join_csv(col_d);
  return out;
}

std::string consistency_json(const ConsistencyMatrix& matrix) {
  ojson doc;
  doc["metric"] = matrix.metric;
  doc["order"] = matrix.order;
  ojson cells = ojson::array();
  for (const auto& row : matrix.cells) {
    ojson line = ojson::array();
    for (const auto& cell : row) line.push_back(cell ? ojson(to_string(*cell)) : ojson(nullptr));
    cells.push_back(std::move(line));
  }
  doc["cells"] = std::move(cells);
  doc["row_challenger_agree"] = matrix.row_challenger_agree;
  doc["row_defender_agree"] = matrix.row_defender_agree;
  doc["col_challenger_agree"] = matrix.col_challenger_agree;
  doc["col_defender_agree"] = matrix.col_defender_agree;
  doc["challenger_agree"] = matrix.challenger_agree;
  doc["defender_agree"] = matrix.defender_agree;
  doc["total_agree"] = matrix.total_agree;
  ojson ties = ojson::array();
  for (const auto& [a, b] : matrix.fit_ties) ties.push_back({a, b});
  doc["fit_ties"] = std::move(ties);
  doc["aborted_cells"] = matrix.aborted_cells;
  doc["draws"] = "disagree";
  return dump(doc);
}

std::string consistency_text(const ConsistencyMatrix& matrix, const Catalog& catalog) {
  const std::size_t n = matrix.order.size();
  std::vector<std::string> header{""};
  for (std::size_t c = 0; c < n; ++c) header.push_back(fmt::format("A{}", c + 1));
  header.emplace_back("C");
  header.emplace_back("D");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<std::string> row{fmt::format("A{}", r + 1)};
    for (std::size_t c = 0; c < n; ++c) row.emplace_back(1, cell_symbol(matrix.cells[r][c]));
    row.push_back(std::to_string(matrix.row_challenger_agree[r]));
    row.push_back(std::to_string(matrix.row_defender_agree[r]));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> col_c{"C"};
  std::vector<std::string> col_d{"D"};
  for (std::size_t c = 0; c < n; ++c) {
    col_c.push_back(std::to_string(matrix.col_challenger_agree[c]));
    col_d.push_back(std::to_string(matrix.col_defender_agree[c]));
  }
  rows.push_back(std::move(col_c));
  rows.push_back(std::move(col_d));

  std::string out = fmt::format("Imitation vs. duel consistency ({})\n\n", matrix.metric);
  out += text_table(header, rows, std::vector<bool>(header.size(), true));
  out += fmt::format("\ntotal agreement {} of {} cells (challenger {}, defender {})\n", matrix.total_agree,
                     n * (n > 0 ? n - 1 : 0), matrix.challenger_agree, matrix.defender_agree);
  out += "C = challenger agree, D = defender agree, . = disagree (draws included)\n";
  if (!matrix.fit_ties.empty()) {
    out += fmt::format("{} pair(s) with equal fit, labelled disagree:\n", matrix.fit_ties.size());
    for (const auto& [a, b] : matrix.fit_ties) out += fmt::format("  {} = {}\n", a, b);
  }
  if (matrix.aborted_cells > 0) out += fmt::format("{} aborted duel(s) labelled disagree\n", matrix.aborted_cells);
  out += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += fmt::format("A{:<3} {}  {}\n", i + 1, matrix.order[i], title_of(catalog, matrix.order[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string sensitivity_csv(std::span<const SensitivityCurve> curves) {
  std::string out = join_csv({"metric", "delta", "challenger_count", "defender_count", "match_challenger_count",
                              "match_defender_count"});
  for (const auto& curve : curves) {
    for (const auto& p : curve.points) {
      out += join_csv({curve.metric, number(p.delta), std::to_string(p.round_challenger),
                       std::to_string(p.round_defender), std::to_string(p.match_challenger),
                       std::to_string(p.match_defender)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string fit_distribution_json(const FitDistributionStats& stats) {
  ojson doc;
  doc["metric"] = stats.metric;
  doc["count"] = stats.count;
  doc["min"] = stats.min;
  doc["q1"] = stats.q1;
  doc["median"] = stats.median;
  doc["q3"] = stats.q3;
  doc["max"] = stats.max;
  doc["iqr"] = stats.iqr;
  doc["lower_fence"] = stats.lower_fence;
  doc["upper_fence"] = stats.upper_fence;
  doc["whisker_low"] = stats.whisker_low;
  doc["whisker_high"] = stats.whisker_high;
  doc["outliers"] = stats.outliers;
  doc["quantile_method"] = "linear interpolation at (n-1)p";
  return dump(doc);
}

std::string fit_distribution_text(const FitDistributionStats& stats) {
  std::vector<std::vector<std::string>> rows{
      {"count", std::to_string(stats.count)},
      {"min", fmt::format("{:.6f}", stats.min)},
      {"whisker low", fmt::format("{:.6f}", stats.whisker_low)},
      {"Q1", fmt::format("{:.6f}", stats.q1)},
      {"median", fmt::format("{:.6f}", stats.median)},
      {"Q3", fmt::format("{:.6f}", stats.q3)},
      {"whisker high", fmt::format("{:.6f}", stats.whisker_high)},
      {"max", fmt::format("{:.6f}", stats.max)},
      {"IQR", fmt::format("{:.6f}", stats.iqr)},
  };
  std::string out = fmt::format("Fitness distribution ({})\n\n", stats.metric);
  out += text_table({"statistic", "value"}, rows, {false, true});
  out += fmt::format("\noutliers: {}\n", stats.outliers.empty() ? "none" : fmt::format("{}", fmt::join(stats.outliers, ", ")));
  return out;
}

// ---------------------------------------------------------------------------

std::string rank_delta_csv(const RankDeltaReport& report) {
  std::string out = join_csv({"metric", "artwork_id", "rank_before", "rank_after", "delta"});
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& row : report.rows) {
    out += join_csv({report.metric, row.artwork_id, opt(row.rank_before), opt(row.rank_after), opt(row.delta)});
  }
  return out;
}

std::string rank_delta_json(const RankDeltaReport& report) {
  ojson doc;
  doc["metric"] = report.metric;
  ojson rows = ojson::array();
  auto opt = [](const std::optional<int>& v) { return v ? ojson(*v) : ojson(nullptr); };
  for (const auto& row : report.rows) {
    rows.push_back({{"artwork_id", row.artwork_id},
                    {"rank_before", opt(row.rank_before)},
                    {"rank_after", opt(row.rank_after)},
                    {"delta", opt(row.delta)}});
  }
  doc["rows"] = std::move(rows);
  doc["only_before"] = report.only_before;
  doc["only_after"] = report.only_after;
  return dump(doc);
}

std::string rank_delta_text(const RankDeltaReport& report, const Catalog* catalog) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : report.rows) {
    std::string name = row.artwork_id;
    if (catalog != nullptr) {
      if (const ArtworkRecord* art = catalog->find(row.artwork_id)) name = fmt::format("{}, {}", art->artist, art->title);
    }
    rows.push_back({row.rank_before ? std::to_string(*row.rank_before) : "-",
                    row.rank_after ? std::to_string(*row.rank_after) : "-", name,
                    row.delta ? delta_marker(*row.delta) : "n/a"});
  }
  std::string out = fmt::format("Rank change ({})\n\n", report.metric);
  out += text_table({"before", "after", "artwork", "change"}, rows, {true, true, false, false});
  if (!report.only_before.empty()) {
    out += fmt::format("\nonly in the first ledger: {}\n", fmt::join(report.only_before, ", "));
  }
  if (!report.only_after.empty()) {
    out += fmt::format("\nonly in the second ledger: {}\n", fmt::join(report.only_after, ", "));
  }
  return out;
}

}  // namespace artarena::report
