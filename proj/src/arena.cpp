#include "artarena/arena.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artarena/error.hpp"
#include "artarena/hashing.hpp"

namespace artarena {

namespace {

void check_score(double score, const MetricSpec& metric, std::string_view context) {
  if (std::isnan(score) || !metric.in_range(score)) {
    throw ContractViolation(fmt::format("{}: {} score {} outside the valid range [{}, {}]", context, metric.key, score,
                                        metric.range_min, metric.range_max));
  }
}

std::vector<std::string> generate_checked(const ArenaContext& ctx, const std::string& prompt, std::uint64_t seed,
                                          const std::string& what) {
  auto images = with_retries(ctx.config.retry, what,
                             [&] { return ctx.generator.generate(prompt, ctx.config.samples, seed); });
  if (images.size() != static_cast<std::size_t>(ctx.config.samples)) {
    throw ContractViolation(
        fmt::format("{}: backend returned {} images, {} requested", what, images.size(), ctx.config.samples));
  }
  return images;
}

double score_checked(const ArenaContext& ctx, const std::string& image, const std::string& reference,
                     const std::string& what) {
  const double score = with_retries(ctx.config.retry, what,
                                    [&] { return ctx.proximity.proximity(image, reference, ctx.metric.key); });
  check_score(score, ctx.metric, what);
  return score;
}

}  // namespace

std::vector<std::string> FitSet::ids() const {
  std::vector<std::string> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(m.artwork_id);
  return out;
}

const FitSetMember* FitSet::find(std::string_view id) const {
  for (const auto& m : members) {
    if (m.artwork_id == id) return &m;
  }
  return nullptr;
}

std::string_view to_string(Award award) {
  switch (award) {
    case Award::kChallenger: return "challenger";
    case Award::kDefender: return "defender";
    case Award::kNone: return "none";
  }
  return "none";
}

std::string_view to_string(Winner winner) {
  switch (winner) {
    case Winner::kChallenger: return "challenger";
    case Winner::kDefender: return "defender";
    case Winner::kDraw: return "draw";
  }
  return "draw";
}

Award parse_award(std::string_view text) {
  if (text == "challenger") return Award::kChallenger;
  if (text == "defender") return Award::kDefender;
  if (text == "none") return Award::kNone;
  throw ParseError(fmt::format("unknown round award \"{}\"", text));
}

Winner parse_winner(std::string_view text) {
  if (text == "challenger") return Winner::kChallenger;
  if (text == "defender") return Winner::kDefender;
  if (text == "draw") return Winner::kDraw;
  throw ParseError(fmt::format("unknown match winner \"{}\"", text));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of no samples");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

Award decide_round(double prox_c, double prox_d, const MetricSpec& metric, double delta) {
  const double c = metric.closeness(prox_c);
  const double d = metric.closeness(prox_d);
  if (c - d > delta) return Award::kChallenger;
  if (d - c > delta) return Award::kDefender;
  return Award::kNone;
}

Winner decide_match(int wins_c, int wins_d) {
  if (wins_c > wins_d) return Winner::kChallenger;
  if (wins_d > wins_c) return Winner::kDefender;
  return Winner::kDraw;
}

void redecide(DuelRecord& duel, const MetricSpec& metric, double delta) {
  duel.wins_c = 0;
  duel.wins_d = 0;
  for (auto& round : duel.rounds) {
    round.award = decide_round(round.prox_c, round.prox_d, metric, delta);
    if (round.award == Award::kChallenger) ++duel.wins_c;
    if (round.award == Award::kDefender) ++duel.wins_d;
  }
  duel.winner = decide_match(duel.wins_c, duel.wins_d);
}

// ---------------------------------------------------------------------------

const LedgerRow* Ledger::find(std::string_view id) const {
  for (const auto& row : rows) {
    if (row.artwork_id == id) return &row;
  }
  return nullptr;
}

void rank_rows(std::vector<LedgerRow>& rows, const std::map<std::string, std::size_t, std::less<>>& positions) {
  auto position = [&](const std::string& id) {
    auto it = positions.find(id);
    if (it == positions.end()) throw ValidationError(fmt::format("no catalog position for \"{}\"", id));
    return it->second;
  };
  for (auto& row : rows) row.total_wins = row.challenger_wins + row.defender_wins;
  std::sort(rows.begin(), rows.end(), [&](const LedgerRow& a, const LedgerRow& b) {
    if (a.total_wins != b.total_wins) return a.total_wins > b.total_wins;
    if (a.challenger_wins != b.challenger_wins) return a.challenger_wins > b.challenger_wins;
    return position(a.artwork_id) < position(b.artwork_id);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].rank = static_cast<int>(i) + 1;
    auto same = [&](std::size_t j) {
      return rows[j].total_wins == rows[i].total_wins && rows[j].challenger_wins == rows[i].challenger_wins;
    };
    rows[i].stable_tiebreak = (i > 0 && same(i - 1)) || (i + 1 < rows.size() && same(i + 1));
  }
}

Ledger build_ledger(std::span<const DuelRecord> duels, const FitSet& fitset) {
  Ledger ledger;
  ledger.metric = fitset.metric;
  std::map<std::string, std::size_t, std::less<>> positions;
  std::map<std::string, LedgerRow, std::less<>> rows;
  for (const auto& m : fitset.members) {
    positions.emplace(m.artwork_id, m.catalog_position);
    rows[m.artwork_id].artwork_id = m.artwork_id;
  }

  for (const auto& duel : duels) {
    auto c = rows.find(duel.challenger_id);
    auto d = rows.find(duel.defender_id);
    if (c == rows.end() || d == rows.end()) {
      throw ValidationError(fmt::format("duel ({}, {}) references an artwork outside the FitSet",
                                        duel.challenger_id, duel.defender_id));
    }
    if (duel.challenger_id == duel.defender_id) {
      throw ValidationError(fmt::format("duel pairs \"{}\" with itself", duel.challenger_id));
    }
    if (duel.aborted) {
      ++ledger.aborted_matches;
      continue;
    }
    switch (duel.winner) {
      case Winner::kChallenger:
        ++c->second.challenger_wins;
        ++ledger.decisive_matches;
        break;
      case Winner::kDefender:
        ++d->second.defender_wins;
        ++ledger.decisive_matches;
        break;
      case Winner::kDraw:
        ++ledger.drawn_matches;
        break;
    }
  }

  for (auto& [id, row] : rows) ledger.rows.push_back(row);
  rank_rows(ledger.rows, positions);
  return ledger;
}

// ---------------------------------------------------------------------------

std::uint64_t trial_seed(std::uint64_t tournament_seed, std::string_view artwork_id) {
  return derive_seed(tournament_seed, {fnv1a64("trial"), fnv1a64(artwork_id)});
}

std::uint64_t round_seed(std::uint64_t tournament_seed, std::string_view challenger_id, std::string_view defender_id,
                         int round_index) {
  return derive_seed(tournament_seed, {fnv1a64("duel"), fnv1a64(challenger_id), fnv1a64(defender_id),
                                       static_cast<std::uint64_t>(round_index)});
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      if (stop) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
        return;
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

TrialResult run_trial(const ArenaContext& ctx, const ArtworkRecord& artwork) {
  TrialResult trial;
  trial.artwork_id = artwork.id;
  trial.metric = ctx.metric.key;
  trial.prompt = compose_defender_template(artwork).text;
  const std::string what = fmt::format("trial \"{}\"", artwork.id);
  try {
    trial.images = generate_checked(ctx, trial.prompt, trial_seed(ctx.config.seed, artwork.id), what);
    for (const auto& image : trial.images) {
      trial.sample_scores.push_back(score_checked(ctx, image, artwork.id, what));
    }
    trial.fit = mean(trial.sample_scores);
  } catch (const BackendError& e) {
    spdlog::warn("{} failed and is excluded from admission: {}", what, e.what());
    trial.failed = true;
    trial.error = e.what();
    trial.images.clear();
    trial.sample_scores.clear();
    trial.fit = 0.0;
  }
  return trial;
}

std::vector<TrialResult> run_entry_trials(const ArenaContext& ctx, const TrialOptions& options) {
  const auto& artworks = ctx.catalog.artworks();
  std::vector<TrialResult> results(artworks.size());
  parallel_for(artworks.size(), options.jobs, [&](std::size_t i) {
    if (options.skip && options.skip(i)) return;
    results[i] = run_trial(ctx, artworks[i]);
    if (options.on_complete) options.on_complete(i, results[i]);
  });
  return results;
}

FitSet admit(std::span<const TrialResult> trials, const TournamentConfig& config, const MetricSpec& metric,
             const Catalog& catalog) {
  FitSet fitset;
  fitset.metric = metric.key;
  fitset.orientation = metric.orientation;
  fitset.admission = config.admission;

  std::vector<FitSetMember> candidates;
  for (const auto& trial : trials) {
    if (trial.failed) continue;
    candidates.push_back({trial.artwork_id, trial.fit, catalog.position(trial.artwork_id)});
  }
  if (candidates.empty()) throw ValidationError(fmt::format("metric {}: no successful entry trials", metric.key));

  std::sort(candidates.begin(), candidates.end(), [&](const FitSetMember& a, const FitSetMember& b) {
    const double ca = metric.closeness(a.fit);
    const double cb = metric.closeness(b.fit);
    if (ca != cb) return ca > cb;
    return a.catalog_position < b.catalog_position;
  });

  if (config.admission.kind == Admission::Kind::kTopN) {
    const auto n = static_cast<std::size_t>(config.admission.top_n);
    if (n > candidates.size()) {
      throw ValidationError(fmt::format("metric {}: top_n {} exceeds the {} successful entry trials", metric.key, n,
                                        candidates.size()));
    }
    candidates.resize(n);
    fitset.members = std::move(candidates);
  } else {
    const double bar = metric.closeness(config.admission.threshold);
    for (auto& c : candidates) {
      if (metric.closeness(c.fit) >= bar) fitset.members.push_back(std::move(c));
    }
  }
  return fitset;
}

DuelRecord run_duel(const ArenaContext& ctx, const ArtworkRecord& challenger, const ArtworkRecord& defender,
                    const ChallengerPromptSet& prompt_set) {
  if (challenger.id == defender.id) throw ValidationError(fmt::format("duel pairs \"{}\" with itself", challenger.id));
  if (prompt_set.artwork_id != challenger.id) {
    throw ValidationError(fmt::format("prompt set of \"{}\" used for challenger \"{}\"", prompt_set.artwork_id,
                                      challenger.id));
  }
  if (prompt_set.prompts.size() != static_cast<std::size_t>(ctx.config.rounds)) {
    throw ValidationError(fmt::format("challenger \"{}\": {} prompts for {} rounds", challenger.id,
                                      prompt_set.prompts.size(), ctx.config.rounds));
  }

  DuelRecord duel;
  duel.metric = ctx.metric.key;
  duel.challenger_id = challenger.id;
  duel.defender_id = defender.id;
  const auto defender_template = compose_defender_template(defender);

  try {
    for (int r = 1; r <= ctx.config.rounds; ++r) {
      const std::string what = fmt::format("duel ({}, {}) round {}", challenger.id, defender.id, r);
      RoundOutcome round;
      round.round_index = r;
      round.combo_id = prompt_set.combo_ids[static_cast<std::size_t>(r - 1)];
      round.prompt = compose_duel_prompt(prompt_set.prompts[static_cast<std::size_t>(r - 1)], defender_template);
      round.images = generate_checked(ctx, round.prompt, round_seed(ctx.config.seed, challenger.id, defender.id, r), what);
      for (const auto& image : round.images) {
        round.scores_c.push_back(score_checked(ctx, image, challenger.id, what));
        round.scores_d.push_back(score_checked(ctx, image, defender.id, what));
      }
      round.prox_c = mean(round.scores_c);
      round.prox_d = mean(round.scores_d);
      round.award = decide_round(round.prox_c, round.prox_d, ctx.metric, ctx.config.delta);
      if (round.award == Award::kChallenger) ++duel.wins_c;
      if (round.award == Award::kDefender) ++duel.wins_d;
      duel.rounds.push_back(std::move(round));
    }
    duel.winner = decide_match(duel.wins_c, duel.wins_d);
  } catch (const BackendError& e) {
    spdlog::warn("duel ({}, {}) aborted and excluded from the ledger: {}", challenger.id, defender.id, e.what());
    duel.aborted = true;
    duel.error = e.what();
    duel.rounds.clear();
    duel.wins_c = 0;
    duel.wins_d = 0;
    duel.winner = Winner::kDraw;
  }
  return duel;
}

std::vector<std::pair<std::string, std::string>> round_robin_pairs(const FitSet& fitset) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(fitset.size() * (fitset.size() > 0 ? fitset.size() - 1 : 0));
  for (const auto& c : fitset.members) {
    for (const auto& d : fitset.members) {
      if (c.artwork_id != d.artwork_id) pairs.emplace_back(c.artwork_id, d.artwork_id);
    }
  }
  return pairs;
}

std::map<std::string, ChallengerPromptSet, std::less<>> draw_prompt_sets(const Catalog& catalog, const FitSet& fitset,
                                                                         const TournamentConfig& config) {
  std::map<std::string, ChallengerPromptSet, std::less<>> sets;
  for (const auto& member : fitset.members) {
    const auto& art = catalog.at(member.artwork_id);
    std::optional<BlendingManifest> blending;
    if (!config.blending_dir.empty()) {
      const auto file = std::filesystem::path(config.blending_dir) / (art.id + ".json");
      if (std::filesystem::exists(file)) blending = load_blending_manifest(file, &art.motifs);
    }
    sets.emplace(art.id, draw_prompt_set(art, config.rounds, config.seed, blending ? &*blending : nullptr,
                                         config.max_motifs));
  }
  return sets;
}

std::vector<DuelRecord> run_round_robin(const ArenaContext& ctx, const FitSet& fitset,
                                        const std::map<std::string, ChallengerPromptSet, std::less<>>& prompt_sets,
                                        const RoundRobinOptions& options) {
  if (fitset.size() < 2) {
    throw ValidationError(fmt::format("metric {}: a round robin needs at least 2 FitSet artworks (have {})",
                                      fitset.metric, fitset.size()));
  }
  const auto pairs = round_robin_pairs(fitset);
  std::vector<DuelRecord> duels(pairs.size());
  parallel_for(pairs.size(), options.jobs, [&](std::size_t i) {
    if (options.skip && options.skip(i)) return;
    const auto& [c, d] = pairs[i];
    auto set = prompt_sets.find(c);
    if (set == prompt_sets.end()) throw ValidationError(fmt::format("no prompt set for challenger \"{}\"", c));
    duels[i] = run_duel(ctx, ctx.catalog.at(c), ctx.catalog.at(d), set->second);
    if (options.on_complete) options.on_complete(i, duels[i]);
  });
  return duels;
}

}  // namespace artarena
