#include "artarena/prompting.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "artarena/error.hpp"
#include "artarena/hashing.hpp"
#include "json.hpp"

namespace artarena {

namespace {

using nlohmann::json;

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '.')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::vector<std::vector<int>> combination_indices(int n) {
  if (n < 1 || n > 62) throw ValidationError(fmt::format("combination size {} out of range [1, 62]", n));
  std::vector<std::vector<int>> out;
  out.reserve((std::size_t{1} << n) - 1);
  for (int k = 1; k <= n; ++k) {
    // Lexicographic k-subsets: advance the rightmost index that can still move.
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
      out.push_back(idx);
      int i = k - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

std::string compose_content_prompt(std::span<const MotifEntry> motifs) {
  std::string text = "A scene with ";
  for (std::size_t i = 0; i < motifs.size(); ++i) {
    if (i != 0) text += ", ";
    text += strip(motifs[i].description);
  }

  std::istringstream words(text);
  std::string word;
  std::string clipped;
  std::size_t count = 0;
  while (words >> word) {
    if (count == kMaxPromptWords) return clipped;
    if (count != 0) clipped += ' ';
    clipped += word;
    ++count;
  }
  return clipped;
}

std::vector<MotifCombination> enumerate_combinations(std::span<const MotifEntry> motifs, int max_motifs) {
  if (motifs.empty()) throw ValidationError("cannot enumerate combinations of an empty motif list");
  const int n = static_cast<int>(motifs.size());
  if (n > max_motifs) {
    throw ValidationError(fmt::format("{} motifs exceed the cap of {} ({} combinations)", n, max_motifs,
                                      n < 63 ? (std::uint64_t{1} << n) - 1 : ~std::uint64_t{0}));
  }
  std::vector<MotifCombination> out;
  int combo_id = 1;
  std::vector<MotifEntry> picked;
  for (const auto& idx : combination_indices(n)) {
    MotifCombination combo;
    combo.combo_id = combo_id++;
    picked.clear();
    for (int i : idx) {
      combo.motif_names.push_back(motifs[static_cast<std::size_t>(i)].name);
      picked.push_back(motifs[static_cast<std::size_t>(i)]);
    }
    combo.content_prompt = compose_content_prompt(picked);
    out.push_back(std::move(combo));
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate_combinations(std::span<const MotifCombination> items, int num_motifs,
                           const std::vector<std::string>& motif_order, std::string_view source) {
  const std::uint64_t expected = (std::uint64_t{1} << num_motifs) - 1;
  if (items.size() != expected) {
    throw ValidationError(
        fmt::format("{}: {} items, expected exactly 2^{} - 1 = {}", source, items.size(), num_motifs, expected));
  }
  std::map<std::string, int, std::less<>> position;
  for (std::size_t i = 0; i < motif_order.size(); ++i) position.emplace(motif_order[i], static_cast<int>(i));

  std::set<std::vector<int>> seen;
  std::size_t prev_size = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    if (item.combo_id != static_cast<int>(i) + 1) {
      throw ValidationError(fmt::format("{}: item {} has combo_id {}, expected {}", source, i, item.combo_id, i + 1));
    }
    if (item.motif_names.empty()) {
      throw ValidationError(fmt::format("{}: combo_id {} has no motifs", source, item.combo_id));
    }
    std::vector<int> idx;
    for (const auto& name : item.motif_names) {
      auto it = position.find(name);
      if (it == position.end()) {
        throw ValidationError(fmt::format("{}: combo_id {} names unknown motif \"{}\"", source, item.combo_id, name));
      }
      idx.push_back(it->second);
    }
    if (!std::is_sorted(idx.begin(), idx.end()) || std::adjacent_find(idx.begin(), idx.end()) != idx.end()) {
      throw ValidationError(
          fmt::format("{}: combo_id {} does not preserve the original motif order", source, item.combo_id));
    }
    if (idx.size() < prev_size) {
      throw ValidationError(fmt::format(
          "{}: combo_id {} breaks the increasing-number-of-motifs ordering ({} after {})", source, item.combo_id,
          idx.size(), prev_size));
    }
    prev_size = idx.size();
    if (!seen.insert(idx).second) {
      throw ValidationError(fmt::format("{}: combo_id {} repeats an earlier combination", source, item.combo_id));
    }
    if (item.content_prompt.empty()) {
      throw ValidationError(fmt::format("{}: combo_id {} has an empty content_prompt", source, item.combo_id));
    }
  }
}

BlendingManifest parse_blending_manifest(std::string_view json_text, const std::vector<MotifEntry>* motifs,
                                         std::string_view source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }
  if (!doc.is_object()) throw ParseError(fmt::format("{}: top level must be an object", source));

  BlendingManifest manifest;
  try {
    manifest.num_motifs = doc.at("num_motifs").get<int>();
    manifest.expected_combinations = doc.at("expected_combinations").get<std::int64_t>();
    for (const auto& item : doc.at("items")) {
      MotifCombination combo;
      combo.combo_id = item.at("combo_id").get<int>();
      combo.motif_names = item.at("motifs").get<std::vector<std::string>>();
      combo.content_prompt = item.at("content_prompt").get<std::string>();
      combo.style_injection_slot = item.at("style_injection_slot").get<std::string>();
      manifest.items.push_back(std::move(combo));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }

  if (manifest.num_motifs < 1 || manifest.num_motifs > 62) {
    throw ValidationError(fmt::format("{}: num_motifs {} out of range", source, manifest.num_motifs));
  }
  const auto expected = static_cast<std::int64_t>((std::uint64_t{1} << manifest.num_motifs) - 1);
  if (manifest.expected_combinations != expected) {
    throw ValidationError(fmt::format("{}: expected_combinations is {}, but 2^{} - 1 = {}", source,
                                      manifest.expected_combinations, manifest.num_motifs, expected));
  }

  std::vector<std::string> order;
  if (motifs != nullptr) {
    if (static_cast<int>(motifs->size()) != manifest.num_motifs) {
      throw ValidationError(fmt::format("{}: num_motifs {} but the artwork has {} motifs", source,
                                        manifest.num_motifs, motifs->size()));
    }
    for (const auto& m : *motifs) order.push_back(m.name);
  } else {
    // Without the artwork, recover the motif order from the singletons, which
    // must come first and in original order.
    for (const auto& item : manifest.items) {
      if (item.motif_names.size() != 1) break;
      order.push_back(item.motif_names.front());
    }
    if (static_cast<int>(order.size()) != manifest.num_motifs) {
      throw ValidationError(fmt::format(
          "{}: the first {} items must be the single-motif combinations (found {}); combinations must be sorted "
          "by increasing number of motifs",
          source, manifest.num_motifs, order.size()));
    }
  }
  validate_combinations(manifest.items, manifest.num_motifs, order, source);
  return manifest;
}

BlendingManifest load_blending_manifest(const std::filesystem::path& file, const std::vector<MotifEntry>* motifs) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open blending manifest {}", file.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_blending_manifest(buffer.str(), motifs, file.string());
}

// ---------------------------------------------------------------------------

DefenderTemplate compose_defender_template(const ArtworkRecord& artwork) {
  return {artwork.id, artwork.title + " in the style of " + artwork.artist};
}

std::string compose_duel_prompt(std::string_view challenger_prompt, const DefenderTemplate& defender) {
  std::string out;
  out.reserve(challenger_prompt.size() + 2 + defender.text.size());
  out += challenger_prompt;
  out += ", ";
  out += defender.text;
  return out;
}

std::uint64_t prompt_set_seed(std::uint64_t tournament_seed, std::string_view artwork_id) {
  return derive_seed(tournament_seed, {fnv1a64("prompt-set"), fnv1a64(artwork_id)});
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (count > n) throw ValidationError(fmt::format("cannot sample {} of {} without replacement", count, n));
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

ChallengerPromptSet draw_prompt_set(const ArtworkRecord& artwork, int rounds, std::uint64_t tournament_seed,
                                    const BlendingManifest* blending, int max_motifs) {
  if (rounds < 1) throw ValidationError(fmt::format("rounds must be >= 1 (got {})", rounds));
  if (artwork.motifs.empty()) {
    throw ValidationError(fmt::format("artwork \"{}\": no motifs, cannot draw {} prompts", artwork.id, rounds));
  }

  std::vector<MotifCombination> combos;
  if (blending != nullptr) {
    combos = blending->items;
  } else {
    // Only the first few cardinalities are ever needed, but the cap guards the
    // full enumeration anyway.
    combos = enumerate_combinations(artwork.motifs, max_motifs);
  }
  if (combos.size() < static_cast<std::size_t>(rounds)) {
    throw ValidationError(fmt::format("artwork \"{}\": {} motif combinations, fewer than the {} rounds required",
                                      artwork.id, combos.size(), rounds));
  }

  ChallengerPromptSet set;
  set.artwork_id = artwork.id;
  set.sampling_seed = prompt_set_seed(tournament_seed, artwork.id);
  for (std::size_t pick : sample_without_replacement(combos.size(), static_cast<std::size_t>(rounds), set.sampling_seed)) {
    set.combo_ids.push_back(combos[pick].combo_id);
    set.prompts.push_back(combos[pick].content_prompt);
  }
  return set;
}

}  // namespace artarena
