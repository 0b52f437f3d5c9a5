#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artarena/catalog.hpp"

namespace artarena {

/// Literal placeholder the blending manifest carries for later style injection.
inline constexpr std::string_view kStyleInjectionSlot = "{{STYLE_OR_ARTIST_TO_BE_INJECTED_LATER}}";

/// Word cap for composed content prompts.
inline constexpr std::size_t kMaxPromptWords = 70;

struct MotifCombination {
  int combo_id = 0;  // 1-based, contiguous
  std::vector<std::string> motif_names;
  std::string content_prompt;
  std::string style_injection_slot{kStyleInjectionSlot};

  bool operator==(const MotifCombination&) const = default;
};

/// Index tuples of every non-empty subset of {0..n-1}: cardinality ascending,
/// lexicographic within a cardinality. n must be in [1, 62].
std::vector<std::vector<int>> combination_indices(int n);

/// "A scene with <d1>, <d2>, ..." from motif descriptions, trailing periods
/// stripped, clipped to kMaxPromptWords whitespace-separated words.
std::string compose_content_prompt(std::span<const MotifEntry> motifs);

/// All 2^N - 1 combinations of the motif list. Throws ValidationError when the
/// list is empty or longer than max_motifs.
std::vector<MotifCombination> enumerate_combinations(std::span<const MotifEntry> motifs,
                                                     int max_motifs = 20);

// ---------------------------------------------------------------------------
// Pre-authored blending manifests

struct BlendingManifest {
  int num_motifs = 0;
  std::int64_t expected_combinations = 0;
  std::vector<MotifCombination> items;
};

/// Parses and validates a blending manifest. When motifs is non-null, item
/// motif strings must be names from that list and num_motifs must match its
/// size. Every ordering constraint violation is a ValidationError.
BlendingManifest parse_blending_manifest(std::string_view json_text,
                                         const std::vector<MotifEntry>* motifs = nullptr,
                                         std::string_view source_name = "<blending>");
BlendingManifest load_blending_manifest(const std::filesystem::path& file,
                                        const std::vector<MotifEntry>* motifs = nullptr);

/// Checks count, contiguous ids, cardinality order, in-combination order and
/// uniqueness. motif_order gives each motif name's original position.
void validate_combinations(std::span<const MotifCombination> items, int num_motifs,
                           const std::vector<std::string>& motif_order, std::string_view source_name);

// ---------------------------------------------------------------------------

struct DefenderTemplate {
  std::string artwork_id;
  std::string text;
};

/// "<title> in the style of <artist>".
DefenderTemplate compose_defender_template(const ArtworkRecord& artwork);

/// Content prompt, ", ", defender template.
std::string compose_duel_prompt(std::string_view challenger_prompt, const DefenderTemplate& defender);

struct ChallengerPromptSet {
  std::string artwork_id;
  std::vector<int> combo_ids;      // draw order
  std::vector<std::string> prompts;  // composed content prompts, draw order
  std::uint64_t sampling_seed = 0;

  bool operator==(const ChallengerPromptSet&) const = default;
};

/// Seed for an artwork's prompt-set draw: a mix of the tournament seed and the
/// artwork id's hash, so each artwork's draw is independent of the catalog.
std::uint64_t prompt_set_seed(std::uint64_t tournament_seed, std::string_view artwork_id);

/// Indices [0, n) chosen by a partial Fisher-Yates shuffle over a SplitMix64
/// stream: for i in [0, count), j = i + bounded(n - i), swap(a[i], a[j]).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, std::uint64_t seed);

/// Draws R distinct combinations. When a blending manifest is supplied its
/// content prompts take precedence over the deterministic composer.
ChallengerPromptSet draw_prompt_set(const ArtworkRecord& artwork, int rounds, std::uint64_t tournament_seed,
                                    const BlendingManifest* blending = nullptr, int max_motifs = 20);

}  // namespace artarena
