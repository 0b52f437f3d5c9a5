#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <set>

#include "artarena/error.hpp"
#include "artarena/hashing.hpp"
#include "artarena/prompting.hpp"
#include "support.hpp"

using namespace artarena;
using testing_support::fixture;

namespace {

std::vector<MotifEntry> motifs_named(std::initializer_list<const char*> names) {
  std::vector<MotifEntry> out;
  for (const char* n : names) out.push_back({n, std::string("desc of ") + n});
  return out;
}

ArtworkRecord artwork_with(int motifs, const std::string& id = "art") {
  ArtworkRecord art{id, "Some Title", "Some Painter", "x.png", {}};
  for (int i = 0; i < motifs; ++i) art.motifs.push_back({fmt::format("m{}", i), fmt::format("detail number {}", i)});
  return art;
}

// Bitmask enumeration sorted by (size, index tuple): independent of the
// engine's generator.
std::vector<std::vector<int>> oracle_combinations(int n) {
  std::vector<std::vector<int>> out;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<int> tuple;
    for (int i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) tuple.push_back(i);
    }
    out.push_back(tuple);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

// Naive restatement of the sampler: SplitMix64 stream, rejection-bounded
// draws, partial Fisher-Yates.
std::vector<std::size_t> oracle_sample(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::uint64_t state = seed;
  auto next = [&] {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  auto below = [&](std::uint64_t bound) {
    // 2^64 mod bound low values are rejected.
    const std::uint64_t reject = (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= reject) return x % bound;
    }
  };
  std::vector<std::size_t> items(n);
  for (std::size_t i = 0; i < n; ++i) items[i] = i;
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(below(n - i));
    std::swap(items[i], items[j]);
    picked.push_back(items[i]);
  }
  return picked;
}

}  // namespace

TEST(Hashing, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  // Reference SplitMix64 output for seed 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
}

TEST(Hashing, DeriveSeedDependsOnPosition) {
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
  EXPECT_EQ(derive_seed(9, {}), 9u);
  EXPECT_EQ(derive_seed(5, {7}), mix64(5 ^ (7 + 0x9e3779b97f4a7c15ULL)));
}

TEST(Hashing, BoundedStaysInRange) {
  SplitMix64 rng(42);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 31ULL, 1000ULL}) {
    for (int i = 0; i < 200; ++i) EXPECT_LT(rng.bounded(bound), bound);
  }
}

TEST(Combinations, ThreeMotifsOrderedBySizeThenIndex) {
  const auto motifs = motifs_named({"a", "b", "c"});
  const auto combos = enumerate_combinations(motifs);
  std::vector<std::vector<std::string>> names;
  for (const auto& c : combos) names.push_back(c.motif_names);
  const std::vector<std::vector<std::string>> expected{{"a"}, {"b"}, {"c"}, {"a", "b"}, {"a", "c"}, {"b", "c"}, {"a", "b", "c"}};
  EXPECT_EQ(names, expected);
  for (std::size_t i = 0; i < combos.size(); ++i) {
    EXPECT_EQ(combos[i].combo_id, static_cast<int>(i) + 1);
    EXPECT_EQ(combos[i].style_injection_slot, "{{STYLE_OR_ARTIST_TO_BE_INJECTED_LATER}}");
  }
}

TEST(Combinations, SingleMotif) {
  const auto combos = enumerate_combinations(motifs_named({"a"}));
  ASSERT_EQ(combos.size(), 1u);
  EXPECT_EQ(combos[0].motif_names, std::vector<std::string>{"a"});
}

TEST(Combinations, FiveMotifsGiveThirtyOne) {
  EXPECT_EQ(enumerate_combinations(artwork_with(5).motifs).size(), 31u);
}

TEST(Combinations, MatchBitmaskOracleUpToTwelve) {
  for (int n = 1; n <= 12; ++n) {
    const auto got = combination_indices(n);
    const auto want = oracle_combinations(n);
    ASSERT_EQ(got.size(), (std::size_t{1} << n) - 1) << "n=" << n;
    EXPECT_EQ(got, want) << "n=" << n;
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_LE(got[i - 1].size(), got[i].size());
    for (const auto& tuple : got) EXPECT_TRUE(std::is_sorted(tuple.begin(), tuple.end()));
  }
}

TEST(Combinations, RejectsEmptyAndOverCap) {
  EXPECT_THROW(enumerate_combinations(std::vector<MotifEntry>{}), ValidationError);
  EXPECT_THROW(enumerate_combinations(artwork_with(6).motifs, 5), ValidationError);
  EXPECT_NO_THROW(enumerate_combinations(artwork_with(5).motifs, 5));
}

TEST(Composer, JoinsDescriptionsAfterLeadIn) {
  const std::vector<MotifEntry> motifs{{"Night sky", "a dark sky filled with many bright stars."},
                                       {"Village", "a small cluster of buildings  "}};
  EXPECT_EQ(compose_content_prompt(motifs), "A scene with a dark sky filled with many bright stars, a small cluster of buildings");
}

TEST(Composer, ClipsToSeventyWords) {
  std::vector<MotifEntry> motifs;
  for (int i = 0; i < 10; ++i) motifs.push_back({fmt::format("m{}", i), "one two three four five six seven eight nine ten"});
  const std::string prompt = compose_content_prompt(motifs);
  std::size_t words = 0;
  bool in_word = false;
  for (char ch : prompt) {
    const bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  EXPECT_EQ(words, 70u);
  EXPECT_EQ(prompt.rfind("A scene with one two", 0), 0u);
}

TEST(Templates, DefenderTemplateExamples) {
  ArtworkRecord olive{"vg-olive-grove", "Olive Grove", "Vincent van Gogh", "x", {}};
  ArtworkRecord xy{"xy", "X", "Y", "x", {}};
  ArtworkRecord sunrise{"sunrise", "Impression, Sunrise", "Claude Monet", "x", {}};
  EXPECT_EQ(compose_defender_template(olive).text, "Olive Grove in the style of Vincent van Gogh");
  EXPECT_EQ(compose_defender_template(xy).text, "X in the style of Y");
  EXPECT_EQ(compose_defender_template(sunrise).text, "Impression, Sunrise in the style of Claude Monet");
  EXPECT_EQ(compose_defender_template(olive).artwork_id, "vg-olive-grove");
}

TEST(Templates, DuelPromptExamples) {
  ArtworkRecord scream{"em-the-scream", "The Scream", "Edvard Munch", "x", {}};
  EXPECT_EQ(compose_duel_prompt("A dark sky with many stars above a small cluster of buildings",
                                compose_defender_template(scream)),
            "A dark sky with many stars above a small cluster of buildings, The Scream in the style of Edvard Munch");
  EXPECT_EQ(compose_duel_prompt("P", DefenderTemplate{"d", "D in the style of A"}), "P, D in the style of A");
}

TEST(Templates, DuelPromptsCarryOneStyleClause) {
  const Catalog catalog = load_catalog(fixture("six_artworks.json"));
  const Catalog fitset = load_catalog(fixture("sd15_fidelity_fitset.json"));
  for (const Catalog* cat : {&catalog, &fitset}) {
    for (const auto& challenger : cat->artworks()) {
      for (const auto& combo : enumerate_combinations(challenger.motifs)) {
        for (const auto& defender : cat->artworks()) {
          const std::string prompt = compose_duel_prompt(combo.content_prompt, compose_defender_template(defender));
          std::size_t count = 0;
          for (auto pos = prompt.find(" in the style of "); pos != std::string::npos;
               pos = prompt.find(" in the style of ", pos + 1)) {
            ++count;
          }
          EXPECT_EQ(count, 1u) << prompt;
          if (challenger.artist != defender.artist) {
            EXPECT_EQ(prompt.find(challenger.artist), std::string::npos) << prompt;
          }
        }
      }
    }
  }
}

TEST(PromptSet, DeterministicForSameInputs) {
  const ArtworkRecord art = artwork_with(3);
  const auto a = draw_prompt_set(art, 5, 1234);
  const auto b = draw_prompt_set(art, 5, 1234);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.prompts.size(), 5u);
  std::set<int> distinct(a.combo_ids.begin(), a.combo_ids.end());
  EXPECT_EQ(distinct.size(), 5u);
}

TEST(PromptSet, TooFewCombinations) {
  EXPECT_THROW(draw_prompt_set(artwork_with(1), 5, 1), ValidationError);
  EXPECT_THROW(draw_prompt_set(artwork_with(0), 1, 1), ValidationError);
}

TEST(PromptSet, FiveMotifsMatchSamplerOracle) {
  const ArtworkRecord art = artwork_with(5, "five");
  const auto combos = enumerate_combinations(art.motifs);
  for (std::uint64_t seed : {0ULL, 1ULL, 77ULL, 0xdeadbeefULL, ~0ULL}) {
    const auto set = draw_prompt_set(art, 5, seed);
    EXPECT_EQ(set.sampling_seed, prompt_set_seed(seed, "five"));
    const auto picks = oracle_sample(combos.size(), 5, set.sampling_seed);
    ASSERT_EQ(set.combo_ids.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(set.combo_ids[i], combos[picks[i]].combo_id);
      EXPECT_EQ(set.prompts[i], combos[picks[i]].content_prompt);
      EXPECT_GE(set.combo_ids[i], 1);
      EXPECT_LE(set.combo_ids[i], 31);
    }
  }
}

TEST(PromptSet, SamplerMatchesOracleOnManySizes) {
  for (std::size_t n = 1; n <= 40; ++n) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      EXPECT_EQ(sample_without_replacement(n, std::min<std::size_t>(n, 5), seed),
                oracle_sample(n, std::min<std::size_t>(n, 5), seed));
    }
  }
}

TEST(PromptSet, IndependentOfOtherCatalogEntries) {
  Catalog catalog = load_catalog(fixture("six_artworks.json"));
  std::vector<ArtworkRecord> reversed(catalog.artworks().rbegin(), catalog.artworks().rend());
  const Catalog permuted(reversed);
  for (const auto& art : catalog.artworks()) {
    EXPECT_EQ(draw_prompt_set(art, 5, 99), draw_prompt_set(permuted.at(art.id), 5, 99));
  }
}

TEST(Blending, FixtureManifestLoadsAndTakesPrecedence) {
  const Catalog catalog = load_catalog(fixture("six_artworks.json"));
  const auto& scream = catalog.at("em-the-scream");
  const auto manifest = load_blending_manifest(fixture("blending/em-the-scream.json"), &scream.motifs);
  EXPECT_EQ(manifest.num_motifs, 5);
  EXPECT_EQ(manifest.expected_combinations, 31);
  ASSERT_EQ(manifest.items.size(), 31u);

  const auto with_manifest = draw_prompt_set(scream, 5, 3, &manifest);
  const auto without = draw_prompt_set(scream, 5, 3);
  EXPECT_EQ(with_manifest.combo_ids, without.combo_ids);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(with_manifest.prompts[i], manifest.items[static_cast<std::size_t>(with_manifest.combo_ids[i] - 1)].content_prompt);
  }
  bool authored = false;
  for (const auto& item : manifest.items) {
    authored = authored || item.content_prompt == "A wide body of water seen past the receding railings of a wooden bridge.";
  }
  EXPECT_TRUE(authored);
}

TEST(Blending, RejectsOutOfOrderCardinality) {
  const Catalog catalog = load_catalog(fixture("six_artworks.json"));
  const auto& scream = catalog.at("em-the-scream");
  try {
    load_blending_manifest(fixture("blending_bad/em-the-scream.json"), &scream.motifs);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("increasing-number-of-motifs"), std::string::npos) << e.what();
  }
  // Without the catalog the order is recovered from the singletons and the
  // same violation is caught.
  EXPECT_THROW(load_blending_manifest(fixture("blending_bad/em-the-scream.json")), ValidationError);
}

TEST(Blending, RejectsWrongExpectedCount) {
  const std::string text = R"({"num_motifs": 2, "expected_combinations": 4, "items": []})";
  try {
    parse_blending_manifest(text);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("2^2 - 1 = 3"), std::string::npos) << e.what();
  }
}

TEST(Blending, RejectsRepeatsAndReorderedMotifs) {
  const auto motifs = motifs_named({"a", "b"});
  auto item = [](int id, const char* names, const char* text) {
    return fmt::format(R"({{"combo_id": {}, "motifs": {}, "content_prompt": "{}", "style_injection_slot": "{{{{STYLE_OR_ARTIST_TO_BE_INJECTED_LATER}}}}"}})",
                       id, names, text);
  };
  const std::string good = fmt::format(R"({{"num_motifs": 2, "expected_combinations": 3, "items": [{}, {}, {}]}})",
                                       item(1, R"(["a"])", "x"), item(2, R"(["b"])", "y"), item(3, R"(["a", "b"])", "z"));
  EXPECT_NO_THROW(parse_blending_manifest(good, &motifs));
  const std::string reordered = fmt::format(R"({{"num_motifs": 2, "expected_combinations": 3, "items": [{}, {}, {}]}})",
                                            item(1, R"(["a"])", "x"), item(2, R"(["b"])", "y"), item(3, R"(["b", "a"])", "z"));
  EXPECT_THROW(parse_blending_manifest(reordered, &motifs), ValidationError);
  const std::string repeated = fmt::format(R"({{"num_motifs": 2, "expected_combinations": 3, "items": [{}, {}, {}]}})",
                                           item(1, R"(["a"])", "x"), item(2, R"(["a"])", "y"), item(3, R"(["a", "b"])", "z"));
  EXPECT_THROW(parse_blending_manifest(repeated, &motifs), ValidationError);
}
