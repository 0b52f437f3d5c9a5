#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace artarena {

/// 64-bit FNV-1a over raw bytes. Stable across platforms; used for artwork id
/// hashing in seed derivation and for record checksums.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Folds components into a base seed:
///   h0 = base, h(i+1) = mix64(h(i) ^ (c(i) + 0x9e3779b97f4a7c15 * (i + 1)))
/// String components enter through fnv1a64. The result depends only on the
/// component values and their positions, never on call order across tasks.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> components) noexcept {
  std::uint64_t h = base;
  std::uint64_t i = 1;
  for (std::uint64_t c : components) {
    h = mix64(h ^ (c + 0x9e3779b97f4a7c15ULL * i));
    ++i;
  }
  return h;
}

/// SplitMix64 stream. Portable replacement for std engines whose
/// distributions differ across standard libraries.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Unbiased integer in [0, bound) by rejection. bound must be > 0.
  constexpr std::uint64_t bounded(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  constexpr double unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace artarena
