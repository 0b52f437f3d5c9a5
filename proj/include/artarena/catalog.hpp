#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace artarena {

struct MotifEntry {
  std::string name;
  std::string description;

  bool operator==(const MotifEntry&) const = default;
};

struct ArtworkRecord {
  std::string id;
  std::string title;
  std::string artist;
  // Opaque to the engine; only workers dereference it.
  std::string reference_image;
  std::vector<MotifEntry> motifs;

  bool operator==(const ArtworkRecord&) const = default;
};

/// Immutable, validated list of artworks in manifest order.
class Catalog {
 public:
  Catalog() = default;
  /// Validates and takes ownership. Throws ValidationError naming the
  /// offending record.
  explicit Catalog(std::vector<ArtworkRecord> artworks);

  const std::vector<ArtworkRecord>& artworks() const noexcept { return artworks_; }
  std::size_t size() const noexcept { return artworks_.size(); }
  bool empty() const noexcept { return artworks_.empty(); }

  const ArtworkRecord& at(std::string_view id) const;
  const ArtworkRecord* find(std::string_view id) const;
  /// Position of the artwork in manifest order; the ledger's last tie-break.
  std::size_t position(std::string_view id) const;

  bool operator==(const Catalog& other) const { return artworks_ == other.artworks_; }

 private:
  std::vector<ArtworkRecord> artworks_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct CatalogLoadOptions {
  // When false, reference_image locators are not checked for existence
  // (used when re-reading a run directory's snapshot offline).
  bool check_assets = true;
};

/// Reads a JSON catalog manifest. Relative asset paths are checked against the
/// manifest's directory; URIs with a scheme are accepted as-is.
Catalog load_catalog(const std::filesystem::path& manifest, CatalogLoadOptions options = {});

/// Parses manifest text. base_dir anchors relative asset paths.
Catalog parse_catalog(std::string_view json_text, const std::filesystem::path& base_dir,
                      CatalogLoadOptions options = {});

/// Canonical serialization: schema field order, two-space indent, trailing
/// newline. load(serialize(c)) == c, and serialize(load(text)) == text for
/// canonical text.
std::string serialize_catalog(const Catalog& catalog);

// ---------------------------------------------------------------------------
// Metrics

enum class Orientation { kHigherIsCloser, kLowerIsCloser };

std::string_view to_string(Orientation orientation);
Orientation parse_orientation(std::string_view text);

struct MetricSpec {
  std::string key;
  Orientation orientation = Orientation::kHigherIsCloser;
  double range_min = 0.0;
  double range_max = 1.0;

  /// Maps a raw score so that larger always means closer.
  double closeness(double raw) const noexcept {
    return orientation == Orientation::kHigherIsCloser ? raw : -raw;
  }
  bool in_range(double score) const noexcept {
    return score >= range_min && score <= range_max;
  }

  bool operator==(const MetricSpec&) const = default;
};

/// Built-in metric table: semantics and fidelity are cosine-like similarities
/// on [-1, 1]; aesthetics is a perceptual distance on [0, 2].
class MetricRegistry {
 public:
  /// Registry preloaded with semantics, aesthetics and fidelity.
  MetricRegistry();

  /// Adds a metric or overrides a built-in one.
  void set(MetricSpec spec);
  const MetricSpec& resolve(std::string_view key) const;
  bool contains(std::string_view key) const;
  std::vector<std::string> keys() const;

 private:
  std::map<std::string, MetricSpec, std::less<>> specs_;
};

/// Lookup against the built-in table. Throws ValidationError for unknown keys.
MetricSpec resolve_metric(std::string_view key);

}  // namespace artarena
