#include "artarena/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "artarena/error.hpp"
#include "json.hpp"

namespace artarena {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool has_uri_scheme(std::string_view locator) {
  const auto pos = locator.find("://");
  if (pos == std::string_view::npos || pos == 0) return false;
  return std::all_of(locator.begin(), locator.begin() + static_cast<std::ptrdiff_t>(pos),
                     [](unsigned char c) { return std::isalnum(c) || c == '+' || c == '-' || c == '.'; });
}

const std::string& require_string(const json& obj, const char* field, std::string_view record) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw ValidationError(fmt::format("catalog record {}: missing field \"{}\"", record, field));
  }
  if (!it->is_string()) {
    throw ValidationError(fmt::format("catalog record {}: field \"{}\" must be a string", record, field));
  }
  return it->get_ref<const std::string&>();
}

void reject_unknown_fields(const json& obj, std::initializer_list<std::string_view> allowed,
                           std::string_view record) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(fmt::format("catalog record {}: unknown field \"{}\"", record, key));
    }
  }
}

}  // namespace

Catalog::Catalog(std::vector<ArtworkRecord> artworks) : artworks_(std::move(artworks)) {
  std::set<std::string> artist_names;
  for (const auto& art : artworks_) {
    if (!art.artist.empty()) artist_names.insert(lowercase(art.artist));
  }

  for (std::size_t i = 0; i < artworks_.size(); ++i) {
    const auto& art = artworks_[i];
    const std::string label = art.id.empty() ? fmt::format("#{}", i) : fmt::format("\"{}\"", art.id);
    if (art.id.empty()) throw ValidationError(fmt::format("catalog record {}: empty id", label));
    if (art.title.empty()) throw ValidationError(fmt::format("catalog record {}: empty title", label));
    if (art.artist.empty()) throw ValidationError(fmt::format("catalog record {}: empty artist", label));
    if (art.reference_image.empty()) {
      throw ValidationError(fmt::format("catalog record {}: empty reference_image", label));
    }
    if (!index_.emplace(art.id, i).second) {
      throw ValidationError(fmt::format("catalog record {}: duplicate id {}", label, art.id));
    }

    std::set<std::string, std::less<>> motif_names;
    for (const auto& motif : art.motifs) {
      if (motif.name.empty() || motif.description.empty()) {
        throw ValidationError(fmt::format("catalog record {}: motif with empty name or description", label));
      }
      if (!motif_names.insert(motif.name).second) {
        throw ValidationError(fmt::format("catalog record {}: duplicate motif \"{}\"", label, motif.name));
      }
      const std::string desc = lowercase(motif.description);
      for (const auto& artist : artist_names) {
        if (desc.find(artist) != std::string::npos) {
          throw ValidationError(fmt::format(
              "catalog record {}: motif \"{}\" names artist \"{}\"", label, motif.name, artist));
        }
      }
    }
  }
}

const ArtworkRecord& Catalog::at(std::string_view id) const {
  const auto* art = find(id);
  if (art == nullptr) throw ValidationError(fmt::format("unknown artwork id \"{}\"", id));
  return *art;
}

const ArtworkRecord* Catalog::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &artworks_[it->second];
}

std::size_t Catalog::position(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError(fmt::format("unknown artwork id \"{}\"", id));
  return it->second;
}

Catalog parse_catalog(std::string_view json_text, const std::filesystem::path& base_dir,
                      CatalogLoadOptions options) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("catalog manifest: {}", e.what()));
  }
  if (!doc.is_array()) throw ParseError("catalog manifest: top level must be a list");

  std::vector<ArtworkRecord> records;
  records.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    std::string label = fmt::format("#{}", i);
    if (!obj.is_object()) throw ParseError(fmt::format("catalog record {}: not an object", label));
    if (auto it = obj.find("id"); it != obj.end() && it->is_string()) {
      label = fmt::format("\"{}\"", it->get<std::string>());
    }
    reject_unknown_fields(obj, {"id", "title", "artist", "reference_image", "motifs"}, label);

    ArtworkRecord art;
    art.id = require_string(obj, "id", label);
    art.title = require_string(obj, "title", label);
    art.artist = require_string(obj, "artist", label);
    art.reference_image = require_string(obj, "reference_image", label);

    auto motifs = obj.find("motifs");
    if (motifs == obj.end()) {
      throw ValidationError(fmt::format("catalog record {}: missing field \"motifs\"", label));
    }
    if (!motifs->is_array()) {
      throw ValidationError(fmt::format("catalog record {}: \"motifs\" must be a list", label));
    }
    for (const auto& m : *motifs) {
      if (!m.is_object()) throw ValidationError(fmt::format("catalog record {}: motif not an object", label));
      reject_unknown_fields(m, {"name", "description"}, label);
      art.motifs.push_back({require_string(m, "name", label), require_string(m, "description", label)});
    }

    if (options.check_assets && !has_uri_scheme(art.reference_image)) {
      std::filesystem::path asset(art.reference_image);
      if (asset.is_relative()) asset = base_dir / asset;
      std::error_code ec;
      if (!std::filesystem::exists(asset, ec)) {
        throw ValidationError(fmt::format("catalog record {}: reference_image not found: {}", label,
                                          asset.string()));
      }
    }
    records.push_back(std::move(art));
  }
  return Catalog(std::move(records));
}

Catalog load_catalog(const std::filesystem::path& manifest, CatalogLoadOptions options) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open catalog manifest {}", manifest.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_catalog(buffer.str(), manifest.parent_path(), options);
  } catch (const ArenaError& e) {
    if (e.category() == ErrorCategory::kParse) {
      throw ParseError(fmt::format("{}: {}", manifest.string(), e.what()));
    }
    throw ValidationError(fmt::format("{}: {}", manifest.string(), e.what()));
  }
}

std::string serialize_catalog(const Catalog& catalog) {
  ordered_json doc = ordered_json::array();
  for (const auto& art : catalog.artworks()) {
    ordered_json obj;
    obj["id"] = art.id;
    obj["title"] = art.title;
    obj["artist"] = art.artist;
    obj["reference_image"] = art.reference_image;
    obj["motifs"] = ordered_json::array();
    for (const auto& m : art.motifs) {
      ordered_json motif;
      motif["name"] = m.name;
      motif["description"] = m.description;
      obj["motifs"].push_back(std::move(motif));
    }
    doc.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::string_view to_string(Orientation orientation) {
  return orientation == Orientation::kHigherIsCloser ? "higher_is_closer" : "lower_is_closer";
}

Orientation parse_orientation(std::string_view text) {
  if (text == "higher_is_closer") return Orientation::kHigherIsCloser;
  if (text == "lower_is_closer") return Orientation::kLowerIsCloser;
  throw ValidationError(fmt::format("unknown metric orientation \"{}\"", text));
}

MetricRegistry::MetricRegistry() {
  set({"semantics", Orientation::kHigherIsCloser, -1.0, 1.0});
  set({"aesthetics", Orientation::kLowerIsCloser, 0.0, 2.0});
  set({"fidelity", Orientation::kHigherIsCloser, -1.0, 1.0});
}

void MetricRegistry::set(MetricSpec spec) {
  if (spec.key.empty()) throw ValidationError("metric key must be non-empty");
  if (!(spec.range_min <= spec.range_max)) {
    throw ValidationError(fmt::format("metric \"{}\": empty valid range", spec.key));
  }
  std::string key = spec.key;
  specs_.insert_or_assign(std::move(key), std::move(spec));
}

const MetricSpec& MetricRegistry::resolve(std::string_view key) const {
  auto it = specs_.find(key);
  if (it == specs_.end()) throw ValidationError(fmt::format("unknown metric \"{}\"", key));
  return it->second;
}

bool MetricRegistry::contains(std::string_view key) const { return specs_.find(key) != specs_.end(); }

std::vector<std::string> MetricRegistry::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, spec] : specs_) out.push_back(key);
  return out;
}

MetricSpec resolve_metric(std::string_view key) {
  static const MetricRegistry builtin;
  return builtin.resolve(key);
}

}  // namespace artarena
