#include "artarena/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include <fmt/format.h>

#include "artarena/error.hpp"

namespace artarena {

namespace {

// A parsed right-hand side: a quoted string, a bare token (number), or a
// one-line array of either.
struct Value {
  bool quoted = false;
  std::string text;
  std::vector<Value> items;
  bool is_array = false;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Parser {
 public:
  Parser(std::string_view source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(std::string_view msg) const {
    throw ConfigError(fmt::format("{}:{}: {}", source_, line_, msg));
  }

  Value parse_value(std::string_view s) {
    pos_ = 0;
    text_ = s;
    Value v = parse_one();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] != '#') fail("trailing characters after value");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }

  Value parse_one() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing value");
    if (text_[pos_] == '"') return parse_string();
    if (text_[pos_] == '[') return parse_array();
    Value v;
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '#' &&
           text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '\r') {
      ++pos_;
    }
    v.text = std::string(text_.substr(start, pos_ - start));
    if (v.text.empty()) fail("missing value");
    return v;
  }

  Value parse_string() {
    Value v;
    v.quoted = true;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        char e = text_[pos_++];
        switch (e) {
          case '"': v.text += '"'; break;
          case '\\': v.text += '\\'; break;
          case 'n': v.text += '\n'; break;
          case 't': v.text += '\t'; break;
          default: fail(fmt::format("unsupported escape \\{}", e));
        }
      } else {
        v.text += c;
      }
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return v;
  }

  Value parse_array() {
    Value v;
    v.is_array = true;
    ++pos_;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return v;
    }
    for (;;) {
      v.items.push_back(parse_one());
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      if (text_[pos_] != ',') fail("expected ',' or ']' in array");
      ++pos_;
    }
  }

  std::string_view source_;
  std::size_t line_;
  std::string_view text_;
  std::size_t pos_ = 0;
};

struct Entry {
  Value value;
  std::size_t line;
};

class Reader {
 public:
  Reader(std::string_view source, std::string section, std::map<std::string, Entry> entries)
      : source_(source), section_(std::move(section)), entries_(std::move(entries)) {}

  [[noreturn]] void fail(const std::string& key, std::string_view msg) const {
    const auto it = entries_.find(key);
    throw ConfigError(fmt::format("{}:{}: [{}] {}: {}", source_, it == entries_.end() ? 0 : it->second.line,
                                  section_, key, msg));
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const Value* take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second.value;
  }

  std::string string_value(const std::string& key, std::string fallback) {
    const Value* v = take(key);
    if (v == nullptr) return fallback;
    if (v->is_array || !v->quoted) fail(key, "expected a quoted string");
    return v->text;
  }

  double double_value(const std::string& key, double fallback) {
    const Value* v = take(key);
    if (v == nullptr) return fallback;
    if (v->is_array || v->quoted) fail(key, "expected a number");
    double out = 0.0;
    const auto* end = v->text.data() + v->text.size();
    auto [ptr, ec] = std::from_chars(v->text.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) fail(key, "expected a finite number");
    return out;
  }

  template <typename Int>
  Int int_value(const std::string& key, Int fallback) {
    const Value* v = take(key);
    if (v == nullptr) return fallback;
    if (v->is_array || v->quoted) fail(key, "expected an integer");
    Int out{};
    const auto* end = v->text.data() + v->text.size();
    auto [ptr, ec] = std::from_chars(v->text.data(), end, out);
    if (ec != std::errc() || ptr != end) fail(key, "expected an integer in range");
    return out;
  }

  std::vector<std::string> string_list(const std::string& key, std::vector<std::string> fallback) {
    const Value* v = take(key);
    if (v == nullptr) return fallback;
    std::vector<std::string> out;
    if (v->is_array) {
      for (const auto& item : v->items) {
        if (!item.quoted) fail(key, "array items must be quoted strings");
        out.push_back(item.text);
      }
    } else if (v->quoted) {
      // "a, b" is accepted as shorthand for ["a", "b"].
      std::string_view rest = v->text;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        auto piece = trim(rest.substr(0, comma));
        if (piece.empty()) fail(key, "empty list item");
        out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else {
      fail(key, "expected a quoted string or array");
    }
    return out;
  }

  void reject_leftovers() const {
    for (const auto& [key, entry] : entries_) {
      if (consumed_.count(key) == 0) {
        throw ConfigError(fmt::format("{}:{}: unknown key \"{}\" in [{}]", source_, entry.line, key, section_));
      }
    }
  }

 private:
  std::string_view source_;
  std::string section_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> consumed_;
};

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

TournamentConfig parse_config(std::string_view text, std::string_view source_name) {
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::vector<std::string> section_order;
  std::string current;
  std::size_t line_no = 0;

  std::string_view rest = text;
  while (!rest.empty() || line_no == 0) {
    ++line_no;
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);

    line = trim(line);
    if (line.empty() || line.front() == '#') {
      if (rest.empty()) break;
      continue;
    }
    Parser parser(source_name, line_no);
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) parser.fail("unterminated section header");
      auto tail = trim(line.substr(close + 1));
      if (!tail.empty() && tail.front() != '#') parser.fail("trailing characters after section header");
      current = std::string(trim(line.substr(1, close - 1)));
      if (current.empty()) parser.fail("empty section name");
      if (sections.count(current) != 0) parser.fail(fmt::format("duplicate section [{}]", current));
      sections[current];
      section_order.push_back(current);
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) parser.fail("expected key = value");
      std::string key(trim(line.substr(0, eq)));
      if (key.empty()) parser.fail("empty key");
      if (current.empty()) parser.fail(fmt::format("key \"{}\" outside of any section", key));
      auto& entries = sections[current];
      if (entries.count(key) != 0) parser.fail(fmt::format("duplicate key \"{}\"", key));
      entries.emplace(key, Entry{parser.parse_value(line.substr(eq + 1)), line_no});
    }
    if (rest.empty()) break;
  }

  TournamentConfig cfg;
  for (const auto& name : section_order) {
    Reader r(source_name, name, sections[name]);
    if (name == "tournament") {
      cfg.samples = r.int_value<int>("samples", cfg.samples);
      cfg.rounds = r.int_value<int>("rounds", cfg.rounds);
      cfg.delta = r.double_value("delta", cfg.delta);
      cfg.seed = r.int_value<std::uint64_t>("seed", cfg.seed);
      cfg.metrics = r.string_list("metric", cfg.metrics);
      cfg.catalog = r.string_value("catalog", cfg.catalog);
    } else if (name == "admission") {
      if (r.has("top_n") && r.has("threshold")) {
        throw ConfigError(fmt::format("{}: [admission] top_n and threshold are mutually exclusive", source_name));
      }
      if (r.has("threshold")) {
        cfg.admission = Admission::Threshold(r.double_value("threshold", 0.0));
      } else if (r.has("top_n")) {
        cfg.admission = Admission::TopN(r.int_value<int>("top_n", 20));
      }
    } else if (name == "prompting") {
      cfg.max_motifs = r.int_value<int>("max_motifs", cfg.max_motifs);
      cfg.blending_dir = r.string_value("blending_dir", cfg.blending_dir);
    } else if (name == "backend") {
      cfg.retry.retries = r.int_value<int>("retries", cfg.retry.retries);
      cfg.retry.backoff_ms = r.double_value("backoff_ms", cfg.retry.backoff_ms);
      cfg.handshake_timeout_s = r.double_value("handshake_timeout_s", cfg.handshake_timeout_s);
    } else if (name == "mock") {
      cfg.mock_jitter = r.double_value("jitter", cfg.mock_jitter);
      cfg.mock_delay_ms = r.int_value<int>("delay_ms", cfg.mock_delay_ms);
    } else if (name.rfind("metric.", 0) == 0) {
      MetricSpec spec;
      spec.key = name.substr(7);
      if (spec.key.empty()) throw ConfigError(fmt::format("{}: empty metric name in [{}]", source_name, name));
      const std::string orientation = r.string_value("orientation", "");
      if (orientation.empty()) r.fail("orientation", "required");
      try {
        spec.orientation = parse_orientation(orientation);
      } catch (const ValidationError& e) {
        r.fail("orientation", e.what());
      }
      spec.range_min = r.double_value("range_min", 0.0);
      spec.range_max = r.double_value("range_max", 1.0);
      cfg.metric_overrides.push_back(std::move(spec));
    } else {
      throw ConfigError(fmt::format("{}: unknown section [{}]", source_name, name));
    }
    r.reject_leftovers();
  }
  validate_config(cfg);
  return cfg;
}

TournamentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", file.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), file.string());
}

void validate_config(const TournamentConfig& cfg) {
  if (cfg.samples < 1) throw ConfigError(fmt::format("samples must be >= 1 (got {})", cfg.samples));
  if (cfg.rounds < 1) throw ConfigError(fmt::format("rounds must be >= 1 (got {})", cfg.rounds));
  if (!(cfg.delta >= 0.0) || !std::isfinite(cfg.delta)) {
    throw ConfigError(fmt::format("delta must be a finite value >= 0 (got {})", cfg.delta));
  }
  if (cfg.admission.kind == Admission::Kind::kTopN && cfg.admission.top_n < 1) {
    throw ConfigError(fmt::format("top_n must be >= 1 (got {})", cfg.admission.top_n));
  }
  if (cfg.admission.kind == Admission::Kind::kThreshold && !std::isfinite(cfg.admission.threshold)) {
    throw ConfigError("threshold must be finite");
  }
  if (cfg.metrics.empty()) throw ConfigError("at least one metric is required");
  std::set<std::string> seen;
  for (const auto& m : cfg.metrics) {
    if (!seen.insert(m).second) throw ConfigError(fmt::format("metric \"{}\" listed twice", m));
  }
  if (cfg.max_motifs < 1 || cfg.max_motifs > 62) {
    throw ConfigError(fmt::format("max_motifs must be in [1, 62] (got {})", cfg.max_motifs));
  }
  if (cfg.retry.retries < 0) throw ConfigError("retries must be >= 0");
  if (!(cfg.retry.backoff_ms >= 0.0)) throw ConfigError("backoff_ms must be >= 0");
  if (!(cfg.handshake_timeout_s > 0.0)) throw ConfigError("handshake_timeout_s must be > 0");
  if (!(cfg.mock_jitter >= 0.0)) throw ConfigError("mock jitter must be >= 0");
  if (cfg.mock_delay_ms < 0) throw ConfigError("mock delay_ms must be >= 0");
  // Unknown metric keys are caught against the registry, which includes overrides.
  const MetricRegistry registry = [&] {
    try {
      return make_registry(cfg);
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }();
  for (const auto& m : cfg.metrics) {
    if (!registry.contains(m)) throw ConfigError(fmt::format("unknown metric \"{}\"", m));
  }
}

std::string serialize_config(const TournamentConfig& cfg) {
  std::string out;
  auto line = [&out](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  out += "[tournament]\n";
  line("samples", fmt::format("{}", cfg.samples));
  line("rounds", fmt::format("{}", cfg.rounds));
  line("delta", fmt::format("{}", cfg.delta));
  line("seed", fmt::format("{}", cfg.seed));
  std::string metrics = "[";
  for (std::size_t i = 0; i < cfg.metrics.size(); ++i) {
    if (i != 0) metrics += ", ";
    metrics += quote(cfg.metrics[i]);
  }
  metrics += "]";
  line("metric", metrics);
  line("catalog", quote(cfg.catalog));

  out += "\n[admission]\n";
  if (cfg.admission.kind == Admission::Kind::kTopN) {
    line("top_n", fmt::format("{}", cfg.admission.top_n));
  } else {
    line("threshold", fmt::format("{}", cfg.admission.threshold));
  }

  out += "\n[prompting]\n";
  line("max_motifs", fmt::format("{}", cfg.max_motifs));
  line("blending_dir", quote(cfg.blending_dir));

  out += "\n[backend]\n";
  line("retries", fmt::format("{}", cfg.retry.retries));
  line("backoff_ms", fmt::format("{}", cfg.retry.backoff_ms));
  line("handshake_timeout_s", fmt::format("{}", cfg.handshake_timeout_s));

  out += "\n[mock]\n";
  line("jitter", fmt::format("{}", cfg.mock_jitter));
  line("delay_ms", fmt::format("{}", cfg.mock_delay_ms));

  for (const auto& spec : cfg.metric_overrides) {
    out += fmt::format("\n[metric.{}]\n", spec.key);
    line("orientation", quote(to_string(spec.orientation)));
    line("range_min", fmt::format("{}", spec.range_min));
    line("range_max", fmt::format("{}", spec.range_max));
  }
  return out;
}

MetricRegistry make_registry(const TournamentConfig& config) {
  MetricRegistry registry;
  for (const auto& spec : config.metric_overrides) registry.set(spec);
  return registry;
}

}  // namespace artarena
