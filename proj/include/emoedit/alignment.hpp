#pragma once

// Forced-alignment ingestion: Praat TextGrid (long and short text formats) and
// a JSON form, both validated into an utterance -> word -> phoneme hierarchy.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "emoedit/audio.hpp"
#include "emoedit/error.hpp"

namespace emoedit {

struct Segment {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;

  TimeInterval interval() const { return {start_s, end_s}; }
  bool operator==(const Segment&) const = default;
};

inline std::set<std::string> default_silence_labels() { return {"", "sil", "sp", "spn"}; }

struct AlignmentHierarchy {
  Segment utterance;
  std::vector<Segment> words;
  std::vector<Segment> phonemes;  // non-silence only
  std::vector<std::size_t> word_of_phoneme;
  std::set<std::string> silence_labels = default_silence_labels();

  // Phoneme index range [first, last) of a word; empty when the word has none.
  std::pair<std::size_t, std::size_t> phoneme_range(std::size_t word) const {
    const auto lo = std::lower_bound(word_of_phoneme.begin(), word_of_phoneme.end(), word);
    const auto hi = std::upper_bound(word_of_phoneme.begin(), word_of_phoneme.end(), word);
    return {static_cast<std::size_t>(lo - word_of_phoneme.begin()),
            static_cast<std::size_t>(hi - word_of_phoneme.begin())};
  }
  bool operator==(const AlignmentHierarchy&) const = default;
};

// Boundary jitter tolerated (and snapped) between phoneme and word tiers.
inline constexpr double kBoundaryTolerance = 1e-3;

inline bool is_silence(const std::set<std::string>& labels, std::string_view label) {
  std::string lower(label);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return labels.count(lower) > 0;
}

namespace detail {

inline void check_segments(const std::vector<Segment>& segs, const char* tier) {
  std::string bad;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment& s = segs[i];
    if (!std::isfinite(s.start_s) || !std::isfinite(s.end_s) || s.start_s < 0.0 ||
        s.start_s >= s.end_s) {
      throw Error("alignment", errc::kValidation,
                  std::string(tier) + "[" + std::to_string(i) + "] '" + s.label +
                      "' has invalid bounds [" + std::to_string(s.start_s) + ", " +
                      std::to_string(s.end_s) + "]");
    }
    if (i > 0 && segs[i - 1].end_s > s.start_s + kBoundaryTolerance) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(i - 1) + "/" + std::to_string(i);
    }
  }
  if (!bad.empty()) {
    throw Error("alignment", errc::kValidation,
                std::string("overlapping or unordered ") + tier + " at indices " + bad);
  }
}

}  // namespace detail

// Validates tiers, snaps phoneme boundaries onto word boundaries within the
// tolerance and fills word_of_phoneme. `hint`, when non-empty, gives the word
// each phoneme claims to belong to and must agree with containment.
inline void link_hierarchy(AlignmentHierarchy& h, const std::vector<long long>& hint = {}) {
  detail::check_segments(h.words, "words");
  detail::check_segments(h.phonemes, "phonemes");
  if (h.utterance.start_s >= h.utterance.end_s) {
    throw Error("alignment", errc::kValidation, "utterance interval is empty");
  }
  if (!h.words.empty() &&
      (h.words.front().start_s < h.utterance.start_s - kBoundaryTolerance ||
       h.words.back().end_s > h.utterance.end_s + kBoundaryTolerance)) {
    throw Error("alignment", errc::kContainment, "utterance interval does not cover all words");
  }

  h.word_of_phoneme.assign(h.phonemes.size(), 0);
  std::size_t w = 0;
  for (std::size_t p = 0; p < h.phonemes.size(); ++p) {
    Segment& ph = h.phonemes[p];
    while (w < h.words.size() && h.words[w].end_s < ph.end_s - kBoundaryTolerance) ++w;
    const bool inside = w < h.words.size() &&
                        ph.start_s >= h.words[w].start_s - kBoundaryTolerance &&
                        ph.end_s <= h.words[w].end_s + kBoundaryTolerance;
    if (!inside) {
      throw Error("alignment", errc::kContainment,
                  "phoneme " + std::to_string(p) + " '" + ph.label + "' [" +
                      std::to_string(ph.start_s) + ", " + std::to_string(ph.end_s) +
                      "] is not inside any word");
    }
    if (!hint.empty() && hint[p] != static_cast<long long>(w)) {
      throw Error("alignment", errc::kContainment,
                  "phoneme " + std::to_string(p) + " '" + ph.label + "' claims word " +
                      std::to_string(hint[p]) + " but lies inside word " + std::to_string(w));
    }
    const Segment& word = h.words[w];
    if (std::abs(ph.start_s - word.start_s) <= kBoundaryTolerance) ph.start_s = word.start_s;
    if (std::abs(ph.end_s - word.end_s) <= kBoundaryTolerance) ph.end_s = word.end_s;
    h.word_of_phoneme[p] = w;
  }
}

// ---------------------------------------------------------------------------
// TextGrid

namespace detail {

// Praat's text formats reduce to the same token stream once labels such as
// `xmin =` or `item [1]:` are skipped: quoted strings, numbers and <flags>.
struct PraatToken {
  enum Kind { string, number, flag } kind;
  std::string text;
  double value = 0.0;
};

inline std::vector<PraatToken> tokenize_praat(std::string_view s) {
  std::vector<PraatToken> out;
  std::size_t i = 0;
  if (s.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '"') {
      std::string text;
      ++i;
      while (true) {
        if (i >= s.size()) throw Error("alignment", errc::kParse, "unterminated string in TextGrid");
        if (s[i] == '"') {
          if (i + 1 < s.size() && s[i + 1] == '"') {
            text.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        text.push_back(s[i++]);
      }
      out.push_back({PraatToken::string, std::move(text)});
    } else if (c == '[') {
      const auto close = s.find(']', i);
      i = close == std::string_view::npos ? s.size() : close + 1;
    } else if (c == '!') {
      const auto eol = s.find('\n', i);
      i = eol == std::string_view::npos ? s.size() : eol + 1;
    } else if (c == '<') {
      const auto close = s.find('>', i);
      if (close == std::string_view::npos) throw Error("alignment", errc::kParse, "unterminated <flag>");
      out.push_back({PraatToken::flag, std::string(s.substr(i + 1, close - i - 1))});
      i = close + 1;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.' ||
                              s[j] == '-' || s[j] == '+')) {
        ++j;
      }
      const std::string num(s.substr(i, j - i));
      char* end = nullptr;
      const double v = std::strtod(num.c_str(), &end);
      if (end != num.c_str() + num.size()) {
        throw Error("alignment", errc::kParse, "bad number '" + num + "' in TextGrid");
      }
      out.push_back({PraatToken::number, num, v});
      i = j;
    } else {
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '"' &&
             s[i] != '[') {
        ++i;
      }
    }
  }
  return out;
}

struct PraatTier {
  std::string klass;
  std::string name;
  std::vector<Segment> intervals;
};

class PraatReader {
 public:
  explicit PraatReader(std::vector<PraatToken> t) : toks_(std::move(t)) {}

  std::string str() {
    const PraatToken& t = next();
    if (t.kind != PraatToken::string) fail("expected string, got '" + t.text + "'");
    return t.text;
  }
  double num() {
    const PraatToken& t = next();
    if (t.kind != PraatToken::number) fail("expected number, got '" + t.text + "'");
    return t.value;
  }
  std::size_t count() {
    const double v = num();
    if (v < 0 || v != std::floor(v)) fail("expected count");
    return static_cast<std::size_t>(v);
  }
  bool at_flag() const { return pos_ < toks_.size() && toks_[pos_].kind == PraatToken::flag; }
  std::string flag() { return next().text; }

 private:
  const PraatToken& next() {
    if (pos_ >= toks_.size()) fail("unexpected end of TextGrid");
    return toks_[pos_++];
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("alignment", errc::kParse, what + " (token " + std::to_string(pos_) + ")");
  }
  std::vector<PraatToken> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

struct TextGridInfo {
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<detail::PraatTier> tiers;
};

inline TextGridInfo read_textgrid(std::string_view text) {
  detail::PraatReader r(detail::tokenize_praat(text));
  if (r.str() != "ooTextFile") throw Error("alignment", errc::kParse, "not an ooTextFile");
  if (r.str() != "TextGrid") throw Error("alignment", errc::kParse, "object class is not TextGrid");
  TextGridInfo g;
  g.xmin = r.num();
  g.xmax = r.num();
  if (r.at_flag() && r.flag() != "exists") return g;
  const std::size_t n_tiers = r.count();
  for (std::size_t t = 0; t < n_tiers; ++t) {
    detail::PraatTier tier;
    tier.klass = r.str();
    tier.name = r.str();
    r.num();
    r.num();
    const std::size_t n = r.count();
    for (std::size_t k = 0; k < n; ++k) {
      if (tier.klass == "IntervalTier") {
        Segment s;
        s.start_s = r.num();
        s.end_s = r.num();
        s.label = r.str();
        tier.intervals.push_back(std::move(s));
      } else {
        const double at = r.num();
        tier.intervals.push_back({r.str(), at, at});
      }
    }
    g.tiers.push_back(std::move(tier));
  }
  return g;
}

inline AlignmentHierarchy parse_textgrid(std::string_view text, std::string_view word_tier = "words",
                                         std::string_view phone_tier = "phones",
                                         std::set<std::string> silence = default_silence_labels()) {
  const TextGridInfo g = read_textgrid(text);
  auto find = [&](std::string_view name) -> const detail::PraatTier& {
    for (const auto& t : g.tiers) {
      if (t.name == name) {
        if (t.klass != "IntervalTier") {
          throw Error("alignment", errc::kParse, "tier '" + t.name + "' is not an IntervalTier");
        }
        return t;
      }
    }
    throw Error("alignment", errc::kTierNotFound, "tier '" + std::string(name) + "' not found");
  };
  const auto& wt = find(word_tier);
  const auto& pt = find(phone_tier);

  AlignmentHierarchy h;
  h.silence_labels = std::move(silence);
  double lo = g.xmin, hi = g.xmax;
  std::string text_out;
  for (const auto& s : wt.intervals) {
    lo = std::min(lo, s.start_s);
    hi = std::max(hi, s.end_s);
    if (is_silence(h.silence_labels, s.label)) continue;
    h.words.push_back(s);
    text_out += (text_out.empty() ? "" : " ") + s.label;
  }
  for (const auto& s : pt.intervals) {
    lo = std::min(lo, s.start_s);
    hi = std::max(hi, s.end_s);
    if (!is_silence(h.silence_labels, s.label)) h.phonemes.push_back(s);
  }
  h.utterance = {text_out, lo, hi};
  link_hierarchy(h);
  return h;
}

// ---------------------------------------------------------------------------
// JSON form

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw Error("alignment", errc::kSchema, path + ": expected object");
  const auto it = j.find(key);
  if (it == j.end()) throw Error("alignment", errc::kSchema, path + "." + key + ": missing");
  return *it;
}

inline double number_field(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number()) throw Error("alignment", errc::kSchema, path + "." + key + ": expected number");
  return v.get<double>();
}

inline std::string string_field(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_string()) throw Error("alignment", errc::kSchema, path + "." + key + ": expected string");
  return v.get<std::string>();
}

}  // namespace detail

inline AlignmentHierarchy alignment_from_json(const nlohmann::json& j,
                                              std::set<std::string> silence = default_silence_labels()) {
  using detail::field;
  using detail::number_field;
  using detail::string_field;

  AlignmentHierarchy h;
  h.silence_labels = std::move(silence);
  const auto& u = field(j, "utterance", "$");
  h.utterance = {u.contains("text") ? string_field(u, "text", "$.utterance") : std::string{},
                 number_field(u, "start", "$.utterance"), number_field(u, "end", "$.utterance")};

  const auto& words = field(j, "words", "$");
  if (!words.is_array()) throw Error("alignment", errc::kSchema, "$.words: expected array");
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string path = "$.words[" + std::to_string(i) + "]";
    Segment s{string_field(words[i], "label", path), number_field(words[i], "start", path),
              number_field(words[i], "end", path)};
    if (!is_silence(h.silence_labels, s.label)) h.words.push_back(std::move(s));
  }

  const auto& phones = field(j, "phonemes", "$");
  if (!phones.is_array()) throw Error("alignment", errc::kSchema, "$.phonemes: expected array");
  std::vector<long long> hint;
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const std::string path = "$.phonemes[" + std::to_string(i) + "]";
    Segment s{string_field(phones[i], "label", path), number_field(phones[i], "start", path),
              number_field(phones[i], "end", path)};
    if (is_silence(h.silence_labels, s.label)) continue;
    const auto& wi = field(phones[i], "word", path);
    if (!wi.is_number_integer()) throw Error("alignment", errc::kSchema, path + ".word: expected integer");
    hint.push_back(wi.get<long long>());
    h.phonemes.push_back(std::move(s));
  }
  link_hierarchy(h, hint);
  return h;
}

inline AlignmentHierarchy parse_alignment_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("alignment", errc::kParse, e.what(), e.byte);
  }
  return alignment_from_json(j);
}

inline nlohmann::json alignment_to_json(const AlignmentHierarchy& h) {
  nlohmann::json j;
  j["utterance"] = {{"start", h.utterance.start_s}, {"end", h.utterance.end_s}, {"text", h.utterance.label}};
  j["words"] = nlohmann::json::array();
  for (const auto& w : h.words) j["words"].push_back({{"label", w.label}, {"start", w.start_s}, {"end", w.end_s}});
  j["phonemes"] = nlohmann::json::array();
  for (std::size_t p = 0; p < h.phonemes.size(); ++p) {
    const auto& s = h.phonemes[p];
    j["phonemes"].push_back(
        {{"label", s.label}, {"start", s.start_s}, {"end", s.end_s}, {"word", h.word_of_phoneme[p]}});
  }
  return j;
}

inline std::string serialize_alignment_json(const AlignmentHierarchy& h) {
  return alignment_to_json(h).dump(2);
}

// Long-format TextGrid with "words" and "phones" tiers. Gaps between segments
// (and before/after them inside the utterance) are written as empty intervals.
inline std::string serialize_textgrid(const AlignmentHierarchy& h, std::string_view word_tier = "words",
                                      std::string_view phone_tier = "phones") {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  };
  auto fill = [&](const std::vector<Segment>& segs) {
    std::vector<Segment> out;
    double t = h.utterance.start_s;
    for (const auto& s : segs) {
      if (s.start_s > t) out.push_back({"", t, s.start_s});
      out.push_back(s);
      t = s.end_s;
    }
    if (t < h.utterance.end_s) out.push_back({"", t, h.utterance.end_s});
    return out;
  };
  std::ostringstream os;
  os << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
  os << "xmin = " << num(h.utterance.start_s) << "\nxmax = " << num(h.utterance.end_s) << "\n";
  os << "tiers? <exists>\nsize = 2\nitem []:\n";
  int item = 1;
  for (const auto& [name, segs] : {std::pair{word_tier, fill(h.words)}, std::pair{phone_tier, fill(h.phonemes)}}) {
    os << "    item [" << item++ << "]:\n";
    os << "        class = \"IntervalTier\"\n        name = " << quote(std::string(name)) << "\n";
    os << "        xmin = " << num(h.utterance.start_s) << "\n        xmax = " << num(h.utterance.end_s) << "\n";
    os << "        intervals: size = " << segs.size() << "\n";
    for (std::size_t i = 0; i < segs.size(); ++i) {
      os << "        intervals [" << i + 1 << "]:\n";
      os << "            xmin = " << num(segs[i].start_s) << "\n";
      os << "            xmax = " << num(segs[i].end_s) << "\n";
      os << "            text = " << quote(segs[i].label) << "\n";
    }
  }
  return os.str();
}

// Dispatches on content: JSON objects start with '{', anything else is a TextGrid.
inline AlignmentHierarchy parse_alignment(std::string_view text, std::string_view word_tier = "words",
                                          std::string_view phone_tier = "phones") {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_alignment_json(text);
  return parse_textgrid(text, word_tier, phone_tier);
}

}  // namespace emoedit
