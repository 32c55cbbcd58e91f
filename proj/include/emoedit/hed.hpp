#pragma once

// Hierarchical emotion distribution: one row per spoken phoneme holding the
// utterance, word and phoneme intensity vectors side by side. The utterance
// block repeats on every row and the word block repeats on every phoneme of
// the word.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "emoedit/alignment.hpp"
#include "emoedit/audio.hpp"
#include "emoedit/error.hpp"
#include "emoedit/features.hpp"
#include "emoedit/ranker.hpp"

namespace emoedit {

struct HedMatrix {
  std::vector<std::string> emotions;
  std::vector<std::string> phoneme_labels;
  std::vector<std::size_t> word_of_phoneme;
  std::vector<std::vector<double>> rows;  // each 3K: [utterance | word | phoneme]

  std::size_t k() const { return emotions.size(); }
  std::size_t size() const { return rows.size(); }
  std::size_t word_count() const { return word_of_phoneme.empty() ? 0 : word_of_phoneme.back() + 1; }

  static std::size_t block_offset(Level l, std::size_t k) { return static_cast<std::size_t>(l) * k; }
  double& at(std::size_t row, Level l, std::size_t e) { return rows[row][block_offset(l, k()) + e]; }
  double at(std::size_t row, Level l, std::size_t e) const { return rows[row][block_offset(l, k()) + e]; }

  std::optional<std::size_t> emotion_index(std::string_view e) const {
    for (std::size_t i = 0; i < emotions.size(); ++i) {
      if (emotions[i] == e) return i;
    }
    return std::nullopt;
  }

  // Throws unless shapes, value ranges and both replication invariants hold.
  void validate() const {
    const std::size_t width = 3 * k();
    if (emotions.empty()) throw Error("hed", errc::kSchema, "no emotions");
    if (phoneme_labels.size() != rows.size() || word_of_phoneme.size() != rows.size()) {
      throw Error("hed", errc::kSchema, "label/word/row counts disagree");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != width) {
        throw Error("hed", errc::kSchema,
                    "row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) + " values, expected " +
                        std::to_string(width));
      }
      for (std::size_t c = 0; c < width; ++c) {
        const double v = rows[r][c];
        if (!(v >= 0.0 && v <= 1.0)) {
          throw Error("hed", errc::kValidation,
                      "row " + std::to_string(r) + " column " + column_name(c) + " value " + std::to_string(v) +
                          " outside [0, 1]");
        }
      }
      if (r > 0 && word_of_phoneme[r] < word_of_phoneme[r - 1]) {
        throw Error("hed", errc::kValidation, "word indices decrease at row " + std::to_string(r));
      }
      for (std::size_t e = 0; e < k(); ++e) {
        if (at(r, Level::utterance, e) != at(0, Level::utterance, e)) {
          throw Error("hed", errc::kValidation,
                      "utterance block differs between rows 0 and " + std::to_string(r) + " (" + emotions[e] + ")");
        }
        if (r > 0 && word_of_phoneme[r] == word_of_phoneme[r - 1] &&
            at(r, Level::word, e) != at(r - 1, Level::word, e)) {
          throw Error("hed", errc::kValidation,
                      "word block differs within word " + std::to_string(word_of_phoneme[r]) + " at row " +
                          std::to_string(r) + " (" + emotions[e] + ")");
        }
      }
    }
  }

  std::string column_name(std::size_t c) const {
    static const char* prefix[] = {"utt_", "word_", "phon_"};
    return prefix[c / k()] + emotions[c % k()];
  }

  bool operator==(const HedMatrix&) const = default;
};

// ---------------------------------------------------------------------------

class ModelBank {
 public:
  ModelBank() = default;
  explicit ModelBank(std::vector<std::string> emotions) : emotions_(std::move(emotions)) {}

  const std::vector<std::string>& emotions() const { return emotions_; }

  void add(RankingModel m) {
    if (std::find(emotions_.begin(), emotions_.end(), m.emotion) == emotions_.end()) emotions_.push_back(m.emotion);
    const auto key = std::make_pair(m.emotion, m.level);
    models_[key] = std::move(m);
  }

  const RankingModel& get(const std::string& emotion, Level level) const {
    const auto it = models_.find({emotion, level});
    if (it == models_.end()) {
      throw Error("hed", errc::kIncompleteBank, "no model for (" + emotion + ", " + to_string(level) + ")");
    }
    return it->second;
  }

  void check_complete() const {
    if (emotions_.empty()) throw Error("hed", errc::kIncompleteBank, "model bank has no emotions");
    for (const auto& e : emotions_) {
      for (Level l : kLevels) get(e, l);
    }
  }

  bool operator==(const ModelBank&) const = default;

 private:
  std::vector<std::string> emotions_;
  std::map<std::pair<std::string, Level>, RankingModel> models_;
};

inline std::string model_filename(const std::string& emotion, Level level) {
  return emotion + "." + to_string(level) + ".json";
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("io", errc::kIo, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("io", errc::kIo, "cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("io", errc::kIo, "write failed for " + p.string());
}

// A bank directory holds bank.json (emotion order) plus one file per
// (emotion, level) model.
inline void save_bank(const ModelBank& bank, const std::filesystem::path& dir) {
  bank.check_complete();
  nlohmann::json index = {{"version", kModelFormatVersion}, {"emotions", bank.emotions()}};
  write_file(dir / "bank.json", index.dump(2) + "\n");
  for (const auto& e : bank.emotions()) {
    for (Level l : kLevels) write_file(dir / model_filename(e, l), save_model(bank.get(e, l)));
  }
}

inline ModelBank load_bank(const std::filesystem::path& dir) {
  const auto index_path = dir / "bank.json";
  if (!std::filesystem::exists(index_path)) {
    throw Error("hed", errc::kIncompleteBank, "no bank.json in " + dir.string());
  }
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file(index_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("ranker", errc::kCorruptFile, std::string("bank.json: ") + e.what());
  }
  if (!index.contains("emotions") || !index["emotions"].is_array()) {
    throw Error("ranker", errc::kCorruptFile, "bank.json has no emotion list");
  }
  ModelBank bank(index["emotions"].get<std::vector<std::string>>());
  for (const auto& e : bank.emotions()) {
    for (Level l : kLevels) {
      const auto p = dir / model_filename(e, l);
      if (!std::filesystem::exists(p)) {
        throw Error("hed", errc::kIncompleteBank, "missing model file " + p.string());
      }
      RankingModel m = load_model(read_file(p));
      if (m.emotion != e || m.level != l) {
        throw Error("ranker", errc::kCorruptFile, p.string() + " holds a different (emotion, level)");
      }
      bank.add(std::move(m));
    }
  }
  bank.check_complete();
  return bank;
}

// ---------------------------------------------------------------------------

// Intensity vector (one value per bank emotion) of one segment at one level.
inline std::vector<double> score_segment(const FeatureVector& fv, const ModelBank& bank, Level level) {
  std::vector<double> out;
  out.reserve(bank.emotions().size());
  for (const auto& e : bank.emotions()) out.push_back(bank.get(e, level).score(fv));
  return out;
}

inline HedMatrix assemble_hed(const std::vector<std::string>& emotions, const AlignmentHierarchy& h,
                              const std::vector<double>& utterance_ed,
                              const std::vector<std::vector<double>>& word_eds,
                              const std::vector<std::vector<double>>& phoneme_eds) {
  const std::size_t k = emotions.size();
  HedMatrix m;
  m.emotions = emotions;
  for (std::size_t p = 0; p < h.phonemes.size(); ++p) {
    const std::size_t w = h.word_of_phoneme[p];
    std::vector<double> row;
    row.reserve(3 * k);
    row.insert(row.end(), utterance_ed.begin(), utterance_ed.end());
    row.insert(row.end(), word_eds[w].begin(), word_eds[w].end());
    row.insert(row.end(), phoneme_eds[p].begin(), phoneme_eds[p].end());
    m.phoneme_labels.push_back(h.phonemes[p].label);
    m.word_of_phoneme.push_back(w);
    m.rows.push_back(std::move(row));
  }
  return m;
}

inline HedMatrix extract_hed(const Waveform& wav, const AlignmentHierarchy& h, const ModelBank& bank,
                             const FeatureExtractor& fx = FeatureExtractor{}) {
  if (h.phonemes.empty()) throw Error("hed", errc::kEmptyHierarchy, "alignment has no phonemes");
  bank.check_complete();
  const Waveform w = to_analysis_rate(wav);

  const std::vector<double> utt = score_segment(fx.extract(w, h.utterance.interval()), bank, Level::utterance);
  std::vector<std::vector<double>> words(h.words.size());
  for (std::size_t i = 0; i < h.words.size(); ++i) {
    const auto [first, last] = h.phoneme_range(i);
    if (first == last) continue;  // no spoken phonemes, no rows to fill
    words[i] = score_segment(fx.extract(w, h.words[i].interval()), bank, Level::word);
  }
  std::vector<std::vector<double>> phones(h.phonemes.size());
  for (std::size_t p = 0; p < h.phonemes.size(); ++p) {
    phones[p] = score_segment(fx.extract(w, h.phonemes[p].interval()), bank, Level::phoneme);
  }
  return assemble_hed(bank.emotions(), h, utt, words, phones);
}

// ---------------------------------------------------------------------------
// CSV / JSON export

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error("hed", errc::kSchema, "unterminated quote on line " + std::to_string(line_no));
  out.push_back(std::move(cur));
  return out;
}

inline double parse_value(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("hed", errc::kSchema, where + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace detail

inline std::string serialize_hed_csv(const HedMatrix& m) {
  std::string out = "phoneme,word_index";
  for (std::size_t c = 0; c < 3 * m.k(); ++c) out += "," + detail::csv_field(m.column_name(c));
  out += "\n";
  for (std::size_t r = 0; r < m.size(); ++r) {
    out += detail::csv_field(m.phoneme_labels[r]) + "," + std::to_string(m.word_of_phoneme[r]);
    for (double v : m.rows[r]) out += "," + detail::format_double(v);
    out += "\n";
  }
  return out;
}

inline HedMatrix parse_hed_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = eol + 1;
  }
  if (lines.empty()) throw Error("hed", errc::kSchema, "empty HED file");

  const auto header = detail::split_csv_line(lines[0], 1);
  if (header.size() < 5 || (header.size() - 2) % 3 != 0 || header[0] != "phoneme" || header[1] != "word_index") {
    throw Error("hed", errc::kSchema, "header must be phoneme,word_index followed by 3K intensity columns");
  }
  HedMatrix m;
  const std::size_t k = (header.size() - 2) / 3;
  for (std::size_t e = 0; e < k; ++e) {
    const std::string& h = header[2 + e];
    if (h.rfind("utt_", 0) != 0) throw Error("hed", errc::kSchema, "column '" + h + "' should start with utt_");
    m.emotions.push_back(h.substr(4));
  }
  for (std::size_t c = 0; c < 3 * k; ++c) {
    if (header[2 + c] != m.column_name(c)) {
      throw Error("hed", errc::kSchema, "column " + std::to_string(c + 3) + " is '" + header[2 + c] +
                                            "', expected '" + m.column_name(c) + "'");
    }
  }

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto f = detail::split_csv_line(lines[li], li + 1);
    const std::string where = "row " + std::to_string(li);
    if (f.size() != header.size()) {
      throw Error("hed", errc::kSchema, where + " has " + std::to_string(f.size()) + " fields, expected " +
                                            std::to_string(header.size()));
    }
    const double wi = detail::parse_value(f[1], where + " column word_index");
    if (wi < 0 || wi != std::floor(wi)) throw Error("hed", errc::kSchema, where + ": bad word_index");
    std::vector<double> row(3 * k);
    for (std::size_t c = 0; c < 3 * k; ++c) {
      const std::string col = where + " column " + header[2 + c];
      row[c] = detail::parse_value(f[2 + c], col);
      if (!(row[c] >= 0.0 && row[c] <= 1.0)) {
        throw Error("hed", errc::kValidation, col + ": value " + f[2 + c] + " outside [0, 1]");
      }
    }
    m.phoneme_labels.push_back(f[0]);
    m.word_of_phoneme.push_back(static_cast<std::size_t>(wi));
    m.rows.push_back(std::move(row));
  }
  m.validate();
  return m;
}

inline nlohmann::json hed_to_json(const HedMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t k = m.k();
  for (std::size_t r = 0; r < m.size(); ++r) {
    const auto& row = m.rows[r];
    rows.push_back({{"phoneme", m.phoneme_labels[r]},
                    {"word_index", m.word_of_phoneme[r]},
                    {"utt", std::vector<double>(row.begin(), row.begin() + k)},
                    {"word", std::vector<double>(row.begin() + k, row.begin() + 2 * k)},
                    {"phon", std::vector<double>(row.begin() + 2 * k, row.end())}});
  }
  return {{"version", 1}, {"emotions", m.emotions}, {"rows", rows}};
}

inline std::string serialize_hed_json(const HedMatrix& m) { return hed_to_json(m).dump(2) + "\n"; }

inline HedMatrix hed_from_json(const nlohmann::json& j) {
  HedMatrix m;
  try {
    m.emotions = j.at("emotions").get<std::vector<std::string>>();
    const auto& rows = j.at("rows");
    if (!rows.is_array()) throw Error("hed", errc::kSchema, "$.rows: expected array");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string where = "$.rows[" + std::to_string(r) + "]";
      std::vector<double> row;
      for (const char* block : {"utt", "word", "phon"}) {
        const auto vals = rows[r].at(block).get<std::vector<double>>();
        if (vals.size() != m.k()) {
          throw Error("hed", errc::kSchema, where + "." + block + " has " + std::to_string(vals.size()) +
                                                " values, expected " + std::to_string(m.k()));
        }
        row.insert(row.end(), vals.begin(), vals.end());
      }
      m.phoneme_labels.push_back(rows[r].at("phoneme").get<std::string>());
      m.word_of_phoneme.push_back(rows[r].at("word_index").get<std::size_t>());
      m.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("hed", errc::kSchema, e.what());
  }
  m.validate();
  return m;
}

inline HedMatrix parse_hed_json(std::string_view text) {
  try {
    return hed_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("hed", errc::kParse, e.what(), e.byte);
  }
}

// Format by content: JSON starts with '{'.
inline HedMatrix parse_hed(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_hed_json(text);
  return parse_hed_csv(text);
}

inline std::string hed_fingerprint(const HedMatrix& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize_hed_csv(m)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace emoedit
