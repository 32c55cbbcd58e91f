#pragma once

// Level-targeted edits of a HedMatrix. Every edit is a pure transformation:
// the input matrix is never touched and results are clamped to [0, 1].

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emoedit/error.hpp"
#include "emoedit/hed.hpp"

namespace emoedit {

// Which units of a level an op touches; `range` is inclusive.
struct Selector {
  enum class Kind { all, index, range };
  Kind kind = Kind::all;
  std::size_t first = 0;
  std::size_t last = 0;

  static Selector all() { return {}; }
  static Selector index(std::size_t i) { return {Kind::index, i, i}; }
  static Selector range(std::size_t first, std::size_t last) { return {Kind::range, first, last}; }

  bool operator==(const Selector&) const = default;
};

enum class Action { set, scale, add };

struct EditOp {
  Level level = Level::utterance;
  Selector selector;
  std::optional<std::string> emotion;  // nullopt: every emotion
  Action action = Action::set;
  double value = 0.0;

  bool operator==(const EditOp&) const = default;
};

struct EditMeta {
  std::string author;
  std::string timestamp;
  std::string source;  // fingerprint of the matrix the script was written against
  bool operator==(const EditMeta&) const = default;
};

struct EditScript {
  std::vector<EditOp> ops;
  EditMeta meta;
  bool operator==(const EditScript&) const = default;
};

namespace detail {

inline std::string describe(std::size_t op_index, const EditOp& op) {
  return "op " + std::to_string(op_index) + " (" + to_string(op.level) + ")";
}

inline std::vector<std::size_t> resolve_emotions(const HedMatrix& m, const EditOp& op, std::size_t op_index) {
  std::vector<std::size_t> out;
  if (!op.emotion) {
    for (std::size_t e = 0; e < m.k(); ++e) out.push_back(e);
    return out;
  }
  const auto e = m.emotion_index(*op.emotion);
  if (!e) throw Error("editor", errc::kLabel, describe(op_index, op) + ": unknown emotion '" + *op.emotion + "'");
  out.push_back(*e);
  return out;
}

// Inclusive unit range selected by `s` among `count` units.
inline std::pair<std::size_t, std::size_t> resolve_units(const Selector& s, std::size_t count, const char* unit,
                                                         const std::string& who) {
  if (s.kind == Selector::Kind::all) {
    if (count == 0) return {1, 0};
    return {0, count - 1};
  }
  if (s.first > s.last || s.last >= count) {
    throw Error("editor", errc::kIndex,
                who + ": " + unit + " selector [" + std::to_string(s.first) + ", " + std::to_string(s.last) +
                    "] out of range (" + std::to_string(count) + " " + unit + "s)");
  }
  return {s.first, s.last};
}

inline double act(Action a, double cell, double v) {
  switch (a) {
    case Action::set: return std::clamp(v, 0.0, 1.0);
    case Action::scale: return std::clamp(cell * v, 0.0, 1.0);
    case Action::add: return std::clamp(cell + v, 0.0, 1.0);
  }
  return cell;
}

}  // namespace detail

inline void apply_in_place(HedMatrix& m, const EditOp& op, std::size_t op_index = 0) {
  const std::string who = detail::describe(op_index, op);
  if (!std::isfinite(op.value)) throw Error("editor", errc::kInvalidArgument, who + ": value must be finite");
  const std::vector<std::size_t> emotions = detail::resolve_emotions(m, op, op_index);

  std::size_t row_first = 0, row_last = 0;  // half-open
  switch (op.level) {
    case Level::utterance: {
      detail::resolve_units(op.selector, 1, "utterance", who);
      row_first = 0;
      row_last = m.size();
      break;
    }
    case Level::word: {
      const auto [lo, hi] = detail::resolve_units(op.selector, m.word_count(), "word", who);
      const auto first = std::lower_bound(m.word_of_phoneme.begin(), m.word_of_phoneme.end(), lo);
      const auto last = std::upper_bound(m.word_of_phoneme.begin(), m.word_of_phoneme.end(), hi);
      row_first = static_cast<std::size_t>(first - m.word_of_phoneme.begin());
      row_last = hi < lo ? row_first : static_cast<std::size_t>(last - m.word_of_phoneme.begin());
      break;
    }
    case Level::phoneme: {
      const auto [lo, hi] = detail::resolve_units(op.selector, m.size(), "phoneme", who);
      row_first = lo;
      row_last = hi < lo ? lo : hi + 1;
      break;
    }
  }
  for (std::size_t r = row_first; r < row_last; ++r) {
    for (std::size_t e : emotions) {
      double& cell = m.at(r, op.level, e);
      cell = detail::act(op.action, cell, op.value);
    }
  }
}

inline HedMatrix apply(const HedMatrix& m, const EditScript& script) {
  HedMatrix out = m;
  for (std::size_t i = 0; i < script.ops.size(); ++i) apply_in_place(out, script.ops[i], i);
  return out;
}

// ---------------------------------------------------------------------------
// Intensity sweeps over utterance (U), word (W), phoneme (P) or word and
// phoneme together (WP).

enum class SweepCondition { U, W, P, WP };

inline std::string to_string(SweepCondition c) {
  switch (c) {
    case SweepCondition::U: return "U";
    case SweepCondition::W: return "W";
    case SweepCondition::P: return "P";
    case SweepCondition::WP: return "WP";
  }
  return "?";
}

inline SweepCondition sweep_condition_from_string(std::string_view s) {
  if (s == "U" || s == "utterance") return SweepCondition::U;
  if (s == "W" || s == "word") return SweepCondition::W;
  if (s == "P" || s == "phoneme") return SweepCondition::P;
  if (s == "WP" || s == "wp" || s == "word+phoneme") return SweepCondition::WP;
  throw Error("editor", errc::kInvalidArgument, "unknown sweep condition '" + std::string(s) + "'");
}

// The set-ops that put `value` into the cells a sweep condition targets.
inline EditScript sweep_script(const HedMatrix& m, SweepCondition cond, const Selector& sel,
                               const std::optional<std::string>& emotion, double value) {
  EditScript s;
  switch (cond) {
    case SweepCondition::U: s.ops.push_back({Level::utterance, Selector::all(), emotion, Action::set, value}); break;
    case SweepCondition::W: s.ops.push_back({Level::word, sel, emotion, Action::set, value}); break;
    case SweepCondition::P: s.ops.push_back({Level::phoneme, sel, emotion, Action::set, value}); break;
    case SweepCondition::WP: {
      s.ops.push_back({Level::word, sel, emotion, Action::set, value});
      const auto [lo, hi] = detail::resolve_units(sel, m.word_count(), "word", "sweep");
      if (hi < lo) break;
      const auto first = std::lower_bound(m.word_of_phoneme.begin(), m.word_of_phoneme.end(), lo);
      const auto last = std::upper_bound(m.word_of_phoneme.begin(), m.word_of_phoneme.end(), hi);
      if (first == last) break;
      const auto p0 = static_cast<std::size_t>(first - m.word_of_phoneme.begin());
      const auto p1 = static_cast<std::size_t>(last - m.word_of_phoneme.begin()) - 1;
      s.ops.push_back({Level::phoneme, Selector::range(p0, p1), emotion, Action::set, value});
      break;
    }
  }
  return s;
}

inline std::vector<HedMatrix> sweep(const HedMatrix& m, SweepCondition cond, const Selector& sel,
                                    const std::optional<std::string>& emotion, const std::vector<double>& values) {
  std::vector<HedMatrix> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(apply(m, sweep_script(m, cond, sel, emotion, v)));
  return out;
}

// ---------------------------------------------------------------------------

// Set-ops that turn `a` into `b`. A target whose K emotions all change to one
// value becomes a single all-emotion op, and consecutive targets receiving the
// same op collapse into one range.
inline EditScript diff(const HedMatrix& a, const HedMatrix& b) {
  if (a.emotions != b.emotions || a.word_of_phoneme != b.word_of_phoneme || a.phoneme_labels != b.phoneme_labels ||
      a.size() != b.size()) {
    throw Error("editor", errc::kShape, "matrices differ in shape, labels or emotions");
  }
  EditScript script;
  script.meta.source = hed_fingerprint(a);
  const std::size_t k = a.k();

  auto emit_level = [&](Level level, std::size_t targets, auto row_of) {
    // (emotion key, value) -> targets, in target order; key k means all emotions
    std::map<std::pair<std::size_t, double>, std::vector<std::size_t>> units;
    for (std::size_t t = 0; t < targets; ++t) {
      const auto row = row_of(t);
      if (!row) continue;
      std::vector<std::size_t> changed;
      for (std::size_t e = 0; e < k; ++e) {
        if (a.at(*row, level, e) != b.at(*row, level, e)) changed.push_back(e);
      }
      if (changed.empty()) continue;
      const double v0 = b.at(*row, level, changed.front());
      const bool uniform =
          changed.size() == k && k > 1 &&
          std::all_of(changed.begin(), changed.end(), [&](std::size_t e) { return b.at(*row, level, e) == v0; });
      if (uniform) {
        units[{k, v0}].push_back(t);
      } else {
        for (std::size_t e : changed) units[{e, b.at(*row, level, e)}].push_back(t);
      }
    }
    for (const auto& [key, ts] : units) {
      const std::optional<std::string> emotion =
          key.first == k ? std::nullopt : std::optional<std::string>(a.emotions[key.first]);
      std::size_t i = 0;
      while (i < ts.size()) {
        std::size_t j = i;
        while (j + 1 < ts.size() && ts[j + 1] == ts[j] + 1) ++j;
        Selector sel = level == Level::utterance ? Selector::all()
                       : i == j                  ? Selector::index(ts[i])
                                                 : Selector::range(ts[i], ts[j]);
        script.ops.push_back({level, sel, emotion, Action::set, key.second});
        i = j + 1;
      }
    }
  };

  if (a.size() == 0) return script;
  emit_level(Level::utterance, 1, [](std::size_t) { return std::optional<std::size_t>(0); });
  emit_level(Level::word, a.word_count(), [&](std::size_t w) -> std::optional<std::size_t> {
    const auto it = std::lower_bound(a.word_of_phoneme.begin(), a.word_of_phoneme.end(), w);
    if (it == a.word_of_phoneme.end() || *it != w) return std::nullopt;
    return static_cast<std::size_t>(it - a.word_of_phoneme.begin());
  });
  emit_level(Level::phoneme, a.size(), [](std::size_t p) { return std::optional<std::size_t>(p); });
  return script;
}

// ---------------------------------------------------------------------------
// JSON form: {ops: [{level, selector, emotion, action, value}], meta: {...}}
// selector is "all", {"index": i} or {"range": [first, last]}.

inline nlohmann::json selector_to_json(const Selector& s) {
  switch (s.kind) {
    case Selector::Kind::all: return "all";
    case Selector::Kind::index: return {{"index", s.first}};
    case Selector::Kind::range: return {{"range", {s.first, s.last}}};
  }
  return nullptr;
}

inline nlohmann::json script_to_json(const EditScript& s) {
  static const char* actions[] = {"set", "scale", "add"};
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : s.ops) {
    ops.push_back({{"level", to_string(op.level)},
                   {"selector", selector_to_json(op.selector)},
                   {"emotion", op.emotion ? *op.emotion : std::string("all")},
                   {"action", actions[static_cast<int>(op.action)]},
                   {"value", op.value}});
  }
  return {{"ops", ops},
          {"meta", {{"author", s.meta.author}, {"timestamp", s.meta.timestamp}, {"source", s.meta.source}}}};
}

inline std::string serialize_script(const EditScript& s) { return script_to_json(s).dump(2) + "\n"; }

// Accepts "all", a bare index, {"index": n} or {"range": [a, b]}.
inline Selector selector_from_json(const nlohmann::json& sel) {
  if (sel.is_string() && sel.get<std::string>() == "all") return Selector::all();
  if (sel.is_number_unsigned()) return Selector::index(sel.get<std::size_t>());
  if (sel.is_object() && sel.contains("index") && sel["index"].is_number_unsigned()) {
    return Selector::index(sel["index"].get<std::size_t>());
  }
  if (sel.is_object() && sel.contains("range") && sel["range"].is_array() && sel["range"].size() == 2 &&
      sel["range"][0].is_number_unsigned() && sel["range"][1].is_number_unsigned()) {
    return Selector::range(sel["range"][0].get<std::size_t>(), sel["range"][1].get<std::size_t>());
  }
  throw Error("editor", errc::kSchema, "selector must be \"all\", {\"index\": n} or {\"range\": [a, b]}");
}

inline EditScript script_from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& path, const std::string& what) {
    return Error("editor", errc::kSchema, path + ": " + what);
  };
  if (!j.is_object() || !j.contains("ops") || !j["ops"].is_array()) throw bad("$.ops", "expected array");
  EditScript s;
  for (std::size_t i = 0; i < j["ops"].size(); ++i) {
    const auto& o = j["ops"][i];
    const std::string path = "$.ops[" + std::to_string(i) + "]";
    if (!o.is_object()) throw bad(path, "expected object");
    EditOp op;
    try {
      op.level = level_from_string(o.at("level").get<std::string>());
    } catch (const nlohmann::json::exception&) {
      throw bad(path + ".level", "expected utterance|word|phoneme");
    } catch (const Error&) {
      throw bad(path + ".level", "expected utterance|word|phoneme");
    }

    try {
      op.selector = selector_from_json(o.value("selector", nlohmann::json("all")));
    } catch (const Error&) {
      throw bad(path + ".selector", "expected \"all\", {\"index\": n} or {\"range\": [a, b]}");
    }

    const auto emo = o.value("emotion", nlohmann::json("all"));
    if (!emo.is_string()) throw bad(path + ".emotion", "expected string");
    if (emo.get<std::string>() != "all") op.emotion = emo.get<std::string>();

    const auto action = o.value("action", nlohmann::json(""));
    if (action == "set") op.action = Action::set;
    else if (action == "scale") op.action = Action::scale;
    else if (action == "add") op.action = Action::add;
    else throw bad(path + ".action", "expected set|scale|add");

    if (!o.contains("value") || !o["value"].is_number()) throw bad(path + ".value", "expected number");
    op.value = o["value"].get<double>();
    s.ops.push_back(std::move(op));
  }
  if (j.contains("meta") && j["meta"].is_object()) {
    const auto& m = j["meta"];
    s.meta.author = m.value("author", "");
    s.meta.timestamp = m.value("timestamp", "");
    s.meta.source = m.value("source", "");
  }
  return s;
}

inline EditScript parse_script(std::string_view text) {
  try {
    return script_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("editor", errc::kParse, e.what(), e.byte);
  }
}

}  // namespace emoedit
