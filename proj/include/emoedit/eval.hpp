#pragma once

// Objective evaluation: prosody statistics, mel-cepstral distortion, DTW,
// frame disturbance, pitch/energy distortion and intensity-trend analysis.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emoedit/alignment.hpp"
#include "emoedit/audio.hpp"
#include "emoedit/dsp.hpp"
#include "emoedit/editor.hpp"
#include "emoedit/error.hpp"
#include "emoedit/features.hpp"

namespace emoedit {

struct ProsodyStats {
  double duration_s = 0.0;
  double pitch_mean_hz = 0.0;
  double pitch_std_hz = 0.0;
  double energy_mean_db = 0.0;
  double energy_std_db = 0.0;
  bool unvoiced = false;  // no voiced frame: pitch stats are 0
};

inline ProsodyStats prosody_stats_from_llds(const LldSet& llds) {
  ProsodyStats s;
  s.duration_s = llds.duration_s;
  std::vector<double> f0;
  for (std::size_t t = 0; t < llds.frames(); ++t) {
    if (llds.voiced[t]) f0.push_back(std::exp(llds[Lld::logF0][t]));
  }
  s.unvoiced = f0.empty();
  s.pitch_mean_hz = dsp::mean(f0);
  s.pitch_std_hz = dsp::stddev(f0);
  s.energy_mean_db = dsp::mean(llds[Lld::energy_db]);
  s.energy_std_db = dsp::stddev(llds[Lld::energy_db]);
  return s;
}

// Over the utterance interval of `h` when given, else the whole waveform.
inline ProsodyStats prosody_stats(const Waveform& wav, const AlignmentHierarchy* h = nullptr,
                                  const FeatureExtractor& fx = FeatureExtractor{}) {
  const Waveform w = to_analysis_rate(wav);
  const TimeInterval seg = h ? h->utterance.interval() : TimeInterval{0.0, w.duration_s()};
  return prosody_stats_from_llds(fx.extract_llds(w, seg));
}

// ---------------------------------------------------------------------------

using FrameSequence = std::vector<std::vector<double>>;
using WarpPath = std::vector<std::pair<std::size_t, std::size_t>>;

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

namespace detail {

inline void check_sequences(const FrameSequence& a, const FrameSequence& b, const char* who) {
  if (a.empty() || b.empty()) throw Error("eval", errc::kInvalidArgument, std::string(who) + ": empty sequence");
  const std::size_t d = a.front().size();
  for (const auto* s : {&a, &b}) {
    for (const auto& v : *s) {
      if (v.size() != d) throw Error("eval", errc::kShape, std::string(who) + ": frame dimensions differ");
    }
  }
}

}  // namespace detail

// DTW with steps (1,1), (1,0), (0,1) and Euclidean local cost. On ties the
// backtrace prefers the diagonal, then (1,0).
inline WarpPath dtw_align(const FrameSequence& a, const FrameSequence& b) {
  detail::check_sequences(a, b, "dtw");
  const std::size_t n = a.size(), m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(n * m, inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = euclidean(a[i], b[j]);
      if (i == 0 && j == 0) {
        at(i, j) = c;
        continue;
      }
      double best = inf;
      if (i > 0 && j > 0) best = at(i - 1, j - 1);
      if (i > 0) best = std::min(best, at(i - 1, j));
      if (j > 0) best = std::min(best, at(i, j - 1));
      at(i, j) = c + best;
    }
  }
  WarpPath path;
  std::size_t i = n - 1, j = m - 1;
  path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const double d = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
      if (d <= up && d <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    path.emplace_back(i, j);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline double path_cost(const FrameSequence& a, const FrameSequence& b, const WarpPath& path) {
  double c = 0.0;
  for (const auto& [i, j] : path) c += euclidean(a[i], b[j]);
  return c;
}

// RMS deviation of the warp path from the diagonal, in frames.
inline double frame_disturbance(const WarpPath& path) {
  if (path.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [i, j] : path) {
    const double d = static_cast<double>(i) - static_cast<double>(j);
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(path.size()));
}

// Mel-cepstral distortion in dB over 13-dim cepstra (c0 excluded).
inline double mcd_frame(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return 10.0 / std::numbers::ln10 * std::sqrt(2.0 * s);
}

inline double mcd(const FrameSequence& ref, const FrameSequence& test, bool use_dtw = true) {
  detail::check_sequences(ref, test, "mcd");
  double total = 0.0;
  std::size_t count = 0;
  if (use_dtw) {
    for (const auto& [i, j] : dtw_align(ref, test)) {
      total += mcd_frame(ref[i], test[j]);
      ++count;
    }
  } else {
    count = std::min(ref.size(), test.size());
    for (std::size_t t = 0; t < count; ++t) total += mcd_frame(ref[t], test[t]);
  }
  return total / static_cast<double>(count);
}

struct Distortion {
  std::optional<double> pitch_rmse_hz;  // absent without jointly voiced frames
  double energy_rmse_db = 0.0;
  double mcd_db = 0.0;
  double frame_disturbance = 0.0;
  std::size_t voiced_pairs = 0;
  std::size_t path_length = 0;
};

// DTW on the cepstra of both waveforms, then RMSE of pitch (jointly voiced
// pairs only) and energy along the path. MCD and FD come from the same path.
inline Distortion compare_waveforms(const Waveform& ref_in, const Waveform& test_in, bool use_dtw = true,
                                    const FeatureExtractor& fx = FeatureExtractor{}) {
  const Waveform ref = to_analysis_rate(ref_in), test = to_analysis_rate(test_in);
  const LldSet lr = fx.extract_llds(ref, {0.0, ref.duration_s()});
  const LldSet lt = fx.extract_llds(test, {0.0, test.duration_s()});
  const FrameSequence cr = lr.mfcc_frames(), ct = lt.mfcc_frames();

  WarpPath path;
  if (use_dtw) {
    path = dtw_align(cr, ct);
  } else {
    for (std::size_t t = 0; t < std::min(cr.size(), ct.size()); ++t) path.emplace_back(t, t);
  }

  Distortion d;
  d.path_length = path.size();
  double e2 = 0.0, p2 = 0.0, m = 0.0;
  for (const auto& [i, j] : path) {
    const double de = lr[Lld::energy_db][i] - lt[Lld::energy_db][j];
    e2 += de * de;
    m += mcd_frame(cr[i], ct[j]);
    if (lr.voiced[i] && lt.voiced[j]) {
      const double dp = std::exp(lr[Lld::logF0][i]) - std::exp(lt[Lld::logF0][j]);
      p2 += dp * dp;
      ++d.voiced_pairs;
    }
  }
  d.energy_rmse_db = std::sqrt(e2 / static_cast<double>(path.size()));
  d.mcd_db = m / static_cast<double>(path.size());
  d.frame_disturbance = frame_disturbance(path);
  if (d.voiced_pairs > 0) d.pitch_rmse_hz = std::sqrt(p2 / static_cast<double>(d.voiced_pairs));
  return d;
}

inline Distortion pitch_energy_distortion(const Waveform& ref, const Waveform& test) {
  return compare_waveforms(ref, test, true);
}

inline nlohmann::json distortion_to_json(const Distortion& d) {
  return {{"mcd_db", d.mcd_db},
          {"frame_disturbance", d.frame_disturbance},
          {"pitch_rmse_hz", d.pitch_rmse_hz ? nlohmann::json(*d.pitch_rmse_hz) : nlohmann::json(nullptr)},
          {"energy_rmse_db", d.energy_rmse_db},
          {"voiced_pairs", d.voiced_pairs},
          {"path_length", d.path_length}};
}

// ---------------------------------------------------------------------------
// Trend analysis

enum class ProsodyFeature { duration, pitch_mean, pitch_std, energy_mean, energy_std };
inline constexpr std::array<ProsodyFeature, 5> kProsodyFeatures{
    ProsodyFeature::duration, ProsodyFeature::pitch_mean, ProsodyFeature::pitch_std, ProsodyFeature::energy_mean,
    ProsodyFeature::energy_std};

inline std::string to_string(ProsodyFeature f) {
  static const char* names[] = {"duration", "pitch_mean", "pitch_std", "energy_mean", "energy_std"};
  return names[static_cast<int>(f)];
}

inline ProsodyFeature prosody_feature_from_string(std::string_view s) {
  for (ProsodyFeature f : kProsodyFeatures) {
    if (to_string(f) == s) return f;
  }
  throw Error("eval", errc::kInvalidArgument, "unknown prosody feature '" + std::string(s) + "'");
}

inline double feature_value(const ProsodyStats& s, ProsodyFeature f) {
  switch (f) {
    case ProsodyFeature::duration: return s.duration_s;
    case ProsodyFeature::pitch_mean: return s.pitch_mean_hz;
    case ProsodyFeature::pitch_std: return s.pitch_std_hz;
    case ProsodyFeature::energy_mean: return s.energy_mean_db;
    case ProsodyFeature::energy_std: return s.energy_std_db;
  }
  return 0.0;
}

enum class TrendSign { negative = -1, flat = 0, positive = 1 };

inline std::string to_string(TrendSign s) {
  return s == TrendSign::positive ? "+" : s == TrendSign::negative ? "-" : "0";
}

inline TrendSign trend_sign_from_string(std::string_view s) {
  if (s == "+" || s == "positive") return TrendSign::positive;
  if (s == "-" || s == "negative") return TrendSign::negative;
  if (s == "0" || s == "flat") return TrendSign::flat;
  throw Error("eval", errc::kInvalidArgument, "unknown trend sign '" + std::string(s) + "'");
}

using ExpectedSigns = std::map<std::string, std::map<ProsodyFeature, TrendSign>>;

// Default direction of each prosody feature as intensity rises. Only
// directions that are unambiguous across corpora are listed.
inline ExpectedSigns default_expected_signs() {
  using enum ProsodyFeature;
  return {{"Sad",
           {{duration, TrendSign::positive},
            {pitch_mean, TrendSign::negative},
            {pitch_std, TrendSign::negative},
            {energy_mean, TrendSign::negative},
            {energy_std, TrendSign::negative}}},
          {"Happy", {{pitch_mean, TrendSign::positive}}}};
}

inline ExpectedSigns expected_signs_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("eval", errc::kSchema, "expected-sign table must be an object");
  ExpectedSigns out;
  for (const auto& [emotion, feats] : j.items()) {
    if (!feats.is_object()) throw Error("eval", errc::kSchema, "$." + emotion + ": expected object");
    for (const auto& [f, sign] : feats.items()) {
      if (!sign.is_string()) throw Error("eval", errc::kSchema, "$." + emotion + "." + f + ": expected string");
      out[emotion][prosody_feature_from_string(f)] = trend_sign_from_string(sign.get<std::string>());
    }
  }
  return out;
}

inline nlohmann::json expected_signs_to_json(const ExpectedSigns& e) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [emotion, feats] : e) {
    for (const auto& [f, s] : feats) j[emotion][to_string(f)] = to_string(s);
  }
  return j;
}

// Average ranks (ties share the mean rank).
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = dsp::mean(x), my = dsp::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

struct TrendRun {
  SweepCondition condition = SweepCondition::U;
  std::string emotion;
  double intensity = 0.0;
  ProsodyStats stats;
};

struct TrendCell {
  SweepCondition condition;
  std::string emotion;
  ProsodyFeature feature;
  double rho = 0.0;
  double slope = 0.0;
  TrendSign sign = TrendSign::flat;
  std::size_t samples = 0;
  std::optional<TrendSign> expected;

  std::optional<bool> matches() const {
    if (!expected) return std::nullopt;
    return sign == *expected;
  }
};

struct TrendSkip {
  SweepCondition condition;
  std::string emotion;
  std::string reason;
};

struct TrendReport {
  std::vector<TrendCell> cells;
  std::vector<TrendSkip> skipped;

  std::size_t checked() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const TrendCell& c) {
      return c.expected.has_value();
    }));
  }
  std::size_t matched() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const TrendCell& c) {
      return c.matches().value_or(false);
    }));
  }
};

inline TrendReport trend_analysis(const std::vector<TrendRun>& runs,
                                  const ExpectedSigns& expected = default_expected_signs()) {
  std::map<std::pair<int, std::string>, std::vector<const TrendRun*>> groups;
  for (const auto& r : runs) groups[{static_cast<int>(r.condition), r.emotion}].push_back(&r);

  TrendReport report;
  for (const auto& [key, members] : groups) {
    const auto cond = static_cast<SweepCondition>(key.first);
    std::vector<double> x;
    for (const auto* r : members) x.push_back(r->intensity);
    std::vector<double> distinct = x;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) {
      report.skipped.push_back({cond, key.second,
                                "only " + std::to_string(distinct.size()) + " distinct intensities (need 3)"});
      continue;
    }
    for (ProsodyFeature f : kProsodyFeatures) {
      // Runs sharing an intensity (several utterances) are averaged first.
      std::vector<double> y(distinct.size(), 0.0), n(distinct.size(), 0.0);
      for (const auto* r : members) {
        const auto at = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), r->intensity) - distinct.begin());
        y[at] += feature_value(r->stats, f);
        n[at] += 1.0;
      }
      for (std::size_t i = 0; i < y.size(); ++i) y[i] /= n[i];
      const std::vector<double>& xs = distinct;
      TrendCell c{cond, key.second, f, 0.0, 0.0, TrendSign::flat, 0, std::nullopt};
      c.samples = members.size();
      c.rho = spearman(xs, y);
      c.slope = dsp::ls_slope(xs, y);
      const double scale = std::max(1.0, std::abs(dsp::mean(y)));
      c.sign = std::abs(c.slope) <= 1e-12 * scale ? TrendSign::flat
               : c.slope > 0.0                   ? TrendSign::positive
                                                 : TrendSign::negative;
      if (const auto e = expected.find(key.second); e != expected.end()) {
        if (const auto s = e->second.find(f); s != e->second.end()) c.expected = s->second;
      }
      report.cells.push_back(std::move(c));
    }
  }
  return report;
}

inline nlohmann::json trend_report_to_json(const TrendReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json j = {{"condition", to_string(c.condition)},
                        {"emotion", c.emotion},
                        {"feature", to_string(c.feature)},
                        {"rho", c.rho},
                        {"slope", c.slope},
                        {"sign", to_string(c.sign)},
                        {"samples", c.samples}};
    j["expected"] = c.expected ? nlohmann::json(to_string(*c.expected)) : nlohmann::json(nullptr);
    j["matches"] = c.matches() ? nlohmann::json(*c.matches()) : nlohmann::json(nullptr);
    cells.push_back(std::move(j));
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : r.skipped) {
    skipped.push_back({{"condition", to_string(s.condition)}, {"emotion", s.emotion}, {"reason", s.reason}});
  }
  return {{"cells", cells},
          {"skipped", skipped},
          {"summary", {{"checked", r.checked()}, {"matched", r.matched()}}}};
}

// Condition x emotion grid with one rho column per prosody feature, each
// followed by the observed/expected sign ("+/+", "-/+", "+/" when no
// expectation).
inline std::string trend_heatmap_csv(const TrendReport& r) {
  std::ostringstream os;
  os << "condition,emotion";
  for (ProsodyFeature f : kProsodyFeatures) os << "," << to_string(f) << "_rho," << to_string(f) << "_sign";
  os << "\n";
  std::map<std::pair<int, std::string>, std::map<ProsodyFeature, const TrendCell*>> grid;
  for (const auto& c : r.cells) grid[{static_cast<int>(c.condition), c.emotion}][c.feature] = &c;
  char buf[32];
  for (const auto& [key, feats] : grid) {
    os << to_string(static_cast<SweepCondition>(key.first)) << "," << key.second;
    for (ProsodyFeature f : kProsodyFeatures) {
      const auto it = feats.find(f);
      if (it == feats.end()) {
        os << ",,";
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.4f", it->second->rho);
      os << "," << buf << "," << to_string(it->second->sign) << "/"
         << (it->second->expected ? to_string(*it->second->expected) : "");
    }
    os << "\n";
  }
  return os.str();
}

// runs.csv: condition,emotion,intensity,duration_s,pitch_mean_hz,pitch_std_hz,energy_mean_db,energy_std_db
inline std::vector<TrendRun> parse_trend_runs_csv(std::string_view text) {
  std::vector<TrendRun> runs;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line, line_no);
    if (header) {
      header = false;
      if (f.size() != 8 || f[0] != "condition" || f[1] != "emotion" || f[2] != "intensity") {
        throw Error("eval", errc::kSchema,
                    "runs header must be condition,emotion,intensity,duration_s,pitch_mean_hz,pitch_std_hz,"
                    "energy_mean_db,energy_std_db");
      }
      continue;
    }
    const std::string where = "runs line " + std::to_string(line_no);
    if (f.size() != 8) throw Error("eval", errc::kSchema, where + ": expected 8 fields");
    TrendRun r;
    r.condition = sweep_condition_from_string(f[0]);
    r.emotion = f[1];
    r.intensity = detail::parse_value(f[2], where);
    r.stats.duration_s = detail::parse_value(f[3], where);
    r.stats.pitch_mean_hz = detail::parse_value(f[4], where);
    r.stats.pitch_std_hz = detail::parse_value(f[5], where);
    r.stats.energy_mean_db = detail::parse_value(f[6], where);
    r.stats.energy_std_db = detail::parse_value(f[7], where);
    runs.push_back(std::move(r));
  }
  return runs;
}

}  // namespace emoedit
