#pragma once

// Relative-attribute ranking functions. A model scores f(x) = w^T x~ on
// standardised features and maps the score into [0, 1] with min-max bounds
// taken from its training samples.
//
// Training minimises
//   L(w) = 1/2 |w|^2 + C_o sum_O max(0, 1 - w^T(x~_hi - x~_lo))^2
//                    + C_s sum_S (w^T(x~_i - x~_j))^2
// with a generalised Newton method (the objective is C1 and piecewise
// quadratic) and Armijo backtracking.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emoedit/error.hpp"

namespace emoedit {

enum class Level { utterance, word, phoneme };

inline constexpr std::array<Level, 3> kLevels{Level::utterance, Level::word, Level::phoneme};

inline std::string to_string(Level l) {
  switch (l) {
    case Level::utterance: return "utterance";
    case Level::word: return "word";
    case Level::phoneme: return "phoneme";
  }
  return "?";
}

inline Level level_from_string(std::string_view s) {
  if (s == "utterance") return Level::utterance;
  if (s == "word") return Level::word;
  if (s == "phoneme") return Level::phoneme;
  throw Error("ranker", errc::kInvalidArgument, "unknown level '" + std::string(s) + "'");
}

using IndexPair = std::pair<std::size_t, std::size_t>;

struct PairSet {
  std::vector<IndexPair> ordered;  // (hi, lo): f(x_hi) > f(x_lo)
  std::vector<IndexPair> similar;  // f(x_i) ~ f(x_j)
  std::vector<std::vector<double>> features;

  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }

  void validate() const {
    const std::size_t n = features.size();
    for (const auto& row : features) {
      if (row.size() != dim()) throw Error("ranker", errc::kValidation, "ragged feature matrix");
      for (double v : row) {
        if (!std::isfinite(v)) throw Error("ranker", errc::kValidation, "non-finite feature value");
      }
    }
    auto check = [&](const std::vector<IndexPair>& ps, const char* what) {
      for (const auto& [a, b] : ps) {
        if (a >= n || b >= n) throw Error("ranker", errc::kValidation, std::string(what) + " pair index out of range");
        if (a == b) throw Error("ranker", errc::kValidation, std::string(what) + " pair (i, i)");
      }
    };
    check(ordered, "ordered");
    check(similar, "similar");
    auto key = [](IndexPair p) { return IndexPair{std::min(p.first, p.second), std::max(p.first, p.second)}; };
    std::vector<IndexPair> o;
    for (const auto& p : ordered) o.push_back(key(p));
    std::sort(o.begin(), o.end());
    for (const auto& p : similar) {
      if (std::binary_search(o.begin(), o.end(), key(p))) {
        throw Error("ranker", errc::kValidation, "pair appears as both ordered and similar");
      }
    }
  }
};

struct LabeledSample {
  std::string emotion;
  std::vector<double> features;
};

struct PairCaps {
  std::optional<std::size_t> max_ordered;
  std::optional<std::size_t> max_similar;
};

namespace detail {

// Unbiased index in [0, n) from a 64-bit engine. std::uniform_int_distribution
// is implementation-defined, this is not.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do v = rng(); while (v >= limit);
  return static_cast<std::size_t>(v % range);
}

// Sorted uniform subset of [0, n) of size min(n, cap) (Floyd's algorithm), so
// huge implicit pair lists never have to be materialized.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::optional<std::size_t> cap, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  if (!cap || n <= *cap) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  std::set<std::size_t> chosen;
  for (std::size_t j = n - *cap; j < n; ++j) {
    const std::size_t t = uniform_index(rng, j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

// Maps sorted indices into the lexicographic list of pairs (a, b), a < b < n,
// offset by `base`.
inline void decode_triangle(const std::vector<std::size_t>& sorted, std::size_t first, std::size_t last,
                            std::size_t n, std::size_t base, std::vector<IndexPair>& out) {
  std::size_t a = 0, row_start = 0;
  for (std::size_t k = first; k < last; ++k) {
    const std::size_t idx = sorted[k];
    while (idx >= row_start + (n - 1 - a)) {
      row_start += n - 1 - a;
      ++a;
    }
    out.emplace_back(base + a, base + a + 1 + (idx - row_start));
  }
}

}  // namespace detail

// Target-class samples rank above neutral ones; pairs within either class are
// "similar". Feature rows are the target samples followed by the neutral ones.
inline PairSet build_pairs(std::span<const LabeledSample> samples, const std::string& target,
                           const PairCaps& caps, std::uint64_t seed, const std::string& neutral = "Neutral") {
  std::vector<std::size_t> hi, lo;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].emotion == target) hi.push_back(i);
    else if (samples[i].emotion == neutral) lo.push_back(i);
  }
  if (hi.empty()) throw Error("ranker", errc::kInsufficientData, "no samples of class '" + target + "'");
  if (lo.empty()) throw Error("ranker", errc::kInsufficientData, "no samples of class '" + neutral + "'");

  PairSet ps;
  for (std::size_t i : hi) ps.features.push_back(samples[i].features);
  for (std::size_t i : lo) ps.features.push_back(samples[i].features);
  const std::size_t nh = hi.size(), nl = lo.size();

  std::mt19937_64 rng(seed);
  for (std::size_t k : detail::sample_indices(nh * nl, caps.max_ordered, rng)) {
    ps.ordered.emplace_back(k / nl, nh + k % nl);
  }
  const std::size_t th = nh * (nh - 1) / 2, tl = nl * (nl - 1) / 2;
  const auto sim = detail::sample_indices(th + tl, caps.max_similar, rng);
  const std::size_t split = static_cast<std::size_t>(std::lower_bound(sim.begin(), sim.end(), th) - sim.begin());
  detail::decode_triangle(sim, 0, split, nh, 0, ps.similar);
  std::vector<std::size_t> shifted(sim.begin() + static_cast<std::ptrdiff_t>(split), sim.end());
  for (auto& v : shifted) v -= th;
  detail::decode_triangle(shifted, 0, shifted.size(), nl, nh, ps.similar);
  return ps;
}

// ---------------------------------------------------------------------------

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::uint8_t> frozen;  // zero-variance dims

  static Standardizer fit(const std::vector<std::vector<double>>& rows) {
    Standardizer s;
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    s.mean.assign(d, 0.0);
    s.std.assign(d, 1.0);
    s.frozen.assign(d, 0);
    if (rows.empty()) return s;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    }
    for (double& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < d; ++j) var[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / n);
      if (sd <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) {
        s.frozen[j] = 1;
      } else {
        s.std[j] = sd;
      }
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = frozen[j] ? 0.0 : (x[j] - mean[j]) / std[j];
    return out;
  }
};

// The training objective on already-standardised rows. Exposed so tests can
// check the gradient against finite differences.
class RankObjective {
 public:
  RankObjective(std::vector<std::vector<double>> rows, const std::vector<IndexPair>& ordered,
                const std::vector<IndexPair>& similar, double c_ordered, double c_similar)
      : c_o_(c_ordered), c_s_(c_similar), dim_(rows.empty() ? 0 : rows.front().size()) {
    auto diff = [&](const IndexPair& p) {
      std::vector<double> d(dim_);
      for (std::size_t j = 0; j < dim_; ++j) d[j] = rows[p.first][j] - rows[p.second][j];
      return d;
    };
    for (const auto& p : ordered) d_ordered_.push_back(diff(p));
    for (const auto& p : similar) d_similar_.push_back(diff(p));
  }

  std::size_t dim() const { return dim_; }

  double value(std::span<const double> w) const {
    double v = 0.5 * dot(w, w);
    for (const auto& d : d_ordered_) {
      const double m = std::max(0.0, 1.0 - dot(w, d));
      v += c_o_ * m * m;
    }
    for (const auto& d : d_similar_) {
      const double s = dot(w, d);
      v += c_s_ * s * s;
    }
    return v;
  }

  std::vector<double> gradient(std::span<const double> w) const {
    std::vector<double> g(w.begin(), w.end());
    for (const auto& d : d_ordered_) {
      const double m = 1.0 - dot(w, d);
      if (m > 0.0) axpy(-2.0 * c_o_ * m, d, g);
    }
    for (const auto& d : d_similar_) axpy(2.0 * c_s_ * dot(w, d), d, g);
    return g;
  }

  // Generalised Hessian at w (active hinge terms only), row-major dim x dim.
  std::vector<double> hessian(std::span<const double> w) const {
    std::vector<double> h(dim_ * dim_, 0.0);
    for (std::size_t j = 0; j < dim_; ++j) h[j * dim_ + j] = 1.0;
    auto add = [&](double c, const std::vector<double>& d) {
      for (std::size_t a = 0; a < dim_; ++a) {
        if (d[a] == 0.0) continue;
        const double ca = c * d[a];
        for (std::size_t b = a; b < dim_; ++b) h[a * dim_ + b] += ca * d[b];
      }
    };
    for (const auto& d : d_ordered_) {
      if (1.0 - dot(w, d) > 0.0) add(2.0 * c_o_, d);
    }
    for (const auto& d : d_similar_) add(2.0 * c_s_, d);
    for (std::size_t a = 0; a < dim_; ++a) {
      for (std::size_t b = 0; b < a; ++b) h[a * dim_ + b] = h[b * dim_ + a];
    }
    return h;
  }

  static double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }

 private:
  static void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
  }

  double c_o_, c_s_;
  std::size_t dim_;
  std::vector<std::vector<double>> d_ordered_, d_similar_;
};

namespace detail {

// Solves A x = b for symmetric positive definite A (row-major, n x n).
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (diag <= 0.0) throw Error("ranker", errc::kInvalidArgument, "Hessian not positive definite");
    const double l = std::sqrt(diag);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * n + k] * b[k];
    b[i] /= a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k * n + i] * b[k];
    b[i] /= a[i * n + i];
  }
  return b;
}

inline std::string fingerprint(const PairSet& ps) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& row : ps.features) mix(row.data(), row.size() * sizeof(double));
  for (const auto& [a, b] : ps.ordered) {
    const std::uint64_t v[2] = {a, b};
    mix(v, sizeof v);
  }
  for (const auto& [a, b] : ps.similar) {
    const std::uint64_t v[2] = {a, b};
    mix(v, sizeof v);
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace detail

struct TrainParams {
  double c_ordered = 0.1;
  double c_similar = 0.1;
  double tol = 1e-6;
  int max_iter = 500;
};

struct TrainDiagnostics {
  int iterations = 0;
  double objective = 0.0;
  double grad_inf_norm = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;  // L after each accepted step, starting at L(0)
  double ordering_accuracy = 0.0;       // fraction of ordered pairs with f(hi) > f(lo)
};

// Calibrated scores collapse to this value when the training scores span less than 1e-9.
inline constexpr double kDegenerateSpan = 1e-9;

struct RankingModel {
  std::string emotion;
  Level level = Level::utterance;
  std::vector<double> w;
  double b = 0.0;  // always 0: cancels in pair differences, absorbed by calibration
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  double score_min = 0.0;
  double score_max = 0.0;
  std::string trained_on;

  std::size_t dim() const { return w.size(); }

  double raw_score(std::span<const double> x) const {
    if (x.size() != w.size()) {
      throw Error("ranker", errc::kShape,
                  "feature dim " + std::to_string(x.size()) + " != model dim " + std::to_string(w.size()));
    }
    double s = b;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] != 0.0) s += w[j] * (x[j] - feature_mean[j]) / feature_std[j];
    }
    return s;
  }

  double calibrate(double raw) const {
    const double span = score_max - score_min;
    if (!(span >= kDegenerateSpan)) return 0.5;
    return std::clamp((raw - score_min) / span, 0.0, 1.0);
  }

  // Emotion intensity in [0, 1].
  double score(std::span<const double> x) const { return calibrate(raw_score(x)); }

  // Resets the calibration bounds to the raw-score range over `rows`.
  void recalibrate(const std::vector<std::vector<double>>& rows) {
    score_min = std::numeric_limits<double>::infinity();
    score_max = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
      const double s = raw_score(r);
      score_min = std::min(score_min, s);
      score_max = std::max(score_max, s);
    }
    if (rows.empty()) score_min = score_max = 0.0;
  }

  bool operator==(const RankingModel&) const = default;
};

struct TrainResult {
  RankingModel model;
  TrainDiagnostics diagnostics;
};

inline TrainResult train(const PairSet& pairs, const TrainParams& hp = {}) {
  pairs.validate();
  if (!(hp.c_ordered > 0.0)) throw Error("ranker", errc::kInvalidArgument, "C_ordered must be > 0");
  if (!(hp.c_similar >= 0.0)) throw Error("ranker", errc::kInvalidArgument, "C_similar must be >= 0");
  if (pairs.features.empty()) throw Error("ranker", errc::kInsufficientData, "no training samples");

  const Standardizer st = Standardizer::fit(pairs.features);
  std::vector<std::vector<double>> rows;
  rows.reserve(pairs.features.size());
  for (const auto& r : pairs.features) rows.push_back(st.apply(r));

  // Optimise only over dims with variance; frozen dims keep w = 0.
  std::vector<std::size_t> free_dims;
  for (std::size_t j = 0; j < st.frozen.size(); ++j) {
    if (!st.frozen[j]) free_dims.push_back(j);
  }
  std::vector<std::vector<double>> reduced(rows.size(), std::vector<double>(free_dims.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < free_dims.size(); ++k) reduced[i][k] = rows[i][free_dims[k]];
  }
  const RankObjective obj(std::move(reduced), pairs.ordered, pairs.similar, hp.c_ordered, hp.c_similar);
  const std::size_t d = obj.dim();

  TrainDiagnostics diag;
  std::vector<double> w(d, 0.0);
  double f = obj.value(w);
  diag.objective_trace.push_back(f);
  for (;;) {
    const std::vector<double> g = obj.gradient(w);
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    diag.grad_inf_norm = gmax;
    if (gmax <= hp.tol) {
      diag.converged = true;
      break;
    }
    if (diag.iterations >= hp.max_iter) break;

    std::vector<double> step = detail::cholesky_solve(obj.hessian(w), g, d);
    for (double& s : step) s = -s;
    const double slope = RankObjective::dot(g, step);

    double t = 1.0;
    bool accepted = false;
    std::vector<double> trial(d);
    while (t > 1e-20) {
      for (std::size_t j = 0; j < d; ++j) trial[j] = w[j] + t * step[j];
      const double ft = obj.value(trial);
      if (ft < f && ft <= f + 1e-4 * t * slope) {
        w = trial;
        f = ft;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no representable decrease left
    ++diag.iterations;
    diag.objective_trace.push_back(f);
  }
  diag.objective = f;

  RankingModel m;
  m.w.assign(st.mean.size(), 0.0);
  for (std::size_t k = 0; k < free_dims.size(); ++k) m.w[free_dims[k]] = w[k];
  m.feature_mean = st.mean;
  m.feature_std = st.std;
  m.trained_on = detail::fingerprint(pairs);
  m.recalibrate(pairs.features);

  std::size_t correct = 0;
  std::vector<double> raw(pairs.features.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = m.raw_score(pairs.features[i]);
  for (const auto& [hi, lo] : pairs.ordered) correct += raw[hi] > raw[lo] ? 1 : 0;
  diag.ordering_accuracy = pairs.ordered.empty() ? 1.0 : static_cast<double>(correct) / pairs.ordered.size();
  return {std::move(m), std::move(diag)};
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const RankingModel& m) {
  return {{"version", kModelFormatVersion},
          {"emotion", m.emotion},
          {"level", to_string(m.level)},
          {"w", m.w},
          {"feature_mean", m.feature_mean},
          {"feature_std", m.feature_std},
          {"score_min", m.score_min},
          {"score_max", m.score_max},
          {"trained_on", m.trained_on}};
}

inline std::string save_model(const RankingModel& m) { return model_to_json(m).dump(2) + "\n"; }

inline RankingModel model_from_json(const nlohmann::json& j) {
  auto corrupt = [](const std::string& what) { return Error("ranker", errc::kCorruptFile, what); };
  if (!j.is_object()) throw corrupt("model is not a JSON object");
  if (!j.contains("version") || !j["version"].is_number_integer()) throw corrupt("missing version tag");
  if (j["version"].get<int>() != kModelFormatVersion) {
    throw Error("ranker", errc::kVersion,
                "model format version " + j["version"].dump() + " unsupported (supported: " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  try {
    RankingModel m;
    m.emotion = j.at("emotion").get<std::string>();
    m.level = level_from_string(j.at("level").get<std::string>());
    m.w = j.at("w").get<std::vector<double>>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std = j.at("feature_std").get<std::vector<double>>();
    m.score_min = j.at("score_min").get<double>();
    m.score_max = j.at("score_max").get<double>();
    m.trained_on = j.at("trained_on").get<std::string>();
    if (m.feature_mean.size() != m.w.size() || m.feature_std.size() != m.w.size()) {
      throw corrupt("vector lengths disagree");
    }
    for (double s : m.feature_std) {
      if (!(s > 0.0)) throw corrupt("non-positive feature_std");
    }
    if (m.score_min > m.score_max) throw corrupt("score_min > score_max");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(e.what());
  }
}

inline RankingModel load_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("ranker", errc::kCorruptFile, e.what(), e.byte);
  }
  return model_from_json(j);
}

}  // namespace emoedit
