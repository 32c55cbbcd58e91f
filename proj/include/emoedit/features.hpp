#pragma once

// Per-segment acoustic functionals: 20 frame-level descriptors summarised by
// four statistics each, plus 8 temporal features, for 88 dimensions.
//
// Layout (index = lld * 4 + functional for the first 80):
//   lld        logF0, energy_db, zcr, spectral_centroid_hz, spectral_flux,
//              spectral_rolloff85_hz, voicing_prob, mfcc_1 .. mfcc_13
//   functional mean, stddev, p20, p80
//   80..87     voiced_ratio, mean_voiced_run_s, mean_unvoiced_run_s,
//              energy_peaks_per_s, f0_slope_per_s, energy_slope_db_per_s,
//              delta_logF0_mean_abs, delta_energy_mean_abs_db

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "emoedit/audio.hpp"
#include "emoedit/dsp.hpp"
#include "emoedit/error.hpp"

namespace emoedit {

inline constexpr std::size_t kNumLlds = 20;
inline constexpr std::size_t kNumFunctionals = 4;
inline constexpr std::size_t kNumTemporal = 8;
inline constexpr std::size_t kFeatureDim = kNumLlds * kNumFunctionals + kNumTemporal;
static_assert(kFeatureDim == 88);

enum class Lld : std::size_t {
  logF0 = 0,
  energy_db,
  zcr,
  spectral_centroid_hz,
  spectral_flux,
  spectral_rolloff85_hz,
  voicing_prob,
  mfcc_1,  // mfcc_1 .. mfcc_13 are consecutive
};

inline constexpr std::size_t kNumMfcc = 13;

inline const std::array<std::string, kNumLlds>& lld_names() {
  static const std::array<std::string, kNumLlds> names = [] {
    std::array<std::string, kNumLlds> n{"logF0", "energy_db", "zcr", "spectral_centroid_hz",
                                        "spectral_flux", "spectral_rolloff85_hz", "voicing_prob"};
    for (std::size_t i = 0; i < kNumMfcc; ++i) n[7 + i] = "mfcc_" + std::to_string(i + 1);
    return n;
  }();
  return names;
}

enum class Temporal : std::size_t {
  voiced_ratio = 0,
  mean_voiced_run_s,
  mean_unvoiced_run_s,
  energy_peaks_per_s,
  f0_slope_per_s,
  energy_slope_db_per_s,
  delta_logF0_mean_abs,
  delta_energy_mean_abs_db,
};

using FeatureVector = std::array<double, kFeatureDim>;

inline constexpr std::size_t feature_index(Lld lld, std::size_t functional) {
  return static_cast<std::size_t>(lld) * kNumFunctionals + functional;
}
inline constexpr std::size_t feature_index(Temporal t) {
  return kNumLlds * kNumFunctionals + static_cast<std::size_t>(t);
}

inline const std::array<std::string, kFeatureDim>& feature_names() {
  static const std::array<std::string, kFeatureDim> names = [] {
    std::array<std::string, kFeatureDim> n;
    const char* fn[] = {"mean", "stddev", "p20", "p80"};
    for (std::size_t l = 0; l < kNumLlds; ++l) {
      for (std::size_t f = 0; f < kNumFunctionals; ++f) n[l * kNumFunctionals + f] = lld_names()[l] + "_" + fn[f];
    }
    const char* temporal[] = {"voiced_ratio",           "mean_voiced_run_s",     "mean_unvoiced_run_s",
                              "energy_peaks_per_s",     "f0_slope_per_s",        "energy_slope_db_per_s",
                              "delta_logF0_mean_abs",   "delta_energy_mean_abs_db"};
    for (std::size_t t = 0; t < kNumTemporal; ++t) n[kNumLlds * kNumFunctionals + t] = temporal[t];
    return n;
  }();
  return names;
}

struct FeatureConfig {
  FrameParams frames;
  double f0_min_hz = 60.0;
  double f0_max_hz = 400.0;
  double voicing_threshold = 0.45;
  std::size_t n_fft = 512;
  std::size_t n_mel = 26;
  double mel_low_hz = 0.0;
  double mel_high_hz = 8000.0;
  double energy_epsilon = 1e-10;
};

// Frame-level descriptor tracks of one segment. logF0 holds 0 on unvoiced frames.
struct LldSet {
  std::array<std::vector<double>, kNumLlds> tracks;
  std::vector<std::uint8_t> voiced;
  double hop_s = 0.01;
  double duration_s = 0.0;

  std::size_t frames() const { return voiced.size(); }
  const std::vector<double>& operator[](Lld l) const { return tracks[static_cast<std::size_t>(l)]; }
  std::vector<double>& operator[](Lld l) { return tracks[static_cast<std::size_t>(l)]; }

  // Per-frame 13-dim cepstra (c1..c13).
  std::vector<std::vector<double>> mfcc_frames() const {
    std::vector<std::vector<double>> out(frames(), std::vector<double>(kNumMfcc));
    for (std::size_t t = 0; t < frames(); ++t) {
      for (std::size_t c = 0; c < kNumMfcc; ++c) out[t][c] = tracks[7 + c][t];
    }
    return out;
  }
};

struct PitchEstimate {
  double f0_hz = 0.0;
  double voicing_prob = 0.0;  // peak normalised autocorrelation in the lag range
  bool voiced = false;
};

// Autocorrelation pitch of one frame. Uses the normalised cross-correlation
// between the frame and its lagged copy so partial overlaps are comparable.
inline PitchEstimate estimate_pitch(std::span<const double> x_in, double sample_rate, const FeatureConfig& cfg) {
  PitchEstimate out;
  const std::size_t n = x_in.size();
  const auto min_lag = static_cast<std::size_t>(std::floor(sample_rate / cfg.f0_max_hz));
  auto max_lag = static_cast<std::size_t>(std::ceil(sample_rate / cfg.f0_min_hz));
  if (n < 2 * min_lag + 2) return out;
  max_lag = std::min(max_lag, n - min_lag);
  if (max_lag <= min_lag + 1) return out;

  const double m = dsp::mean(x_in);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = x_in[i] - m;
  std::vector<double> sq(n + 1, 0.0);  // prefix sums of squares
  for (std::size_t i = 0; i < n; ++i) sq[i + 1] = sq[i] + x[i] * x[i];
  if (sq[n] <= 1e-20) return out;

  std::vector<double> r(max_lag + 2, 0.0);
  for (std::size_t lag = min_lag - 1; lag <= max_lag + 1 && lag < n; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += x[i] * x[i + lag];
    const double e0 = sq[n - lag];
    const double e1 = sq[n] - sq[lag];
    r[lag] = (e0 > 0.0 && e1 > 0.0) ? acc / std::sqrt(e0 * e1) : 0.0;
  }

  double best = -1.0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) best = std::max(best, r[lag]);
  out.voicing_prob = std::clamp(best, 0.0, 1.0);
  if (out.voicing_prob < cfg.voicing_threshold) return out;

  // earliest local peak close to the global maximum avoids sub-octave picks
  std::size_t pick = 0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
      pick = lag;
      break;
    }
  }
  if (pick == 0) return out;
  double refined = static_cast<double>(pick);
  const double a = r[pick - 1], b = r[pick], c = r[pick + 1];
  const double denom = a - 2.0 * b + c;
  if (denom < 0.0) refined += 0.5 * (a - c) / denom;
  out.f0_hz = sample_rate / refined;
  out.voiced = true;
  return out;
}

class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureConfig cfg = {})
      : cfg_(fit_fft(cfg)),
        mel_(cfg_.n_mel, cfg_.n_fft, kAnalysisRate, cfg_.mel_low_hz, cfg_.mel_high_hz),
        dct_(cfg_.n_mel, 1, kNumMfcc) {}

  const FeatureConfig& config() const { return cfg_; }

  // Frame-level descriptors of `seg`. The waveform must be at the analysis rate.
  LldSet extract_llds(const Waveform& w, const TimeInterval& seg) const {
    if (w.sample_rate != kAnalysisRate) {
      throw Error("features", errc::kInvalidArgument,
                  "waveform must be resampled to " + std::to_string(kAnalysisRate) + " Hz first");
    }
    const FramedSegment fs = frame(w, seg, cfg_.frames);
    const std::size_t n_frames = fs.size();
    const std::size_t frame_len = fs.grid.frame_length;
    const std::vector<double> win = window_coefficients(fs.grid.window, frame_len);
    const double sr = static_cast<double>(w.sample_rate);

    LldSet out;
    out.hop_s = fs.grid.hop_s();
    out.duration_s = seg.duration();
    for (auto& t : out.tracks) t.assign(n_frames, 0.0);
    out.voiced.assign(n_frames, 0);

    std::vector<double> prev_norm;
    std::vector<double> windowed(frame_len);
    for (std::size_t t = 0; t < n_frames; ++t) {
      const auto valid = fs.valid_samples(t);

      double energy = 0.0;
      for (double s : valid) energy += s * s;
      energy /= static_cast<double>(std::max<std::size_t>(1, valid.size()));
      out[Lld::energy_db][t] = 10.0 * std::log10(energy + cfg_.energy_epsilon);

      std::size_t crossings = 0;
      for (std::size_t i = 1; i < valid.size(); ++i) crossings += (valid[i - 1] * valid[i] < 0.0);
      out[Lld::zcr][t] = valid.size() > 1 ? static_cast<double>(crossings) / (valid.size() - 1) : 0.0;

      const PitchEstimate p = estimate_pitch(valid, sr, cfg_);
      out[Lld::voicing_prob][t] = p.voicing_prob;
      out.voiced[t] = p.voiced;
      out[Lld::logF0][t] = p.voiced ? std::log(p.f0_hz) : 0.0;

      const auto raw = fs.frame(t);
      for (std::size_t i = 0; i < frame_len; ++i) windowed[i] = raw[i] * win[i];
      const std::vector<double> mag = dsp::magnitude_spectrum(windowed, cfg_.n_fft);
      std::vector<double> power(mag.size());
      double mag_sum = 0.0, power_sum = 0.0, weighted = 0.0;
      for (std::size_t k = 0; k < mag.size(); ++k) {
        power[k] = mag[k] * mag[k];
        mag_sum += mag[k];
        power_sum += power[k];
        weighted += bin_hz(k) * mag[k];
      }
      out[Lld::spectral_centroid_hz][t] = mag_sum > 0.0 ? weighted / mag_sum : 0.0;

      double rolloff = 0.0;
      if (power_sum > 0.0) {
        double cum = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k) {
          cum += power[k];
          if (cum >= 0.85 * power_sum) {
            rolloff = bin_hz(k);
            break;
          }
        }
      }
      out[Lld::spectral_rolloff85_hz][t] = rolloff;

      std::vector<double> norm(mag.size(), 0.0);
      if (mag_sum > 0.0) {
        for (std::size_t k = 0; k < mag.size(); ++k) norm[k] = mag[k] / mag_sum;
      }
      double flux = 0.0;
      if (!prev_norm.empty()) {
        for (std::size_t k = 0; k < norm.size(); ++k) flux += (norm[k] - prev_norm[k]) * (norm[k] - prev_norm[k]);
      }
      out[Lld::spectral_flux][t] = std::sqrt(flux);
      prev_norm = std::move(norm);

      std::vector<double> bands = mel_.apply(power);
      for (double& b : bands) b = std::log(std::max(b, cfg_.energy_epsilon));
      const std::vector<double> cep = dct_.apply(bands);
      for (std::size_t c = 0; c < kNumMfcc; ++c) out.tracks[7 + c][t] = cep[c];
    }
    return out;
  }

  FeatureVector extract(const Waveform& w, const TimeInterval& seg) const;

 private:
  // Grows the FFT to the next power of two when a long frame would not fit.
  static FeatureConfig fit_fft(FeatureConfig cfg) {
    const auto frame_len = static_cast<std::size_t>(std::llround(cfg.frames.frame_ms * kAnalysisRate / 1000.0));
    while (cfg.n_fft < frame_len) cfg.n_fft *= 2;
    return cfg;
  }

  double bin_hz(std::size_t k) const {
    return static_cast<double>(k) * kAnalysisRate / static_cast<double>(cfg_.n_fft);
  }

  FeatureConfig cfg_;
  dsp::MelFilterbank mel_;
  dsp::Dct dct_;
};

// Summarises descriptor tracks into the 88-dim vector.
inline FeatureVector functionals(const LldSet& llds) {
  const std::size_t n = llds.frames();
  if (n == 0) throw Error("features", errc::kInvalidSegment, "segment has no frames");
  for (const auto& t : llds.tracks) {
    if (t.size() != n) throw Error("features", errc::kInvalidArgument, "track length mismatch");
  }

  FeatureVector fv{};
  auto put = [&](Lld l, std::span<const double> v) {
    fv[feature_index(l, 0)] = dsp::mean(v);
    fv[feature_index(l, 1)] = dsp::stddev(v);
    fv[feature_index(l, 2)] = dsp::percentile(v, 0.2);
    fv[feature_index(l, 3)] = dsp::percentile(v, 0.8);
  };

  std::vector<double> voiced_f0, voiced_times;
  std::vector<double> times(n);
  for (std::size_t t = 0; t < n; ++t) {
    times[t] = static_cast<double>(t) * llds.hop_s;
    if (llds.voiced[t]) {
      voiced_f0.push_back(llds[Lld::logF0][t]);
      voiced_times.push_back(times[t]);
    }
  }
  put(Lld::logF0, voiced_f0);
  for (std::size_t l = 1; l < kNumLlds; ++l) put(static_cast<Lld>(l), llds.tracks[l]);

  // voiced / unvoiced runs
  std::size_t voiced_runs = 0, unvoiced_runs = 0, voiced_frames = 0;
  for (std::size_t t = 0; t < n; ++t) {
    voiced_frames += llds.voiced[t] ? 1 : 0;
    if (t == 0 || llds.voiced[t] != llds.voiced[t - 1]) (llds.voiced[t] ? voiced_runs : unvoiced_runs)++;
  }
  const std::size_t unvoiced_frames = n - voiced_frames;
  fv[feature_index(Temporal::voiced_ratio)] = static_cast<double>(voiced_frames) / n;
  fv[feature_index(Temporal::mean_voiced_run_s)] =
      voiced_runs ? static_cast<double>(voiced_frames) / voiced_runs * llds.hop_s : 0.0;
  fv[feature_index(Temporal::mean_unvoiced_run_s)] =
      unvoiced_runs ? static_cast<double>(unvoiced_frames) / unvoiced_runs * llds.hop_s : 0.0;

  const auto& energy = llds[Lld::energy_db];
  const double energy_mean = dsp::mean(energy);
  std::size_t peaks = 0;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (energy[t] > energy[t - 1] && energy[t] >= energy[t + 1] && energy[t] > energy_mean) ++peaks;
  }
  fv[feature_index(Temporal::energy_peaks_per_s)] =
      llds.duration_s > 0.0 ? static_cast<double>(peaks) / llds.duration_s : 0.0;

  fv[feature_index(Temporal::f0_slope_per_s)] = dsp::ls_slope(voiced_times, voiced_f0);
  fv[feature_index(Temporal::energy_slope_db_per_s)] = dsp::ls_slope(times, energy);

  double df0 = 0.0;
  std::size_t df0_n = 0;
  double de = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    de += std::abs(energy[t] - energy[t - 1]);
    if (llds.voiced[t] && llds.voiced[t - 1]) {
      df0 += std::abs(llds[Lld::logF0][t] - llds[Lld::logF0][t - 1]);
      ++df0_n;
    }
  }
  fv[feature_index(Temporal::delta_logF0_mean_abs)] = df0_n ? df0 / df0_n : 0.0;
  fv[feature_index(Temporal::delta_energy_mean_abs_db)] = n > 1 ? de / (n - 1) : 0.0;
  return fv;
}

inline FeatureVector FeatureExtractor::extract(const Waveform& w, const TimeInterval& seg) const {
  return functionals(extract_llds(w, seg));
}

}  // namespace emoedit
