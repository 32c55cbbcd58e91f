#include <gtest/gtest.h>

#include <chrono>
#include <cstring>
#include <set>

#include "emoedit/features.hpp"
#include "emoedit/synth.hpp"
#include "oracles.hpp"

using namespace emoedit;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

LldSet constant_llds(std::size_t frames, double value) {
  LldSet l;
  l.hop_s = 0.01;
  l.duration_s = frames * 0.01;
  for (auto& t : l.tracks) t.assign(frames, value);
  l.voiced.assign(frames, 1);
  return l;
}

}  // namespace

TEST(Layout, EightyEightNamedDims) {
  EXPECT_EQ(kFeatureDim, 88u);
  const auto& names = feature_names();
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), 88u);
  EXPECT_EQ(names[feature_index(Lld::logF0, 0)], "logF0_mean");
  EXPECT_EQ(names[feature_index(static_cast<Lld>(19), 3)], "mfcc_13_p80");
  EXPECT_EQ(names[feature_index(Temporal::voiced_ratio)], "voiced_ratio");
  EXPECT_EQ(names[87], "delta_energy_mean_abs_db");
}

TEST(Percentile, InclusiveLinear) {
  const std::vector<double> v{5, 3, 1, 4, 2};
  EXPECT_DOUBLE_EQ(dsp::percentile(v, 0.2), 1.8);
  EXPECT_DOUBLE_EQ(dsp::percentile(v, 0.8), 4.2);
  EXPECT_DOUBLE_EQ(dsp::percentile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(dsp::percentile(v, 1.0), 5.0);
}

TEST(Dsp, FftMatchesNaiveDft) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<std::complex<double>> x(64);
  for (auto& v : x) v = {n(rng), n(rng)};
  auto y = x;
  dsp::fft(y);
  for (std::size_t k = 0; k < 64; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < 64; ++t) acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / 64.0);
    EXPECT_NEAR(std::abs(acc - y[k]), 0.0, 1e-9);
  }
}

TEST(Dsp, DctRowsOrthonormal) {
  const dsp::Dct d(26, 0, 25);
  for (std::size_t a = 0; a < 26; ++a) {
    std::vector<double> e(26, 0.0);
    e[a] = 1.0;
    const auto col = d.apply(e);
    double norm = 0.0;
    for (double v : col) norm += v * v;
    EXPECT_NEAR(norm, 1.0, 1e-12);
  }
}

TEST(Functionals, ConstantTrack) {
  const FeatureVector fv = functionals(constant_llds(50, 3.0));
  for (std::size_t l = 0; l < kNumLlds; ++l) {
    EXPECT_DOUBLE_EQ(fv[l * 4 + 0], 3.0);
    EXPECT_DOUBLE_EQ(fv[l * 4 + 1], 0.0);
    EXPECT_DOUBLE_EQ(fv[l * 4 + 2], 3.0);
    EXPECT_DOUBLE_EQ(fv[l * 4 + 3], 3.0);
  }
  EXPECT_EQ(fv[feature_index(Temporal::energy_slope_db_per_s)], 0.0);
  EXPECT_EQ(fv[feature_index(Temporal::voiced_ratio)], 1.0);
}

TEST(Functionals, EnergyRampSlope) {
  LldSet l = constant_llds(101, 0.0);
  l.duration_s = 1.0;
  for (std::size_t t = 0; t <= 100; ++t) l[Lld::energy_db][t] = 10.0 * t / 100.0;
  const FeatureVector fv = functionals(l);
  EXPECT_NEAR(fv[feature_index(Temporal::energy_slope_db_per_s)], 10.0, 0.5);
}

TEST(Functionals, EnergyRampFromAudio) {
  // noise whose level rises linearly from 0 to +10 dB over one second
  Waveform w = synth::white_noise(1.0, 0.05, 8);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] *= std::pow(10.0, (10.0 * i / w.samples.size()) / 20.0);
  }
  const FeatureVector fv = FeatureExtractor().extract(w, {0.0, 1.0});
  EXPECT_NEAR(fv[feature_index(Temporal::energy_slope_db_per_s)], 10.0, 0.5);
}

TEST(Functionals, EnergyShiftCovariance) {
  LldSet l = constant_llds(40, 0.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-60.0, 0.0);
  for (auto& v : l[Lld::energy_db]) v = u(rng);
  const FeatureVector a = functionals(l);
  for (auto& v : l[Lld::energy_db]) v += 7.25;
  const FeatureVector b = functionals(l);
  const std::size_t e = static_cast<std::size_t>(Lld::energy_db);
  EXPECT_NEAR(b[e * 4 + 0] - a[e * 4 + 0], 7.25, 1e-12);
  EXPECT_NEAR(b[e * 4 + 1], a[e * 4 + 1], 1e-12);
  EXPECT_NEAR(b[e * 4 + 2] - a[e * 4 + 2], 7.25, 1e-12);
  EXPECT_NEAR(b[e * 4 + 3] - a[e * 4 + 3], 7.25, 1e-12);
}

TEST(Functionals, ZeroFramesRejected) {
  LldSet l;
  EXPECT_THROW(functionals(l), Error);
}

TEST(Llds, SinePitch) {
  const FeatureExtractor fx;
  const LldSet l = fx.extract_llds(synth::sine(220.0, 0.5), {0.0, 0.5});
  std::vector<double> f0;
  for (std::size_t t = 0; t < l.frames(); ++t) {
    EXPECT_TRUE(l.voiced[t]) << "frame " << t;
    if (l.voiced[t]) f0.push_back(std::exp(l[Lld::logF0][t]));
  }
  const double m = median(f0);
  EXPECT_GE(m, 215.0);
  EXPECT_LE(m, 225.0);
}

TEST(Llds, PitchAcrossRange) {
  const FeatureExtractor fx;
  for (double hz : {80.0, 120.0, 180.0, 260.0, 350.0}) {
    const FeatureVector fv = fx.extract(synth::sine(hz, 0.4, 0.3), {0.0, 0.4});
    EXPECT_NEAR(std::exp(fv[feature_index(Lld::logF0, 0)]), hz, hz * 0.02) << hz;
  }
}

TEST(Llds, SilenceFloors) {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(8000, 0.0);
  const LldSet l = FeatureExtractor().extract_llds(w, {0.0, 0.5});
  for (std::size_t t = 0; t < l.frames(); ++t) {
    EXPECT_DOUBLE_EQ(l[Lld::energy_db][t], -100.0);
    EXPECT_FALSE(l.voiced[t]);
    EXPECT_EQ(l[Lld::zcr][t], 0.0);
  }
}

TEST(Llds, WhiteNoiseMostlyUnvoiced) {
  const LldSet l = FeatureExtractor().extract_llds(synth::white_noise(1.0, 0.3, 42), {0.0, 1.0});
  std::size_t below = 0;
  for (double p : l[Lld::voicing_prob]) below += p < 0.45;
  EXPECT_GE(below, static_cast<std::size_t>(0.9 * l.frames()));
}

TEST(Llds, RequiresAnalysisRate) {
  EXPECT_THROW(FeatureExtractor().extract_llds(synth::sine(220, 0.2, 0.5, 8000), {0.0, 0.1}), Error);
}

TEST(Features, UnvoicedSegmentZeroesPitchDims) {
  const FeatureVector fv = FeatureExtractor().extract(synth::white_noise(0.3, 0.5, 1), {0.0, 0.3});
  // white noise can produce a stray voiced frame; silence cannot
  Waveform quiet;
  quiet.sample_rate = 16000;
  quiet.samples.assign(4800, 0.0);
  const FeatureVector z = FeatureExtractor().extract(quiet, {0.0, 0.3});
  for (std::size_t f = 0; f < 4; ++f) EXPECT_EQ(z[feature_index(Lld::logF0, f)], 0.0);
  EXPECT_EQ(z[feature_index(Temporal::f0_slope_per_s)], 0.0);
  EXPECT_EQ(z[feature_index(Temporal::delta_logF0_mean_abs)], 0.0);
  EXPECT_EQ(z[feature_index(Temporal::voiced_ratio)], 0.0);
  for (double v : fv) EXPECT_TRUE(std::isfinite(v));
}

TEST(Features, DeterministicAndFinite) {
  const auto u = synth::synthesize({"Angry", 1.0, 130.0, 4, 17, {}});
  const FeatureExtractor fx;
  for (const auto& p : u.alignment.phonemes) {
    const FeatureVector a = fx.extract(u.wave, p.interval());
    const FeatureVector b = fx.extract(u.wave, p.interval());
    EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * a.size()));
    for (double v : a) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Features, SubFrameAndClickSegments) {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000, 0.0);
  w.samples[8000] = 1.0;
  w.samples[8001] = -1.0;
  const FeatureExtractor fx;
  for (const TimeInterval seg : {TimeInterval{0.5, 0.5001}, TimeInterval{0.49, 0.51}, TimeInterval{0.0, 1.0},
                                 TimeInterval{0.4999, 0.5003}}) {
    const FeatureVector v = fx.extract(w, seg);
    for (double x : v) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Features, LongFramesGrowTheFft) {
  FeatureConfig cfg;
  cfg.frames.frame_ms = 50.0;
  const FeatureVector v = FeatureExtractor(cfg).extract(synth::sine(220.0, 0.5), {0.0, 0.5});
  EXPECT_NEAR(std::exp(v[feature_index(Lld::logF0, 0)]), 220.0, 5.0);
}
