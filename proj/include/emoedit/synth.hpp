#pragma once

// Deterministic synthetic "speech" for fixtures and tests: vowels are harmonic
// tones, consonants are shaped noise, and each emotion shifts pitch level,
// pitch movement, loudness and tempo in proportion to an intensity in [0, 1].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "emoedit/alignment.hpp"
#include "emoedit/audio.hpp"
#include "emoedit/hed.hpp"

namespace emoedit::synth {

struct Rng {
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  // [0, 1) with 53 random bits; independent of the standard library's distributions.
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  std::mt19937_64 engine;
};

struct EmotionStyle {
  double pitch_scale = 0.0;   // relative f0 change at full intensity
  double pitch_slope = 0.0;   // relative f0 glide across a vowel
  double pitch_wobble = 0.0;  // relative change of the f0 modulation depth
  double loudness = 0.0;      // relative amplitude change
  double tempo = 0.0;         // relative duration change (positive = slower)
  double brightness = 0.0;    // relative strength of upper harmonics
};

inline EmotionStyle style_for(const std::string& emotion) {
  if (emotion == "Angry") return {0.25, 0.05, 0.5, 1.2, -0.20, 0.8};
  if (emotion == "Happy") return {0.40, 0.10, 2.0, 0.5, -0.10, 0.4};
  if (emotion == "Sad") return {-0.25, -0.05, -0.8, -0.55, 0.45, -0.5};
  if (emotion == "Surprise") return {0.50, 0.35, 1.0, 0.6, 0.05, 0.3};
  return {};
}

struct Lexeme {
  const char* word;
  std::vector<const char*> phones;
};

inline const std::vector<Lexeme>& lexicon() {
  static const std::vector<Lexeme> lex = {
      {"hello", {"HH", "AH", "L", "OW"}}, {"world", {"W", "ER", "L", "D"}},  {"the", {"DH", "AH"}},
      {"day", {"D", "EY"}},               {"is", {"IH", "Z"}},               {"bright", {"B", "R", "AY", "T"}},
      {"we", {"W", "IY"}},                {"go", {"G", "OW"}},               {"home", {"HH", "OW", "M"}},
      {"now", {"N", "AW"}},               {"see", {"S", "IY"}},              {"you", {"Y", "UW"}},
  };
  return lex;
}

inline bool is_vowel(std::string_view p) {
  static const std::array<std::string_view, 11> v{"AH", "OW", "ER", "EY", "IH", "AY", "IY", "AW", "UW", "AA", "AE"};
  return std::find(v.begin(), v.end(), p) != v.end();
}

struct Utterance {
  Waveform wave;
  AlignmentHierarchy alignment;
};

struct UtteranceSpec {
  std::string emotion = "Neutral";
  double intensity = 1.0;
  double base_f0_hz = 120.0;
  std::size_t words = 4;
  std::uint64_t seed = 0;
  // Optional intensity per (word index, phoneme index within word, phoneme
  // label); overrides `intensity`.
  std::function<double(std::size_t, std::size_t, std::string_view)> intensity_at;
};

inline Utterance synthesize(const UtteranceSpec& spec) {
  // Structural draws (words, durations, levels) come from `rng` and sample
  // noise from `noise`, so changing the intensity never changes which words
  // are spoken.
  Rng rng(spec.seed);
  Rng noise(spec.seed ^ 0x5DEECE66Dull);
  const EmotionStyle st = style_for(spec.emotion);
  constexpr int sr = kAnalysisRate;
  const double lead = 0.12, tail = 0.12;

  Utterance u;
  u.wave.sample_rate = sr;
  auto& x = u.wave.samples;
  x.assign(static_cast<std::size_t>(lead * sr), 0.0);
  for (auto& s : x) s = 0.0005 * noise.normal();

  double phase = 0.0;
  std::string text;
  for (std::size_t wi = 0; wi < spec.words; ++wi) {
    const Lexeme& lex = lexicon()[rng.index(lexicon().size())];
    const double word_start = static_cast<double>(x.size()) / sr;
    const double f0_jitter = rng.uniform(0.95, 1.05);
    for (std::size_t pi = 0; pi < lex.phones.size(); ++pi) {
      const char* ph = lex.phones[pi];
      const double a = spec.intensity_at ? spec.intensity_at(wi, pi, ph) : spec.intensity;
      const double f0_word = spec.base_f0_hz * (1.0 + st.pitch_scale * a) * f0_jitter;
      const bool vowel = is_vowel(ph);
      const double base_dur = vowel ? rng.uniform(0.09, 0.14) : rng.uniform(0.05, 0.08);
      const double dur = base_dur * (1.0 + st.tempo * a);
      const auto n = static_cast<std::size_t>(dur * sr);
      const double start_s = static_cast<double>(x.size()) / sr;
      const double amp = (vowel ? 0.18 : 0.05) * (1.0 + st.loudness * a) * rng.uniform(0.9, 1.1);
      const double bright = std::clamp(0.5 + 0.3 * st.brightness * a, 0.05, 0.95);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double prog = static_cast<double>(i) / n;
        const double env = std::sin(std::numbers::pi * prog);
        double s;
        if (vowel) {
          const double f0 = f0_word * (1.0 + st.pitch_slope * a * (prog - 0.5) +
                                       0.03 * (1.0 + st.pitch_wobble * a) * std::sin(2.0 * std::numbers::pi * 5.0 * t));
          phase += 2.0 * std::numbers::pi * f0 / sr;
          s = 0.0;
          double g = 1.0;
          for (int h = 1; h <= 6; ++h, g *= bright) s += g * std::sin(h * phase);
          s *= amp * env / 2.0;
        } else {
          s = amp * env * noise.normal() * 0.5;
        }
        x.push_back(std::clamp(s + 0.0005 * noise.normal(), -1.0, 1.0));
      }
      u.alignment.phonemes.push_back({ph, start_s, static_cast<double>(x.size()) / sr});
      u.alignment.word_of_phoneme.push_back(wi);
    }
    u.alignment.words.push_back({lex.word, word_start, static_cast<double>(x.size()) / sr});
    text += (text.empty() ? "" : " ") + std::string(lex.word);
    // short pause between words
    if (wi + 1 < spec.words) {
      const auto gap = static_cast<std::size_t>(rng.uniform(0.02, 0.05) * sr);
      for (std::size_t i = 0; i < gap; ++i) x.push_back(0.0005 * noise.normal());
    }
  }
  const auto n_tail = static_cast<std::size_t>(tail * sr);
  for (std::size_t i = 0; i < n_tail; ++i) x.push_back(0.0005 * noise.normal());
  u.alignment.utterance = {text, 0.0, u.wave.duration_s()};
  link_hierarchy(u.alignment);
  return u;
}

struct CorpusSpec {
  std::vector<std::string> emotions{"Neutral", "Angry", "Sad"};
  std::vector<std::string> speakers{"spk1", "spk2"};
  std::size_t utterances_per_cell = 3;  // per (speaker, emotion)
  std::size_t words = 3;
  std::uint64_t seed = 7;
};

// Writes <dir>/wav/*.wav, <dir>/align/*.json (every other file as a TextGrid)
// and <dir>/manifest.csv. Returns the manifest path.
inline std::filesystem::path write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec) {
  std::string manifest = "wav,alignment,emotion,speaker\n";
  std::uint64_t n = 0;
  for (std::size_t s = 0; s < spec.speakers.size(); ++s) {
    for (const auto& emotion : spec.emotions) {
      for (std::size_t i = 0; i < spec.utterances_per_cell; ++i, ++n) {
        UtteranceSpec us;
        us.emotion = emotion;
        us.intensity = 1.0;
        us.base_f0_hz = 110.0 + 40.0 * static_cast<double>(s);
        us.words = spec.words;
        us.seed = spec.seed * 1000003ull + n;
        const Utterance u = synthesize(us);
        const std::string stem = spec.speakers[s] + "_" + emotion + "_" + std::to_string(i);
        const bool textgrid = n % 2 == 1;
        const std::string wav_rel = "wav/" + stem + ".wav";
        const std::string ali_rel = "align/" + stem + (textgrid ? ".TextGrid" : ".json");
        write_file(dir / wav_rel, encode_wav_pcm16(u.wave));
        write_file(dir / ali_rel,
                   textgrid ? serialize_textgrid(u.alignment) : serialize_alignment_json(u.alignment));
        manifest += wav_rel + "," + ali_rel + "," + emotion + "," + spec.speakers[s] + "\n";
      }
    }
  }
  const auto path = dir / "manifest.csv";
  write_file(path, manifest);
  return path;
}

inline Waveform sine(double hz, double seconds, double amplitude = 0.5, int sample_rate = kAnalysisRate,
                     double phase = 0.0) {
  Waveform w;
  w.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sample_rate + phase);
  }
  return w;
}

inline Waveform white_noise(double seconds, double amplitude, std::uint64_t seed, int sample_rate = kAnalysisRate) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(static_cast<std::size_t>(std::llround(seconds * sample_rate)));
  for (auto& s : w.samples) s = std::clamp(amplitude * rng.normal(), -1.0, 1.0);
  return w;
}

}  // namespace emoedit::synth
