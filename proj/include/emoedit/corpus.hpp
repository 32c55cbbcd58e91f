#pragma once

// Manifest-driven training of a full model bank (K emotions x 3 levels).

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "emoedit/alignment.hpp"
#include "emoedit/audio.hpp"
#include "emoedit/error.hpp"
#include "emoedit/features.hpp"
#include "emoedit/hed.hpp"
#include "emoedit/ranker.hpp"

namespace emoedit {

struct ManifestEntry {
  std::filesystem::path wav;
  std::filesystem::path alignment;
  std::string emotion;
  std::string speaker;
};

// CSV with header `wav,alignment,emotion,speaker`; relative paths resolve
// against `base_dir`.
inline std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0, pos = 0;
  bool header = true;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto f = detail::split_csv_line(line, line_no);
    if (header) {
      if (f != std::vector<std::string>{"wav", "alignment", "emotion", "speaker"}) {
        throw Error("cli", errc::kSchema, "manifest header must be 'wav,alignment,emotion,speaker'");
      }
      header = false;
      continue;
    }
    if (f.size() != 4) {
      throw Error("cli", errc::kSchema,
                  "manifest line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields, expected 4");
    }
    if (f[2].empty()) throw Error("cli", errc::kSchema, "manifest line " + std::to_string(line_no) + " has no emotion");
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    out.push_back({resolve(f[0]), resolve(f[1]), f[2], f[3]});
    if (end == text.size()) break;
  }
  if (header) throw Error("cli", errc::kSchema, "manifest is empty");
  return out;
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
// into per-index slots; the lowest-index exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::exception_ptr> errors(n);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct UtteranceFeatures {
  FeatureVector utterance{};
  std::vector<FeatureVector> words;  // words that contain spoken phonemes
  std::vector<FeatureVector> phonemes;
};

inline UtteranceFeatures extract_utterance_features(const Waveform& wav, const AlignmentHierarchy& h,
                                                    const FeatureExtractor& fx) {
  const Waveform w = to_analysis_rate(wav);
  UtteranceFeatures uf;
  uf.utterance = fx.extract(w, h.utterance.interval());
  for (std::size_t i = 0; i < h.words.size(); ++i) {
    const auto [first, last] = h.phoneme_range(i);
    if (first != last) uf.words.push_back(fx.extract(w, h.words[i].interval()));
  }
  for (const auto& p : h.phonemes) uf.phonemes.push_back(fx.extract(w, p.interval()));
  return uf;
}

struct TrainConfig {
  std::optional<std::vector<std::string>> emotions;  // default: non-neutral labels in the manifest
  std::string neutral = "Neutral";
  TrainParams params;
  PairCaps caps{5000, 5000};
  std::uint64_t seed = 0;
  std::optional<std::size_t> per_speaker;  // utterances per (speaker, emotion)
  std::size_t jobs = 1;
  FeatureConfig features;
};

// Deterministic per-(speaker, emotion) subset, kept in manifest order.
inline std::vector<ManifestEntry> select_entries(const std::vector<ManifestEntry>& entries,
                                                 std::optional<std::size_t> per_speaker, std::uint64_t seed) {
  if (!per_speaker) return entries;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) groups[{entries[i].speaker, entries[i].emotion}].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [key, idx] : groups) {
    for (std::size_t k : detail::sample_indices(idx.size(), per_speaker, rng)) keep.push_back(idx[k]);
  }
  std::sort(keep.begin(), keep.end());
  std::vector<ManifestEntry> out;
  for (std::size_t i : keep) out.push_back(entries[i]);
  return out;
}

struct ModelReport {
  std::string emotion;
  Level level = Level::utterance;
  std::size_t target_samples = 0;
  std::size_t neutral_samples = 0;
  std::size_t ordered_pairs = 0;
  std::size_t similar_pairs = 0;
  TrainDiagnostics diagnostics;
};

struct TrainOutput {
  ModelBank bank;
  std::vector<ModelReport> reports;
  std::size_t utterances = 0;
};

inline std::vector<std::string> default_emotions(const std::vector<ManifestEntry>& entries, const std::string& neutral) {
  std::vector<std::string> e;
  for (const auto& m : entries) {
    if (m.emotion != neutral && std::find(e.begin(), e.end(), m.emotion) == e.end()) e.push_back(m.emotion);
  }
  std::sort(e.begin(), e.end());
  return e;
}

inline TrainOutput train_bank(const std::vector<ManifestEntry>& all_entries, const TrainConfig& cfg) {
  const std::vector<ManifestEntry> entries = select_entries(all_entries, cfg.per_speaker, cfg.seed);
  const std::vector<std::string> emotions = cfg.emotions ? *cfg.emotions : default_emotions(entries, cfg.neutral);
  if (emotions.empty()) {
    throw Error("cli", errc::kInsufficientData, "manifest has no emotion other than '" + cfg.neutral + "'");
  }
  const bool has_neutral = std::any_of(entries.begin(), entries.end(),
                                       [&](const ManifestEntry& m) { return m.emotion == cfg.neutral; });
  if (!has_neutral) throw Error("cli", errc::kInsufficientData, "no samples of class '" + cfg.neutral + "'");

  const FeatureExtractor fx(cfg.features);
  std::vector<UtteranceFeatures> feats(entries.size());
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const Waveform w = decode_wav(read_file(entries[i].wav));
    const AlignmentHierarchy h = parse_alignment(read_file(entries[i].alignment));
    feats[i] = extract_utterance_features(w, h, fx);
  });

  std::array<std::vector<LabeledSample>, 3> samples;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string& e = entries[i].emotion;
    samples[0].push_back({e, {feats[i].utterance.begin(), feats[i].utterance.end()}});
    for (const auto& f : feats[i].words) samples[1].push_back({e, {f.begin(), f.end()}});
    for (const auto& f : feats[i].phonemes) samples[2].push_back({e, {f.begin(), f.end()}});
  }

  const std::size_t n_models = emotions.size() * kLevels.size();
  std::vector<TrainResult> results(n_models);
  std::vector<ModelReport> reports(n_models);
  parallel_for(n_models, cfg.jobs, [&](std::size_t m) {
    const std::string& emotion = emotions[m / kLevels.size()];
    const Level level = kLevels[m % kLevels.size()];
    const auto& s = samples[static_cast<std::size_t>(level)];
    const std::uint64_t seed = cfg.seed * 0x9E3779B97F4A7C15ull + m + 1;
    const PairSet ps = build_pairs(s, emotion, cfg.caps, seed, cfg.neutral);
    results[m] = train(ps, cfg.params);
    results[m].model.emotion = emotion;
    results[m].model.level = level;
    ModelReport& r = reports[m];
    r.emotion = emotion;
    r.level = level;
    r.target_samples = static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [&](const LabeledSample& x) { return x.emotion == emotion; }));
    r.neutral_samples = ps.features.size() - r.target_samples;
    r.ordered_pairs = ps.ordered.size();
    r.similar_pairs = ps.similar.size();
    r.diagnostics = results[m].diagnostics;
  });

  TrainOutput out;
  out.bank = ModelBank(emotions);
  for (auto& r : results) out.bank.add(std::move(r.model));
  out.reports = std::move(reports);
  out.utterances = entries.size();
  return out;
}

inline nlohmann::json training_report_json(const TrainOutput& out) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : out.reports) {
    models.push_back({{"emotion", r.emotion},
                      {"level", to_string(r.level)},
                      {"target_samples", r.target_samples},
                      {"neutral_samples", r.neutral_samples},
                      {"ordered_pairs", r.ordered_pairs},
                      {"similar_pairs", r.similar_pairs},
                      {"objective", r.diagnostics.objective},
                      {"grad_inf_norm", r.diagnostics.grad_inf_norm},
                      {"iterations", r.diagnostics.iterations},
                      {"converged", r.diagnostics.converged},
                      {"ordering_accuracy", r.diagnostics.ordering_accuracy}});
  }
  return {{"utterances", out.utterances}, {"emotions", out.bank.emotions()}, {"models", models}};
}

}  // namespace emoedit
