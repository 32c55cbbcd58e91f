// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "emoedit/corpus.hpp"
#include "emoedit/editor.hpp"
#include "emoedit/eval.hpp"
#include "emoedit/synth.hpp"
#include "oracles.hpp"

using namespace emoedit;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  std::size_t failed = 0;
};

bool report(const std::string& name, const Check& c, const std::string& detail) {
  std::cout << (c.failed == 0 ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
  for (const auto& f : c.failures) std::cout << "    " << f << "\n";
  if (c.failed > 5) std::cout << "    ... " << c.failed - 5 << " more\n";
  return c.failed == 0;
}

bool rel_close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

// ---------------------------------------------------------------------------

bool ranker_oracle() {
  const auto t0 = Clock::now();
  Check c;
  std::size_t problems = 0, separable = 0, grads = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    for (std::size_t d : {1u, 2u}) {
      const bool sep = seed % 3 == 0;
      const auto p = oracle::rank_problem(1000 + seed, d, sep);
      const auto r = train(p.pairs, p.params);
      const auto [w_star, f_star] = oracle::rank_grid_minimum(p.pairs, p.params);
      ++problems;
      c.expect(rel_close(r.diagnostics.objective, f_star, 1e-6),
               "seed " + std::to_string(seed) + " d=" + std::to_string(d) + ": objective " +
                   std::to_string(r.diagnostics.objective) + " vs grid " + std::to_string(f_star));
      if (sep) {
        ++separable;
        c.expect(r.diagnostics.ordering_accuracy == 1.0, "separable seed " + std::to_string(seed) + " accuracy " +
                                                              std::to_string(r.diagnostics.ordering_accuracy));
      }
      const auto z = oracle::standardize(p.pairs.features);
      const RankObjective obj(z, p.pairs.ordered, p.pairs.similar, p.params.c_ordered, p.params.c_similar);
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g;
      for (int k = 0; k < 4; ++k) {
        std::vector<double> w(d);
        for (auto& v : w) v = g(rng);
        const auto grad = obj.gradient(w);
        const auto fd = oracle::central_difference([&](const oracle::Vec& v) { return obj.value(v); }, w, 1e-5);
        for (std::size_t j = 0; j < d; ++j) {
          ++grads;
          c.expect(std::abs(grad[j] - fd[j]) <= 1e-4 * std::max(std::abs(fd[j]), 1e-3),
                   "gradient " + std::to_string(grad[j]) + " vs FD " + std::to_string(fd[j]));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << problems << " problems, " << separable << " separable, " << grads << " gradient components, " << secs << " s";
  return report("ranker oracle equivalence", c, d.str());
}

bool calibration(const ModelBank& fixture_bank, const std::vector<std::vector<std::vector<double>>>& fixture_rows) {
  Check c;
  std::size_t models = 0;
  auto check_model = [&](const RankingModel& m, const std::vector<std::vector<double>>& rows, const std::string& tag) {
    ++models;
    double lo = 2.0, hi = -1.0;
    std::vector<double> s;
    for (const auto& r : rows) {
      const double v = m.score(r);
      s.push_back(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      c.expect(v >= 0.0 && v <= 1.0, tag + ": score outside [0, 1]");
    }
    c.expect(std::abs(lo) <= 1e-9 && std::abs(hi - 1.0) <= 1e-9,
             tag + ": min " + std::to_string(lo) + " max " + std::to_string(hi));
    // far outside the training range still clamps
    std::vector<double> big(m.dim(), 1e6), small(m.dim(), -1e6);
    for (const auto* x : {&big, &small}) {
      const double v = m.score(*x);
      c.expect(v >= 0.0 && v <= 1.0, tag + ": extrapolated score outside [0, 1]");
    }
    for (double k : {0.01, 3.0, 250.0}) {
      RankingModel scaled = m;
      for (double& w : scaled.w) w *= k;
      scaled.recalibrate(rows);
      std::vector<std::size_t> a(rows.size()), b(rows.size());
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = b[i] = i;
      std::vector<double> t;
      for (const auto& r : rows) t.push_back(scaled.score(r));
      std::stable_sort(a.begin(), a.end(), [&](std::size_t x, std::size_t y) { return s[x] < s[y]; });
      std::stable_sort(b.begin(), b.end(), [&](std::size_t x, std::size_t y) { return t[x] < t[y]; });
      c.expect(a == b, tag + ": argsort changed under rescaling by " + std::to_string(k));
    }
  };
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = oracle::rank_problem(2000 + seed, 1 + seed % 2, seed % 2 == 0);
    check_model(train(p.pairs, p.params).model, p.pairs.features, "problem " + std::to_string(seed));
  }
  std::size_t i = 0;
  for (const auto& e : fixture_bank.emotions()) {
    for (Level l : kLevels) {
      check_model(fixture_bank.get(e, l), fixture_rows[i++], e + "/" + to_string(l));
    }
  }
  return report("calibration", c, std::to_string(models) + " trained models");
}

bool feature_extractor() {
  Check c;
  const FeatureExtractor fx;
  // Source material: speech-like utterances, silence, clicks and noise.
  std::vector<Waveform> sources;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const char* emo[] = {"Neutral", "Angry", "Sad", "Happy", "Surprise", "Sad"};
    sources.push_back(synth::synthesize({emo[s], 0.5 + 0.1 * s, 100.0 + 20.0 * s, 3, s, {}}).wave);
  }
  Waveform silence;
  silence.sample_rate = kAnalysisRate;
  silence.samples.assign(kAnalysisRate, 0.0);
  sources.push_back(silence);
  Waveform clicks = silence;
  for (std::size_t i = 0; i < clicks.samples.size(); i += 1601) clicks.samples[i] = i % 2 ? 1.0 : -1.0;
  sources.push_back(clicks);
  sources.push_back(synth::white_noise(1.0, 0.2, 77));
  sources.push_back(synth::sine(440.0, 1.0, 0.9));

  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Seg {
    std::size_t src;
    TimeInterval iv;
  };
  std::vector<Seg> segs;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t src = static_cast<std::size_t>(u(rng) * sources.size());
    const double dur_total = sources[src].duration_s();
    // a third sub-frame (< 25 ms), the rest up to the whole source
    const double len = i % 3 == 0 ? 0.0001 + u(rng) * 0.024 : 0.025 + u(rng) * (dur_total - 0.025);
    const double start = u(rng) * (dur_total - len);
    segs.push_back({src, {start, start + len}});
  }
  std::size_t subframe = 0;
  std::vector<FeatureVector> first(segs.size()), second(segs.size());
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < segs.size(); ++i) {
      (pass ? second : first)[i] = fx.extract(sources[segs[i].src], segs[i].iv);
    }
  }
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].iv.duration() < 0.025) ++subframe;
    c.expect(first[i].size() == 88, "dimension");
    for (double v : first[i]) c.expect(std::isfinite(v), "segment " + std::to_string(i) + " has a non-finite value");
    c.expect(std::memcmp(first[i].data(), second[i].data(), sizeof(double) * 88) == 0,
             "segment " + std::to_string(i) + " differs between runs");
  }

  const FeatureVector sine = fx.extract(synth::sine(220.0, 1.0, 0.5), {0.0, 1.0});
  const double f0 = std::exp(sine[feature_index(Lld::logF0, 0)]);
  c.expect(std::abs(f0 - 220.0) <= 5.0, "220 Hz sine measured " + std::to_string(f0) + " Hz");

  synth::UtteranceSpec long_spec{"Happy", 1.0, 130.0, 40, 5, {}};
  Waveform ten = synth::synthesize(long_spec).wave;
  ten.samples.resize(10 * kAnalysisRate, 0.0);
  const auto t0 = Clock::now();
  const FeatureVector tv = fx.extract(ten, {0.0, 10.0});
  const double secs = seconds_since(t0);
  c.expect(secs < 1.0, "10 s extraction took " + std::to_string(secs) + " s");
  c.expect(std::isfinite(tv[0]), "10 s vector");

  std::ostringstream d;
  d << segs.size() << " segments (" << subframe << " sub-frame), sine " << f0 << " Hz, 10 s in " << secs << " s";
  return report("feature extractor", c, d.str());
}

bool hed_invariants(const ModelBank& bank) {
  Check c;
  std::mt19937_64 rng(9);
  const char* gap_labels[] = {"", "sil", "sp"};
  const char* emotions[] = {"Neutral", "Angry", "Sad", "Happy", "Surprise"};
  const FeatureExtractor fx;
  std::size_t rows = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto u = synth::synthesize({emotions[i % 5], (i % 11) / 10.0, 100.0 + double(i % 7) * 15.0, 1 + i % 5, i, {}});
    // alignment as a TextGrid whose gaps carry assorted silence labels
    std::string tg = serialize_textgrid(u.alignment);
    for (std::size_t pos = 0; (pos = tg.find("text = \"\"", pos)) != std::string::npos;) {
      const std::string rep = std::string("text = \"") + gap_labels[rng() % 3] + "\"";
      tg.replace(pos, 9, rep);
      pos += rep.size();
    }
    std::size_t spoken = 0;
    for (const auto& p : u.alignment.phonemes) spoken += is_silence(default_silence_labels(), p.label) ? 0 : 1;
    const AlignmentHierarchy h = parse_alignment(tg);
    const HedMatrix m = extract_hed(u.wave, h, bank, fx);
    rows += m.size();
    const std::string tag = "utterance " + std::to_string(i);
    c.expect(m.size() == spoken, tag + ": " + std::to_string(m.size()) + " rows for " + std::to_string(spoken) +
                                     " spoken phonemes");
    for (std::size_t r = 0; r < m.size(); ++r) {
      for (std::size_t e = 0; e < m.k(); ++e) {
        c.expect(m.at(r, Level::utterance, e) == m.at(0, Level::utterance, e), tag + ": utterance block varies");
        for (std::size_t q = 0; q < m.size(); ++q) {
          if (m.word_of_phoneme[q] == m.word_of_phoneme[r]) {
            c.expect(m.at(q, Level::word, e) == m.at(r, Level::word, e), tag + ": word block varies within a word");
          }
        }
        const double v = m.at(r, Level::phoneme, e);
        c.expect(v >= 0.0 && v <= 1.0, tag + ": value outside [0, 1]");
      }
    }
    c.expect(parse_hed_csv(serialize_hed_csv(m)) == m, tag + ": CSV round trip");
    c.expect(parse_hed_json(serialize_hed_json(m)) == m, tag + ": JSON round trip");
  }
  return report("HED invariants", c, "200 utterances, " + std::to_string(rows) + " rows");
}

bool editor() {
  Check c;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.5, 2.5);
  for (int i = 0; i < 500; ++i) {
    const HedMatrix a = oracle::random_hed(rng, 1 + i % 4, 1 + i % 6, 4);
    const HedMatrix b = oracle::perturb_hed(a, rng);
    const std::string tag = "pair " + std::to_string(i);
    c.expect(apply(a, diff(a, b)) == b, tag + ": apply(a, diff(a, b)) != b");
    c.expect(apply(a, parse_script(serialize_script(diff(a, b)))) == b, tag + ": serialized diff");

    // arbitrary set/scale/add ops, including out-of-range values
    EditScript s;
    for (int k = 0; k < 4; ++k) {
      const Level l = kLevels[rng() % 3];
      const Action act = static_cast<Action>(rng() % 3);
      s.ops.push_back({l, Selector::all(), std::nullopt, act, u(rng)});
    }
    const HedMatrix e = apply(a, s);
    for (const auto& row : e.rows) {
      for (double v : row) c.expect(v >= 0.0 && v <= 1.0, tag + ": post-edit value " + std::to_string(v));
    }
    try {
      e.validate();
    } catch (const Error& err) {
      c.expect(false, tag + ": " + err.what());
    }

    const std::vector<double> values{0.0, 0.5, 1.0};
    const auto cond = static_cast<SweepCondition>(i % 4);
    const std::size_t w = rng() % a.word_count();
    const std::size_t p = rng() % a.size();
    const Selector sel = cond == SweepCondition::P ? Selector::index(p) : Selector::index(w);
    const std::size_t emo = rng() % a.k();
    const auto out = sweep(a, cond, sel, a.emotions[emo], values);
    for (std::size_t v = 0; v < values.size(); ++v) {
      for (std::size_t r = 0; r < a.size(); ++r) {
        const bool in_w = a.word_of_phoneme[r] == w;
        if (cond == SweepCondition::U) c.expect(out[v].at(r, Level::utterance, emo) == values[v], tag + ": U sweep");
        if (cond == SweepCondition::W && in_w) c.expect(out[v].at(r, Level::word, emo) == values[v], tag + ": W sweep");
        if (cond == SweepCondition::P && r == p) {
          c.expect(out[v].at(r, Level::phoneme, emo) == values[v], tag + ": P sweep");
        }
        if (cond == SweepCondition::WP && in_w) {
          c.expect(out[v].at(r, Level::word, emo) == values[v] && out[v].at(r, Level::phoneme, emo) == values[v],
                   tag + ": WP sweep");
        }
      }
    }
  }
  return report("editor", c, "500 matrix pairs");
}

bool metrics() {
  const auto t0 = Clock::now();
  Check c;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  auto frames = [&](std::size_t n, std::size_t d) {
    FrameSequence s(n, std::vector<double>(d));
    for (auto& f : s) {
      for (auto& v : f) v = g(rng);
    }
    return s;
  };
  const auto a = frames(60, 13);
  c.expect(mcd(a, a) == 0.0, "MCD on identical frames");
  auto b = a;
  for (auto& f : b) {
    for (auto& v : f) v += 0.1;
  }
  const double m = mcd(a, b);
  c.expect(std::abs(m - 2.2146) <= 1e-3, "MCD for 0.1 offset = " + std::to_string(m));
  const auto u = synth::synthesize({"Sad", 1.0, 120.0, 3, 4, {}});
  c.expect(compare_waveforms(u.wave, u.wave).mcd_db == 0.0, "MCD on identical audio");

  c.expect(frame_disturbance(dtw_align(a, a)) == 0.0, "FD on the diagonal");
  std::size_t instances = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::size_t k = 1; k <= 8; ++k) {
      for (int rep = 0; rep < 2; ++rep) {
        const auto x = frames(n, 4), y = frames(k, 4);
        const auto brute = oracle::dtw_enumerate(x, y);
        const WarpPath p = dtw_align(x, y);
        ++instances;
        c.expect(std::abs(path_cost(x, y, p) - brute.cost) <= 1e-9 &&
                     std::abs(frame_disturbance(p) - brute.fd) <= 1e-9,
                 std::to_string(n) + "x" + std::to_string(k) + ": FD " + std::to_string(frame_disturbance(p)) +
                     " vs " + std::to_string(brute.fd));
      }
    }
  }

  const Waveform base = synth::white_noise(1.0, 0.1, 3);
  Waveform twice = base;
  for (auto& s : twice.samples) s *= 2.0;
  const double e = compare_waveforms(base, twice).energy_rmse_db;
  c.expect(std::abs(e - 6.02) <= 0.1, "energy distortion for 2x amplitude = " + std::to_string(e));
  const auto u2 = u.wave;
  Waveform loud = u2;
  for (auto& s : loud.samples) s *= 2.0;
  const double e2 = compare_waveforms(u2, loud).energy_rmse_db;
  c.expect(std::abs(e2 - 6.02) <= 0.1, "energy distortion for 2x amplitude speech = " + std::to_string(e2));

  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << "MCD " << m << " dB, " << instances << " DTW instances, energy " << e << " dB, " << secs << " s";
  return report("metrics oracles", c, d.str());
}

bool trends(const fs::path& work) {
  Check c;
  const std::vector<std::string> emotions{"Angry", "Happy", "Sad", "Surprise"};
  const auto runs = oracle::trend_corpus(emotions, {0.0, 0.25, 0.5, 0.75, 1.0}, 3, 500);
  const auto truth = oracle::trend_corpus_truth(emotions);
  const TrendReport r = trend_analysis(runs, truth);
  std::size_t checked = 0;
  for (const auto& cell : r.cells) {
    if (!cell.expected) continue;
    ++checked;
    const std::string tag = to_string(cell.condition) + "/" + cell.emotion + "/" + to_string(cell.feature);
    c.expect(cell.matches() == true, tag + ": sign " + to_string(cell.sign) + " expected " + to_string(*cell.expected));
    c.expect(std::abs(cell.rho) >= 0.8, tag + ": |rho| = " + std::to_string(std::abs(cell.rho)));
  }
  c.expect(checked == 4 * emotions.size() * 3, "checked " + std::to_string(checked) + " cells");
  c.expect(r.skipped.empty(), "skipped groups");
  const std::string grid = trend_heatmap_csv(r);
  fs::create_directories(work);
  write_file(work / "trend_grid.csv", grid);
  for (const char* cond : {"U", "W", "P", "WP"}) {
    for (const auto& e : emotions) {
      c.expect(grid.find("\n" + std::string(cond) + "," + e + ",") != std::string::npos,
               std::string("grid row ") + cond + "," + e + " missing");
    }
  }
  return report("trend methodology", c,
                std::to_string(checked) + " signed cells, grid written to " + (work / "trend_grid.csv").string());
}

// ---------------------------------------------------------------------------

int sh(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>>\"${EMOEDIT_ACCEPT_LOG:-/dev/null}\"").c_str()); }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// train -> extract -> edit -> export into `out`; returns false on a failed step.
bool pipeline(const std::string& cli, const fs::path& fixtures, const fs::path& out, std::string& failed_step) {
  fs::remove_all(out);
  fs::create_directories(out / "hed");
  const fs::path manifest = fixtures / "manifest.csv";
  const std::string models = q(out / "models");
  struct Step {
    const char* name;
    std::string cmd;
  };
  const fs::path script = out / "script.json";
  write_file(script,
             R"({"ops":[{"level":"utterance","selector":"all","emotion":"all","action":"scale","value":0.5},)"
             R"({"level":"word","selector":{"index":0},"emotion":"all","action":"set","value":1},)"
             R"({"level":"phoneme","selector":{"range":[0,1]},"emotion":"all","action":"add","value":0.25}]})");
  const std::vector<Step> steps{
      {"train", q(cli) + " train --manifest " + q(manifest) + " --out-dir " + models + " --seed 11"},
      {"extract", q(cli) + " extract --models " + models + " --manifest " + q(manifest) + " --out-dir " + q(out / "hed")},
  };
  for (const auto& s : steps) {
    if (sh(s.cmd) != 0) {
      failed_step = s.name;
      return false;
    }
  }
  for (const auto& e : read_manifest(manifest)) {
    const std::string stem = e.wav.stem().string();
    const fs::path hed = out / "hed" / (stem + ".csv");
    const fs::path edited = out / "hed" / (stem + ".edited.csv");
    if (sh(q(cli) + " edit --in " + q(hed) + " --script " + q(script) + " --out " + q(edited)) != 0) {
      failed_step = "edit " + stem;
      return false;
    }
    if (sh(q(cli) + " export --in " + q(edited) + " --out " + q(out / "hed" / (stem + ".edited.json"))) != 0) {
      failed_step = "export " + stem;
      return false;
    }
  }
  return true;
}

bool end_to_end(const std::string& cli, const fs::path& fixtures, const fs::path& work) {
  Check c;
  const auto t0 = Clock::now();
  std::string step;
  const bool first = pipeline(cli, fixtures, work / "run1", step);
  const double secs = seconds_since(t0);
  c.expect(first, "run 1 failed at " + step);
  const bool second = first && pipeline(cli, fixtures, work / "run2", step);
  c.expect(!first || second, "run 2 failed at " + step);
  c.expect(secs < 60.0, "pipeline took " + std::to_string(secs) + " s");
  std::size_t files = 0;
  if (first && second) {
    for (const auto& e : fs::recursive_directory_iterator(work / "run1")) {
      if (!e.is_regular_file()) continue;
      const fs::path rel = fs::relative(e.path(), work / "run1");
      const fs::path other = work / "run2" / rel;
      ++files;
      c.expect(fs::exists(other) && read_file(e.path()) == read_file(other), rel.string() + " differs between runs");
    }
    c.expect(files > 0, "no outputs");
  }
  std::ostringstream d;
  d << files << " output files compared, single run " << secs << " s";
  return report("end-to-end CLI", c, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli, fixtures, work = "acceptance_work";
  app.add_option("--cli", cli, "emoedit executable")->required();
  app.add_option("--fixtures", fixtures, "fixture corpus directory (with manifest.csv)")->required();
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(work);
  // Fixture bank for the calibration check, trained in-process.
  TrainConfig cfg;
  cfg.seed = 11;
  const auto entries = read_manifest(fs::path(fixtures) / "manifest.csv");
  const TrainOutput trained = train_bank(entries, cfg);
  std::vector<std::vector<std::vector<double>>> rows;
  {
    const FeatureExtractor fx;
    std::vector<UtteranceFeatures> feats;
    for (const auto& e : entries) {
      feats.push_back(extract_utterance_features(decode_wav(read_file(e.wav)), parse_alignment(read_file(e.alignment)), fx));
    }
    for (const auto& emo : trained.bank.emotions()) {
      for (Level l : kLevels) {
        std::vector<std::vector<double>> r;
        for (std::size_t i = 0; i < entries.size(); ++i) {
          if (entries[i].emotion != emo && entries[i].emotion != cfg.neutral) continue;
          std::vector<FeatureVector> level_rows;
          if (l == Level::utterance) level_rows = {feats[i].utterance};
          if (l == Level::word) level_rows = feats[i].words;
          if (l == Level::phoneme) level_rows = feats[i].phonemes;
          for (const auto& f : level_rows) r.emplace_back(f.begin(), f.end());
        }
        rows.push_back(std::move(r));
      }
    }
  }

  bool ok = true;
  ok &= ranker_oracle();
  ok &= calibration(trained.bank, rows);
  ok &= feature_extractor();
  ok &= hed_invariants(trained.bank);
  ok &= editor();
  ok &= metrics();
  ok &= trends(fs::path(work));
  ok &= end_to_end(cli, fixtures, fs::path(work) / "e2e");
  std::cout << (ok ? "all criteria passed" : "some criteria failed") << "\n";
  return ok ? 0 : 1;
}
