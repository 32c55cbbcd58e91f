#pragma once

// The `emoedit` command line. run() is callable in-process for tests.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emoedit/corpus.hpp"
#include "emoedit/editor.hpp"
#include "emoedit/eval.hpp"
#include "emoedit/hed.hpp"
#include "emoedit/service.hpp"
#include "emoedit/synth.hpp"

namespace emoedit::cli {

namespace fs = std::filesystem;

inline constexpr const char* kModelsEnv = "EMOEDIT_MODELS";

// Writes to stdout for "-".
inline void emit(const std::string& path, std::string_view data, std::ostream& out) {
  if (path == "-") {
    out << data;
    out.flush();
  } else {
    write_file(path, data);
  }
}

enum class HedFormat { csv, json };

inline HedFormat hed_format(const std::string& explicit_format, const std::string& path) {
  if (explicit_format == "csv") return HedFormat::csv;
  if (explicit_format == "json") return HedFormat::json;
  if (!explicit_format.empty()) throw Error("cli", errc::kInvalidArgument, "format must be csv or json");
  return fs::path(path).extension() == ".json" ? HedFormat::json : HedFormat::csv;
}

inline std::string serialize_hed(const HedMatrix& m, HedFormat f) {
  return f == HedFormat::json ? serialize_hed_json(m) : serialize_hed_csv(m);
}

struct Globals {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t jobs = 1;
  std::string models;

  FeatureConfig features() const {
    if (!(frame_ms > 0.0) || !(hop_ms > 0.0)) throw Error("cli", errc::kInvalidArgument, "frame/hop must be > 0");
    FeatureConfig c;
    c.frames.frame_ms = frame_ms;
    c.frames.hop_ms = hop_ms;
    return c;
  }

  // --models, then $EMOEDIT_MODELS, then ./models.
  fs::path model_dir() const {
    if (!models.empty()) return models;
    if (const char* env = std::getenv(kModelsEnv); env && *env) return env;
    return "models";
  }
};

inline Selector make_selector(const std::optional<std::size_t>& index, const std::vector<std::size_t>& range) {
  if (index && !range.empty()) throw Error("cli", errc::kInvalidArgument, "--index and --range are exclusive");
  if (index) return Selector::index(*index);
  if (!range.empty()) {
    if (range.size() != 2) throw Error("cli", errc::kInvalidArgument, "--range takes two indices a,b");
    return Selector::range(range[0], range[1]);
  }
  return Selector::all();
}

inline std::string value_tag(double v) {
  std::string s = detail::format_double(v);
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

// Returns the process exit code. Errors go to `err` as {"error": {...}}.
inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical emotion-intensity extraction and editing", "emoedit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--frame-ms", g.frame_ms, "analysis frame length in ms")->capture_default_str();
  app.add_option("--hop-ms", g.hop_ms, "analysis hop in ms")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads for per-utterance work")->check(CLI::PositiveNumber);

  std::function<void()> action;

  // train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a full model bank from a manifest");
  struct {
    std::string manifest, out_dir, report;
    std::vector<std::string> emotions;
    std::string neutral = "Neutral";
    TrainParams p;
    std::uint64_t seed = 0;
    std::optional<std::size_t> per_speaker, max_ordered = 5000, max_similar = 5000;
  } tr;
  train_cmd->add_option("--manifest", tr.manifest, "CSV: wav,alignment,emotion,speaker")->required();
  train_cmd->add_option("--out-dir,--models", tr.out_dir, "bank directory to write")->required();
  train_cmd->add_option("--report", tr.report, "training report path (default <out-dir>/report.json, - for stdout)");
  train_cmd->add_option("--emotions", tr.emotions, "emotions to train (default: every non-neutral label)")->delimiter(',');
  train_cmd->add_option("--neutral", tr.neutral)->capture_default_str();
  train_cmd->add_option("--c-ordered", tr.p.c_ordered)->capture_default_str();
  train_cmd->add_option("--c-similar", tr.p.c_similar)->capture_default_str();
  train_cmd->add_option("--tol", tr.p.tol)->capture_default_str();
  train_cmd->add_option("--max-iter", tr.p.max_iter)->capture_default_str();
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--per-speaker", tr.per_speaker, "utterances drawn per (speaker, emotion)");
  train_cmd->add_option("--max-ordered", tr.max_ordered);
  train_cmd->add_option("--max-similar", tr.max_similar);
  train_cmd->callback([&] {
    action = [&] {
      TrainConfig cfg;
      if (!tr.emotions.empty()) cfg.emotions = tr.emotions;
      cfg.neutral = tr.neutral;
      cfg.params = tr.p;
      cfg.seed = tr.seed;
      cfg.per_speaker = tr.per_speaker;
      cfg.caps = {tr.max_ordered, tr.max_similar};
      cfg.jobs = g.jobs;
      cfg.features = g.features();
      const TrainOutput result = train_bank(read_manifest(tr.manifest), cfg);
      save_bank(result.bank, tr.out_dir);
      const std::string report = training_report_json(result).dump(2) + "\n";
      emit(tr.report.empty() ? (fs::path(tr.out_dir) / "report.json").string() : tr.report, report, out);
    };
  });

  // ranker train ----------------------------------------------------------
  auto* ranker = app.add_subcommand("ranker", "single ranking function");
  ranker->require_subcommand(1);
  auto* ranker_train = ranker->add_subcommand("train", "train one (emotion, level) model");
  struct {
    std::string manifest, emotion, level = "utterance", out = "-", neutral = "Neutral";
    TrainParams p;
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_ordered = 5000, max_similar = 5000;
  } rt;
  ranker_train->add_option("--manifest", rt.manifest)->required();
  ranker_train->add_option("--emotion", rt.emotion)->required();
  ranker_train->add_option("--level", rt.level)->check(CLI::IsMember({"utterance", "word", "phoneme"}))->capture_default_str();
  ranker_train->add_option("--neutral", rt.neutral)->capture_default_str();
  ranker_train->add_option("--c-ordered", rt.p.c_ordered)->capture_default_str();
  ranker_train->add_option("--c-similar", rt.p.c_similar)->capture_default_str();
  ranker_train->add_option("--tol", rt.p.tol)->capture_default_str();
  ranker_train->add_option("--max-iter", rt.p.max_iter)->capture_default_str();
  ranker_train->add_option("--seed", rt.seed)->capture_default_str();
  ranker_train->add_option("--max-ordered", rt.max_ordered);
  ranker_train->add_option("--max-similar", rt.max_similar);
  ranker_train->add_option("--out", rt.out, "model file, - for stdout")->capture_default_str();
  ranker_train->callback([&] {
    action = [&] {
      const auto entries = read_manifest(rt.manifest);
      const Level level = level_from_string(rt.level);
      const FeatureExtractor fx(g.features());
      std::vector<UtteranceFeatures> feats(entries.size());
      parallel_for(entries.size(), g.jobs, [&](std::size_t i) {
        feats[i] = extract_utterance_features(decode_wav(read_file(entries[i].wav)),
                                              parse_alignment(read_file(entries[i].alignment)), fx);
      });
      std::vector<LabeledSample> samples;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        auto add = [&](const FeatureVector& f) { samples.push_back({entries[i].emotion, {f.begin(), f.end()}}); };
        if (level == Level::utterance) add(feats[i].utterance);
        if (level == Level::word) std::for_each(feats[i].words.begin(), feats[i].words.end(), add);
        if (level == Level::phoneme) std::for_each(feats[i].phonemes.begin(), feats[i].phonemes.end(), add);
      }
      const PairSet ps = build_pairs(samples, rt.emotion, {rt.max_ordered, rt.max_similar}, rt.seed, rt.neutral);
      TrainResult r = train(ps, rt.p);
      r.model.emotion = rt.emotion;
      r.model.level = level;
      emit(rt.out, save_model(r.model), out);
    };
  });

  // extract -------------------------------------------------------------
  struct {
    std::string wav, alignment, out = "-", format, manifest, out_dir;
  } ex;
  auto add_extract = [&](CLI::App* sub) {
    sub->add_option("--wav", ex.wav);
    sub->add_option("--alignment", ex.alignment, "TextGrid or JSON alignment");
    sub->add_option("--models", g.models, "bank directory (default $EMOEDIT_MODELS or ./models)");
    sub->add_option("--out", ex.out, "HED file, - for stdout")->capture_default_str();
    sub->add_option("--format", ex.format, "csv|json (default from --out extension, else csv)");
    sub->add_option("--manifest", ex.manifest, "batch mode: extract every manifest row into --out-dir");
    sub->add_option("--out-dir", ex.out_dir);
    sub->callback([&] {
      action = [&] {
        const ModelBank bank = load_bank(g.model_dir());
        const FeatureExtractor fx(g.features());
        if (!ex.manifest.empty()) {
          if (ex.out_dir.empty()) throw Error("cli", errc::kInvalidArgument, "--manifest needs --out-dir");
          const auto entries = read_manifest(ex.manifest);
          const HedFormat f = hed_format(ex.format.empty() ? "csv" : ex.format, "");
          parallel_for(entries.size(), g.jobs, [&](std::size_t i) {
            const HedMatrix m = extract_hed(decode_wav(read_file(entries[i].wav)),
                                            parse_alignment(read_file(entries[i].alignment)), bank, fx);
            const auto name = entries[i].wav.stem().string() + (f == HedFormat::json ? ".json" : ".csv");
            write_file(fs::path(ex.out_dir) / name, serialize_hed(m, f));
          });
          return;
        }
        if (ex.wav.empty() || ex.alignment.empty()) {
          throw Error("cli", errc::kInvalidArgument, "--wav and --alignment are required");
        }
        const HedMatrix m = extract_hed(decode_wav(read_file(ex.wav)), parse_alignment(read_file(ex.alignment)), bank, fx);
        emit(ex.out, serialize_hed(m, hed_format(ex.format, ex.out)), out);
      };
    });
  };
  add_extract(app.add_subcommand("extract", "extract a HED matrix from audio + alignment"));

  // edit ----------------------------------------------------------------
  struct {
    std::string in, script, out = "-", format;
  } ed;
  auto add_edit = [&](CLI::App* sub) {
    sub->add_option("--in", ed.in, "HED file (csv or json)")->required();
    sub->add_option("--script", ed.script, "EditScript JSON")->required();
    sub->add_option("--out", ed.out)->capture_default_str();
    sub->add_option("--format", ed.format);
    sub->callback([&] {
      action = [&] {
        const HedMatrix m = apply(parse_hed(read_file(ed.in)), parse_script(read_file(ed.script)));
        emit(ed.out, serialize_hed(m, hed_format(ed.format, ed.out)), out);
      };
    });
  };
  add_edit(app.add_subcommand("edit", "apply an edit script to a HED file"));

  // hed extract / hed edit aliases ----------------------------------------
  auto* hed = app.add_subcommand("hed", "HED matrix operations");
  hed->require_subcommand(1);
  add_extract(hed->add_subcommand("extract", "same as `extract`"));
  add_edit(hed->add_subcommand("edit", "same as `edit`"));

  // diff ----------------------------------------------------------------
  auto* diff_cmd = app.add_subcommand("diff", "edit script turning one HED file into another");
  std::string diff_a, diff_b, diff_out = "-";
  diff_cmd->add_option("--from", diff_a)->required();
  diff_cmd->add_option("--to", diff_b)->required();
  diff_cmd->add_option("--out", diff_out)->capture_default_str();
  diff_cmd->callback([&] {
    action = [&] { emit(diff_out, serialize_script(diff(parse_hed(read_file(diff_a)), parse_hed(read_file(diff_b)))), out); };
  });

  // export --------------------------------------------------------------
  auto* exp = app.add_subcommand("export", "convert a HED file between csv and json");
  std::string exp_in, exp_out = "-", exp_format;
  exp->add_option("--in", exp_in)->required();
  exp->add_option("--out", exp_out)->capture_default_str();
  exp->add_option("--format", exp_format);
  exp->callback([&] {
    action = [&] { emit(exp_out, serialize_hed(parse_hed(read_file(exp_in)), hed_format(exp_format, exp_out)), out); };
  });

  // sweep ---------------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "set one target to each of several intensities");
  struct {
    std::string in, level = "word", emotion = "all", out_dir = ".", prefix, format = "csv";
    std::optional<std::size_t> index;
    std::vector<std::size_t> range;
    bool all = false;
    std::vector<double> values{0.0, 0.5, 1.0};
  } sp;
  sw->add_option("--in", sp.in, "HED file")->required();
  sw->add_option("--level,--condition", sp.level, "utterance|word|phoneme|wp (or U/W/P/WP)")->capture_default_str();
  sw->add_option("--index", sp.index, "word or phoneme index");
  sw->add_option("--range", sp.range, "inclusive index range a,b")->delimiter(',');
  sw->add_flag("--all", sp.all, "every word/phoneme (default when no index is given)");
  sw->add_option("--emotion", sp.emotion)->capture_default_str();
  sw->add_option("--values", sp.values)->delimiter(',')->capture_default_str();
  sw->add_option("--out-dir", sp.out_dir)->capture_default_str();
  sw->add_option("--prefix", sp.prefix, "file name prefix (default: input stem)");
  sw->add_option("--format", sp.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  sw->callback([&] {
    action = [&] {
      if (sp.all && (sp.index || !sp.range.empty())) {
        throw Error("cli", errc::kInvalidArgument, "--all excludes --index/--range");
      }
      if (sp.values.empty()) throw Error("cli", errc::kInvalidArgument, "--values is empty");
      const HedMatrix m = parse_hed(read_file(sp.in));
      const SweepCondition cond = sweep_condition_from_string(sp.level);
      const std::optional<std::string> emotion = sp.emotion == "all" ? std::nullopt : std::optional(sp.emotion);
      const auto mats = sweep(m, cond, make_selector(sp.index, sp.range), emotion, sp.values);
      const std::string prefix = sp.prefix.empty() ? fs::path(sp.in).stem().string() : sp.prefix;
      const HedFormat f = hed_format(sp.format, "");
      for (std::size_t i = 0; i < mats.size(); ++i) {
        const auto name = prefix + "_" + to_string(cond) + "_" + value_tag(sp.values[i]) + "." + sp.format;
        write_file(fs::path(sp.out_dir) / name, serialize_hed(mats[i], f));
        out << (fs::path(sp.out_dir) / name).string() << "\n";
      }
    };
  });

  // features dump ---------------------------------------------------------
  auto* feat = app.add_subcommand("features", "feature vectors");
  feat->require_subcommand(1);
  auto* dump = feat->add_subcommand("dump", "88-dim feature vectors per segment as CSV");
  std::string fd_wav, fd_alignment, fd_level = "phoneme", fd_out = "-";
  dump->add_option("--wav", fd_wav)->required();
  dump->add_option("--alignment", fd_alignment, "omit to treat the whole file as one segment");
  dump->add_option("--level", fd_level)->check(CLI::IsMember({"utterance", "word", "phoneme"}))->capture_default_str();
  dump->add_option("--out", fd_out)->capture_default_str();
  dump->callback([&] {
    action = [&] {
      const FeatureExtractor fx(g.features());
      const Waveform w = to_analysis_rate(decode_wav(read_file(fd_wav)));
      std::vector<Segment> segs;
      if (fd_alignment.empty()) {
        segs.push_back({"", 0.0, w.duration_s()});
      } else {
        const AlignmentHierarchy h = parse_alignment(read_file(fd_alignment));
        const Level level = level_from_string(fd_level);
        if (level == Level::utterance) segs.push_back(h.utterance);
        if (level == Level::word) segs = h.words;
        if (level == Level::phoneme) segs = h.phonemes;
      }
      std::string csv = "label,start_s,end_s";
      for (const auto& n : feature_names()) csv += "," + n;
      csv += "\n";
      for (const auto& s : segs) {
        const FeatureVector v = fx.extract(w, s.interval());
        csv += detail::csv_field(s.label) + "," + detail::format_double(s.start_s) + "," + detail::format_double(s.end_s);
        for (double x : v) csv += "," + detail::format_double(x);
        csv += "\n";
      }
      emit(fd_out, csv, out);
    };
  });

  // eval ----------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "objective evaluation");
  ev->require_subcommand(1);
  auto* metrics = ev->add_subcommand("metrics", "MCD, DTW frame disturbance, pitch/energy distortion");
  std::string m_ref, m_test, m_out = "-";
  bool m_no_dtw = false;
  metrics->add_option("--ref", m_ref)->required();
  metrics->add_option("--test", m_test)->required();
  metrics->add_flag("--no-dtw", m_no_dtw, "compare frames index by index");
  metrics->add_option("--out", m_out)->capture_default_str();
  metrics->callback([&] {
    action = [&] {
      const FeatureExtractor fx(g.features());
      const Distortion d = compare_waveforms(decode_wav(read_file(m_ref)), decode_wav(read_file(m_test)), !m_no_dtw, fx);
      emit(m_out, distortion_to_json(d).dump(2) + "\n", out);
    };
  });

  auto* prosody = ev->add_subcommand("prosody", "prosody statistics of rendered sweep outputs, as a runs CSV");
  std::string pr_list, pr_out = "-";
  prosody->add_option("--list", pr_list, "CSV: condition,emotion,intensity,wav[,alignment]")->required();
  prosody->add_option("--out", pr_out)->capture_default_str();
  prosody->callback([&] {
    action = [&] {
      const std::string text = read_file(pr_list);
      const fs::path base = fs::path(pr_list).parent_path();
      std::istringstream in(text);
      std::string line;
      std::vector<std::vector<std::string>> rows;
      for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line, n);
        if (n == 1) {
          if (f.size() < 4 || f[0] != "condition" || f[1] != "emotion" || f[2] != "intensity" || f[3] != "wav") {
            throw Error("cli", errc::kSchema, "list header must be condition,emotion,intensity,wav[,alignment]");
          }
          continue;
        }
        if (f.size() < 4) throw Error("cli", errc::kSchema, "line " + std::to_string(n) + ": expected >= 4 fields");
        rows.push_back(std::move(f));
      }
      const FeatureExtractor fx(g.features());
      std::vector<ProsodyStats> stats(rows.size());
      auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
      parallel_for(rows.size(), g.jobs, [&](std::size_t i) {
        const Waveform w = decode_wav(read_file(resolve(rows[i][3])));
        std::optional<AlignmentHierarchy> h;
        if (rows[i].size() > 4 && !rows[i][4].empty()) h = parse_alignment(read_file(resolve(rows[i][4])));
        stats[i] = prosody_stats(w, h ? &*h : nullptr, fx);
      });
      std::string csv = "condition,emotion,intensity,duration_s,pitch_mean_hz,pitch_std_hz,energy_mean_db,energy_std_db\n";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& s = stats[i];
        csv += rows[i][0] + "," + detail::csv_field(rows[i][1]) + "," + rows[i][2];
        for (double v : {s.duration_s, s.pitch_mean_hz, s.pitch_std_hz, s.energy_mean_db, s.energy_std_db}) {
          csv += "," + detail::format_double(v);
        }
        csv += "\n";
      }
      emit(pr_out, csv, out);
    };
  });

  auto* trends = ev->add_subcommand("trends", "Spearman trend analysis per condition x emotion");
  std::string t_runs, t_expected, t_out = "-", t_table;
  trends->add_option("--runs", t_runs, "runs CSV")->required();
  trends->add_option("--expected", t_expected, "expected-sign JSON (default: built-in table)");
  trends->add_option("--out", t_out, "report JSON")->capture_default_str();
  trends->add_option("--table", t_table, "heatmap CSV");
  trends->callback([&] {
    action = [&] {
      ExpectedSigns expected = default_expected_signs();
      if (!t_expected.empty()) {
        try {
          expected = expected_signs_from_json(nlohmann::json::parse(read_file(t_expected)));
        } catch (const nlohmann::json::parse_error& e) {
          throw Error("eval", errc::kParse, e.what(), e.byte);
        }
      }
      const TrendReport r = trend_analysis(parse_trend_runs_csv(read_file(t_runs)), expected);
      emit(t_out, trend_report_to_json(r).dump(2) + "\n", out);
      if (!t_table.empty()) emit(t_table, trend_heatmap_csv(r), out);
    };
  });

  // serve ---------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "HTTP editing service");
  struct {
    std::string host = "127.0.0.1", persist_dir, ui_dir, cors = "*";
    int port = 8080;
  } sv;
  serve->add_option("--port", sv.port)->capture_default_str();
  serve->add_option("--host", sv.host)->capture_default_str();
  serve->add_option("--models", g.models, "bank directory (default $EMOEDIT_MODELS or ./models)");
  serve->add_option("--persist-dir", sv.persist_dir, "save sessions here on shutdown, reload at startup");
  serve->add_option("--ui-dir", sv.ui_dir, "static UI bundle to serve at /");
  serve->add_option("--cors-origin", sv.cors)->capture_default_str();
  serve->callback([&] {
    action = [&] {
      std::shared_ptr<const ModelBank> bank;
      try {
        bank = std::make_shared<const ModelBank>(load_bank(g.model_dir()));
      } catch (const Error& e) {
        err << service::error_json(e).dump() << "\n";  // keep serving; uploads answer 503
      }
      service::ServiceOptions opts;
      if (!sv.persist_dir.empty()) opts.persist_dir = sv.persist_dir;
      if (!sv.ui_dir.empty()) opts.ui_dir = sv.ui_dir;
      opts.cors_origin = sv.cors;
      opts.features = g.features();
      service::Service svc(bank, opts);
      out << "listening on http://" << sv.host << ":" << sv.port << std::endl;
      if (!svc.listen(sv.host, sv.port)) {
        throw Error("service", errc::kIo, "cannot listen on " + sv.host + ":" + std::to_string(sv.port));
      }
    };
  });

  // synth ---------------------------------------------------------------
  auto* syn = app.add_subcommand("synth", "write a synthetic labeled corpus (fixtures, smoke tests)");
  synth::CorpusSpec cs;
  std::string syn_dir;
  syn->add_option("--out-dir", syn_dir)->required();
  syn->add_option("--emotions", cs.emotions)->delimiter(',')->capture_default_str();
  syn->add_option("--speakers", cs.speakers)->delimiter(',')->capture_default_str();
  syn->add_option("--per-cell", cs.utterances_per_cell, "utterances per (speaker, emotion)")->capture_default_str();
  syn->add_option("--words", cs.words)->capture_default_str();
  syn->add_option("--seed", cs.seed)->capture_default_str();
  syn->callback([&] {
    action = [&] { out << synth::write_corpus(syn_dir, cs).string() << "\n"; };
  });

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << service::error_json("cli", "usage", e.what()).dump() << "\n";
    return 2;
  }
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << service::error_json(e).dump() << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    err << service::error_json("io", errc::kIo, e.what()).dump() << "\n";
  } catch (const std::exception& e) {
    err << service::error_json("cli", "internal", e.what()).dump() << "\n";
  }
  return 1;
}

}  // namespace emoedit::cli
