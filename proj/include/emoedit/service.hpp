#pragma once

// HTTP/JSON editing sessions over extracted HED matrices.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "emoedit/alignment.hpp"
#include "emoedit/audio.hpp"
#include "emoedit/editor.hpp"
#include "emoedit/error.hpp"
#include "emoedit/hed.hpp"

namespace emoedit::service {

struct Session {
  std::string id;
  std::string wav_bytes;
  AlignmentHierarchy alignment;
  HedMatrix initial;
  HedMatrix current;
  std::uint64_t version = 0;
  std::vector<EditScript> history;
  std::mutex mu;
};

inline HedMatrix replay(const HedMatrix& initial, const std::vector<EditScript>& history) {
  HedMatrix m = initial;
  for (const auto& s : history) m = apply(m, s);
  return m;
}

inline nlohmann::json error_json(const std::string& module, const std::string& code, const std::string& message) {
  return {{"error", {{"module", module}, {"code", code}, {"message", message}}}};
}

inline nlohmann::json error_json(const Error& e) {
  nlohmann::json j = error_json(e.module(), e.code(), e.detail());
  if (e.byte_offset()) j["error"]["byte_offset"] = *e.byte_offset();
  return j;
}

class SessionStore {
 public:
  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::shared_ptr<Session> insert(std::shared_ptr<Session> s) {
    std::unique_lock lock(mu_);
    if (s->id.empty()) s->id = next_id_locked();
    sessions_[s->id] = s;
    return s;
  }

  bool erase(const std::string& id) {
    std::unique_lock lock(mu_);
    return sessions_.erase(id) > 0;
  }

  std::vector<std::string> ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
  }

  // One <id>.json (matrix, history, alignment) plus <id>.wav per session.
  void save(const std::filesystem::path& dir) const {
    std::shared_lock lock(mu_);
    std::filesystem::create_directories(dir);
    for (const auto& [id, s] : sessions_) {
      std::lock_guard sl(s->mu);
      nlohmann::json hist = nlohmann::json::array();
      for (const auto& h : s->history) hist.push_back(script_to_json(h));
      const nlohmann::json j = {{"id", id},
                                {"version", s->version},
                                {"initial", hed_to_json(s->initial)},
                                {"history", hist},
                                {"alignment", alignment_to_json(s->alignment)}};
      write_file(dir / (id + ".json"), j.dump(2) + "\n");
      write_file(dir / (id + ".wav"), s->wav_bytes);
    }
  }

  // Sessions that fail to load are skipped and reported by id.
  std::vector<std::string> load(const std::filesystem::path& dir) {
    std::vector<std::string> failed;
    if (!std::filesystem::is_directory(dir)) return failed;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      try {
        const auto j = nlohmann::json::parse(read_file(p));
        auto s = std::make_shared<Session>();
        s->id = j.at("id").get<std::string>();
        s->version = j.at("version").get<std::uint64_t>();
        s->initial = hed_from_json(j.at("initial"));
        for (const auto& h : j.at("history")) s->history.push_back(script_from_json(h));
        s->alignment = alignment_from_json(j.at("alignment"));
        s->wav_bytes = read_file(dir / (s->id + ".wav"));
        s->current = replay(s->initial, s->history);
        insert(std::move(s));
      } catch (const std::exception&) {
        failed.push_back(p.stem().string());
      }
    }
    return failed;
  }

 private:
  std::string next_id_locked() {
    std::string id;
    do {
      char buf[24];
      std::snprintf(buf, sizeof buf, "u%016llx", static_cast<unsigned long long>(rng_()));
      id = buf;
    } while (sessions_.count(id));
    return id;
  }

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
};

struct ServiceOptions {
  std::optional<std::filesystem::path> persist_dir;
  std::optional<std::filesystem::path> ui_dir;
  std::string cors_origin = "*";
  FeatureConfig features;
};

class Service {
 public:
  Service(std::shared_ptr<const ModelBank> bank, ServiceOptions opts = {})
      : bank_(std::move(bank)), opts_(std::move(opts)), fx_(opts_.features) {
    if (opts_.persist_dir) store_.load(*opts_.persist_dir);
    routes();
  }

  ~Service() { stop(); }

  httplib::Server& server() { return server_; }
  SessionStore& store() { return store_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  // Binds an ephemeral port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1") {
    const int port = server_.bind_to_any_port(host);
    if (port < 0) throw Error("service", errc::kIo, "cannot bind " + host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() {
    if (stopped_.exchange(true)) return;
    server_.stop();
    if (thread_.joinable()) thread_.join();
    if (opts_.persist_dir) store_.save(*opts_.persist_dir);
  }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static nlohmann::json session_json(const Session& s) {
    return {{"id", s.id}, {"hed", hed_to_json(s.current)}, {"version", s.version}};
  }

  std::shared_ptr<Session> lookup(const httplib::Request& req, httplib::Response& res) {
    const auto id = req.path_params.at("id");
    auto s = store_.find(id);
    if (!s) send_json(res, 404, error_json("service", "not_found", "unknown utterance id '" + id + "'"));
    return s;
  }

  static std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res,
                                                  bool allow_empty = false) {
    if (allow_empty && req.body.empty()) return nlohmann::json::object();
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw std::runtime_error("body must be a JSON object");
      return j;
    } catch (const std::exception& e) {
      send_json(res, 400, error_json("service", errc::kParse, std::string("request body: ") + e.what()));
      return std::nullopt;
    }
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    if (!bank_) {
      send_json(res, 503, error_json("service", "models_unavailable", "no model bank loaded"));
      return;
    }
    for (const char* part : {"wav", "alignment"}) {
      if (!req.has_file(part)) {
        send_json(res, 400, error_json("service", "missing_part", std::string("multipart field '") + part + "' is required"));
        return;
      }
    }
    auto s = std::make_shared<Session>();
    try {
      s->wav_bytes = req.get_file_value("wav").content;
      const Waveform w = decode_wav(s->wav_bytes);
      s->alignment = parse_alignment(req.get_file_value("alignment").content);
      s->initial = extract_hed(w, s->alignment, *bank_, fx_);
    } catch (const Error& e) {
      send_json(res, 400, error_json(e));
      return;
    }
    s->current = s->initial;
    store_.insert(s);
    nlohmann::json j = session_json(*s);
    j["alignment"] = alignment_to_json(s->alignment);
    send_json(res, 201, j);
  }

  void patch(const httplib::Request& req, httplib::Response& res) {
    auto s = lookup(req, res);
    if (!s) return;
    const auto body = parse_body(req, res);
    if (!body) return;
    if (!body->contains("expected_version") || !(*body)["expected_version"].is_number_unsigned()) {
      send_json(res, 400, error_json("service", errc::kSchema, "expected_version (non-negative integer) is required"));
      return;
    }
    if (!body->contains("script")) {
      send_json(res, 422, error_json("editor", errc::kSchema, "script is required"));
      return;
    }
    std::lock_guard lock(s->mu);
    const auto expected = (*body)["expected_version"].get<std::uint64_t>();
    if (expected != s->version) {
      auto j = error_json("service", "version_conflict",
                          "expected version " + std::to_string(expected) + ", current is " + std::to_string(s->version));
      j["version"] = s->version;
      send_json(res, 409, j);
      return;
    }
    HedMatrix next;
    EditScript script;
    try {
      script = script_from_json((*body)["script"]);
      next = apply(s->current, script);
    } catch (const Error& e) {
      send_json(res, 422, error_json(e));
      return;
    }
    s->history.push_back(std::move(script));
    s->current = std::move(next);
    ++s->version;
    check_replay(*s);
    send_json(res, 200, session_json(*s));
  }

  void undo(const httplib::Request& req, httplib::Response& res) {
    auto s = lookup(req, res);
    if (!s) return;
    const auto body = parse_body(req, res, true);
    if (!body) return;
    std::lock_guard lock(s->mu);
    if (body->contains("expected_version") && (*body)["expected_version"] != s->version) {
      auto j = error_json("service", "version_conflict", "stale version");
      j["version"] = s->version;
      send_json(res, 409, j);
      return;
    }
    if (s->history.empty()) {
      send_json(res, 409, error_json("service", "empty_history", "nothing to undo"));
      return;
    }
    s->history.pop_back();
    s->current = replay(s->initial, s->history);
    ++s->version;
    send_json(res, 200, session_json(*s));
  }

  void sweep_preview(const httplib::Request& req, httplib::Response& res) {
    auto s = lookup(req, res);
    if (!s) return;
    const auto body = parse_body(req, res);
    if (!body) return;
    HedMatrix base;
    {
      std::lock_guard lock(s->mu);
      base = s->current;
    }
    try {
      const auto& b = *body;
      const SweepCondition cond = sweep_condition_from_string(b.value("condition", std::string("W")));
      const Selector sel = b.contains("selector") ? selector_from_json(b["selector"]) : Selector::all();
      std::optional<std::string> emotion;
      if (b.contains("emotion") && b["emotion"] != "all") emotion = b["emotion"].get<std::string>();
      if (!b.contains("values") || !b["values"].is_array() || b["values"].empty()) {
        throw Error("editor", errc::kSchema, "values must be a non-empty array");
      }
      const auto values = b["values"].get<std::vector<double>>();
      const auto mats = sweep(base, cond, sel, emotion, values);
      nlohmann::json out = nlohmann::json::array();
      for (std::size_t i = 0; i < mats.size(); ++i) {
        out.push_back({{"value", values[i]}, {"hed", hed_to_json(mats[i])}, {"csv", serialize_hed_csv(mats[i])}});
      }
      send_json(res, 200, {{"condition", to_string(cond)}, {"results", out}});
    } catch (const Error& e) {
      send_json(res, 422, error_json(e));
    } catch (const nlohmann::json::exception& e) {
      send_json(res, 422, error_json("editor", errc::kSchema, e.what()));
    }
  }

  void check_replay(const Session& s) const {
    if (replay(s.initial, s.history) != s.current) {
      throw Error("service", errc::kValidation, "history replay diverged for session " + s.id);
    }
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", opts_.cors_origin},
                                 {"Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    server_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        send_json(res, 500, error_json(e));
      } catch (const std::exception& e) {
        send_json(res, 500, error_json("service", "internal", e.what()));
      }
    });

    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json j = {{"status", "ok"}, {"models_loaded", static_cast<bool>(bank_)}};
      j["emotions"] = bank_ ? bank_->emotions() : std::vector<std::string>{};
      send_json(res, 200, j);
    });
    server_.Get("/utterances", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"ids", store_.ids()}});
    });
    server_.Post("/utterances", [this](const httplib::Request& req, httplib::Response& res) { create(req, res); });
    server_.Get("/utterances/:id/hed", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto s = lookup(req, res)) {
        std::lock_guard lock(s->mu);
        send_json(res, 200, session_json(*s));
      }
    });
    server_.Patch("/utterances/:id/hed", [this](const httplib::Request& req, httplib::Response& res) { patch(req, res); });
    server_.Post("/utterances/:id/undo", [this](const httplib::Request& req, httplib::Response& res) { undo(req, res); });
    server_.Post("/utterances/:id/sweep",
                 [this](const httplib::Request& req, httplib::Response& res) { sweep_preview(req, res); });
    server_.Get("/utterances/:id/export", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = lookup(req, res);
      if (!s) return;
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
      std::lock_guard lock(s->mu);
      if (format == "csv") {
        res.set_content(serialize_hed_csv(s->current), "text/csv");
      } else if (format == "json") {
        res.set_content(serialize_hed_json(s->current), "application/json");
      } else {
        send_json(res, 400, error_json("service", errc::kInvalidArgument, "format must be csv or json"));
      }
    });
    server_.Get("/utterances/:id/audio", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto s = lookup(req, res)) res.set_content(s->wav_bytes, "audio/wav");
    });
    server_.Get("/utterances/:id/alignment", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto s = lookup(req, res)) send_json(res, 200, alignment_to_json(s->alignment));
    });
    server_.Delete("/utterances/:id", [this](const httplib::Request& req, httplib::Response& res) {
      if (lookup(req, res)) {
        store_.erase(req.path_params.at("id"));
        res.status = 204;
      }
    });
    if (opts_.ui_dir) server_.set_mount_point("/", opts_.ui_dir->string());
  }

  std::shared_ptr<const ModelBank> bank_;
  ServiceOptions opts_;
  FeatureExtractor fx_;
  SessionStore store_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
};

}  // namespace emoedit::service
