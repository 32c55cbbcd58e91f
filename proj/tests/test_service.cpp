#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "emoedit/service.hpp"
#include "emoedit/synth.hpp"
#include "oracles.hpp"

using namespace emoedit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const synth::Utterance& utterance() {
  static const synth::Utterance u = synth::synthesize({"Angry", 0.8, 140.0, 3, 21, {}});
  return u;
}

httplib::MultipartFormDataItems upload() {
  return {{"wav", encode_wav_pcm16(utterance().wave), "u.wav", "audio/wav"},
          {"alignment", serialize_textgrid(utterance().alignment), "u.TextGrid", "text/plain"}};
}

json body(const httplib::Result& r) { return json::parse(r->body); }

std::string patch_body(std::uint64_t version, double value) {
  return json{{"expected_version", version},
              {"script",
               {{"ops", {{{"level", "word"}, {"selector", {{"index", 0}}}, {"emotion", "Angry"}, {"action", "set"},
                          {"value", value}}}}}}}
      .dump();
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    bank_ = std::make_shared<const ModelBank>(oracle::toy_bank({"Angry", "Sad"}, 7));
    svc_ = std::make_unique<service::Service>(bank_);
    port_ = svc_->start_background();
  }
  void TearDown() override { svc_->stop(); }

  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  std::string create() {
    auto c = client();
    auto r = c.Post("/utterances", upload());
    EXPECT_TRUE(r);
    EXPECT_EQ(r->status, 201) << r->body;
    return body(r)["id"];
  }

  std::shared_ptr<const ModelBank> bank_;
  std::unique_ptr<service::Service> svc_;
  int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, HealthAndCors) {
  auto c = client();
  auto r = c.Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["models_loaded"], true);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  r = c.Options("/utterances");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
}

TEST_F(ServiceTest, CreateMatchesLibraryExtraction) {
  auto c = client();
  auto r = c.Post("/utterances", upload());
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 201);
  const json j = body(r);
  EXPECT_EQ(j["version"], 0);
  const HedMatrix expect = extract_hed(utterance().wave, parse_textgrid(serialize_textgrid(utterance().alignment)), *bank_);
  EXPECT_EQ(hed_from_json(j["hed"]), expect);
  const std::string id = j["id"];
  r = c.Get("/utterances/" + id + "/export?format=csv");
  EXPECT_EQ(r->body, serialize_hed_csv(expect));
  r = c.Get("/utterances/" + id + "/audio");
  EXPECT_EQ(r->body, encode_wav_pcm16(utterance().wave));
  r = c.Get("/utterances/" + id + "/alignment");
  EXPECT_EQ(r->status, 200);
  r = c.Get("/utterances");
  EXPECT_EQ(body(r)["ids"], json::array({id}));
}

TEST_F(ServiceTest, CreateErrors) {
  auto c = client();
  auto r = c.Post("/utterances", httplib::MultipartFormDataItems{{"wav", "RIFF", "a.wav", "audio/wav"}});
  EXPECT_EQ(r->status, 400);
  r = c.Post("/utterances",
             httplib::MultipartFormDataItems{{"wav", "not a wav", "a.wav", "audio/wav"}, {"alignment", "{}", "a.json", ""}});
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body(r)["error"]["module"], "audio");
}

TEST_F(ServiceTest, PatchUndoAndVersions) {
  const std::string id = create();
  auto c = client();
  const std::string path = "/utterances/" + id + "/hed";
  auto r = c.Patch(path, patch_body(0, 0.9), "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  json j = body(r);
  EXPECT_EQ(j["version"], 1);
  const HedMatrix edited = hed_from_json(j["hed"]);
  EXPECT_EQ(edited.at(0, Level::word, 0), 0.9);

  r = c.Patch(path, patch_body(0, 0.1), "application/json");
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["version"], 1);

  r = c.Patch(path, R"({"script":{"ops":[]}})", "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Patch(path, "nope", "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Patch(path, R"({"expected_version":1,"script":{"ops":[{"level":"word","selector":{"index":99},)"
                    R"("emotion":"all","action":"set","value":1}]}})",
              "application/json");
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(body(r)["error"]["code"], errc::kIndex);

  r = c.Post("/utterances/" + id + "/undo", "", "application/json");
  ASSERT_EQ(r->status, 200);
  j = body(r);
  EXPECT_EQ(j["version"], 2);
  EXPECT_EQ(hed_from_json(j["hed"]), extract_hed(utterance().wave, utterance().alignment, *bank_));
  r = c.Post("/utterances/" + id + "/undo", "", "application/json");
  EXPECT_EQ(r->status, 409);
}

TEST_F(ServiceTest, SweepPreviewDoesNotMutate) {
  const std::string id = create();
  auto c = client();
  auto r = c.Post("/utterances/" + id + "/sweep",
                  R"({"condition":"WP","selector":{"index":1},"emotion":"Sad","values":[0,0.5,1]})", "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  const json j = body(r);
  ASSERT_EQ(j["results"].size(), 3u);
  const HedMatrix half = hed_from_json(j["results"][1]["hed"]);
  for (std::size_t i = 0; i < half.size(); ++i) {
    if (half.word_of_phoneme[i] == 1) {
      EXPECT_EQ(half.at(i, Level::phoneme, 1), 0.5);
    }
  }
  r = c.Get("/utterances/" + id + "/hed");
  EXPECT_EQ(body(r)["version"], 0);
  r = c.Post("/utterances/" + id + "/sweep", R"({"condition":"W"})", "application/json");
  EXPECT_EQ(r->status, 422);
}

TEST_F(ServiceTest, ConcurrentPatchesExactlyOneWins) {
  const std::string id = create();
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < 8; ++t) {
    ts.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port_);
      auto r = c.Patch("/utterances/" + id + "/hed", patch_body(0, 0.1 * t), "application/json");
      if (r && r->status == 200) ++ok;
      if (r && r->status == 409) ++conflict;
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(ok, 1);
  EXPECT_EQ(conflict, 7);
}

TEST_F(ServiceTest, UnknownIdAndDelete) {
  auto c = client();
  EXPECT_EQ(c.Get("/utterances/nope/hed")->status, 404);
  const std::string id = create();
  EXPECT_EQ(c.Delete("/utterances/" + id)->status, 204);
  EXPECT_EQ(c.Get("/utterances/" + id + "/hed")->status, 404);
}

TEST(ServiceNoBank, CreateIsUnavailable) {
  service::Service svc(nullptr);
  const int port = svc.start_background();
  httplib::Client c("127.0.0.1", port);
  EXPECT_EQ(body(c.Get("/health"))["models_loaded"], false);
  EXPECT_EQ(c.Post("/utterances", upload())->status, 503);
  svc.stop();
}

TEST(ServicePersistence, SessionsSurviveRestart) {
  const fs::path dir = fs::temp_directory_path() / "emoedit_persist_test";
  fs::remove_all(dir);
  auto bank = std::make_shared<const ModelBank>(oracle::toy_bank({"Angry"}, 1));
  service::ServiceOptions opts;
  opts.persist_dir = dir;
  std::string id;
  json before;
  {
    service::Service svc(bank, opts);
    httplib::Client c("127.0.0.1", svc.start_background());
    id = body(c.Post("/utterances", upload()))["id"];
    before = body(c.Patch("/utterances/" + id + "/hed", patch_body(0, 0.3), "application/json"));
    svc.stop();
  }
  service::Service svc(bank, opts);
  httplib::Client c("127.0.0.1", svc.start_background());
  auto r = c.Get("/utterances/" + id + "/hed");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r), before);
  EXPECT_EQ(c.Post("/utterances/" + id + "/undo", "", "application/json")->status, 200);
  svc.stop();
  fs::remove_all(dir);
}
