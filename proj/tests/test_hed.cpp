#include <gtest/gtest.h>

#include "emoedit/hed.hpp"
#include "emoedit/synth.hpp"
#include "oracles.hpp"

using namespace emoedit;

namespace {

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

AlignmentHierarchy two_words() {
  AlignmentHierarchy h;
  h.utterance = {"a b", 0.0, 1.0};
  h.words = {{"a", 0.1, 0.5}, {"b", 0.6, 0.9}};
  h.phonemes = {{"AH", 0.1, 0.3}, {"B", 0.3, 0.5}, {"IY", 0.6, 0.9}};
  link_hierarchy(h);
  return h;
}

}  // namespace

TEST(Assemble, ReplicatesUpperLevels) {
  const auto m = assemble_hed({"Angry", "Sad"}, two_words(), {0.9, 0.1}, {{0.8, 0.2}, {0.3, 0.7}},
                              {{0.5, 0.5}, {0.6, 0.4}, {0.0, 1.0}});
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.rows[0], (std::vector<double>{0.9, 0.1, 0.8, 0.2, 0.5, 0.5}));
  EXPECT_EQ(m.rows[1], (std::vector<double>{0.9, 0.1, 0.8, 0.2, 0.6, 0.4}));
  EXPECT_EQ(m.rows[2], (std::vector<double>{0.9, 0.1, 0.3, 0.7, 0.0, 1.0}));
  EXPECT_EQ(m.word_of_phoneme, (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(m.phoneme_labels, (std::vector<std::string>{"AH", "B", "IY"}));
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(m.column_name(0), "utt_Angry");
  EXPECT_EQ(m.column_name(3), "word_Sad");
  EXPECT_EQ(m.column_name(4), "phon_Angry");
}

TEST(Validate, CatchesBrokenInvariants) {
  std::mt19937_64 rng(1);
  HedMatrix m = oracle::random_hed(rng, 2, 3, 3);
  ASSERT_GT(m.size(), 1u);
  HedMatrix bad = m;
  bad.rows[1][0] = m.rows[0][0] == 0.5 ? 0.25 : 0.5;
  EXPECT_EQ(error_code([&] { bad.validate(); }), errc::kValidation);
  bad = m;
  bad.rows[0][0] = 1.3;
  EXPECT_EQ(error_code([&] { bad.validate(); }), errc::kValidation);
  bad = m;
  bad.rows[0].pop_back();
  EXPECT_EQ(error_code([&] { bad.validate(); }), errc::kSchema);
  bad = m;
  bad.emotions.clear();
  EXPECT_EQ(error_code([&] { bad.validate(); }), errc::kSchema);
}

TEST(Validate, WordBlockWithinWord) {
  HedMatrix m;
  m.emotions = {"A"};
  m.phoneme_labels = {"x", "y"};
  m.word_of_phoneme = {0, 0};
  m.rows = {{0.5, 0.2, 0.1}, {0.5, 0.3, 0.1}};
  EXPECT_EQ(error_code([&] { m.validate(); }), errc::kValidation);
  m.word_of_phoneme = {0, 1};
  EXPECT_NO_THROW(m.validate());
}

TEST(Csv, RoundTripIsExact) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const HedMatrix m = oracle::random_hed(rng, 1 + i % 4, 1 + i % 5, 4);
    const std::string csv = serialize_hed_csv(m);
    EXPECT_EQ(parse_hed_csv(csv), m);
    EXPECT_EQ(serialize_hed_csv(parse_hed(csv)), csv);
    EXPECT_EQ(parse_hed(serialize_hed_json(m)), m);
  }
}

TEST(Csv, HeaderLayout) {
  const auto m = assemble_hed({"Angry", "Sad"}, two_words(), {0.9, 0.1}, {{0.8, 0.2}, {0.3, 0.7}},
                              {{0.5, 0.5}, {0.6, 0.4}, {0.0, 1.0}});
  const std::string csv = serialize_hed_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "phoneme,word_index,utt_Angry,utt_Sad,word_Angry,word_Sad,phon_Angry,phon_Sad");
  EXPECT_NE(csv.find("\nIY,1,0.9,0.1,0.3,0.7,0,1\n"), std::string::npos);
}

TEST(Csv, RejectsBadInput) {
  const std::string head = "phoneme,word_index,utt_A,word_A,phon_A\n";
  EXPECT_EQ(error_code([&] { parse_hed_csv(head + "x,0,0.5,0.5,1.3\n"); }), errc::kValidation);
  EXPECT_EQ(error_code([&] { parse_hed_csv(head + "x,0,0.5,0.5\n"); }), errc::kSchema);
  EXPECT_EQ(error_code([&] { parse_hed_csv(head + "x,0,0.5,abc,0.1\n"); }), errc::kSchema);
  EXPECT_EQ(error_code([&] { parse_hed_csv("phoneme,word_index,utt_A,phon_A,word_A\nx,0,1,1,1\n"); }), errc::kSchema);
  EXPECT_EQ(error_code([&] { parse_hed_csv(""); }), errc::kSchema);
  EXPECT_EQ(error_code([&] { parse_hed_json("{\"emotions\":[\"A\"],\"rows\":[{\"phoneme\":\"x\",\"word_index\":0,"
                                            "\"utt\":[0.5],\"word\":[0.5,0.2],\"phon\":[0.1]}]}"); }),
            errc::kSchema);
  EXPECT_EQ(error_code([&] { parse_hed_json("{\"emotions\": ["); }), errc::kParse);
}

TEST(Extract, RowsFollowSpokenPhonemes) {
  const ModelBank bank = oracle::toy_bank({"Angry", "Happy", "Sad"}, 3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto u = synth::synthesize({"Happy", 0.7, 150.0, 3, seed, {}});
    std::string tg = serialize_textgrid(u.alignment);
    // label one gap in each tier explicitly
    for (int i = 0; i < 2; ++i) tg.replace(tg.find("text = \"\""), 9, "text = \"sil\"");
    const AlignmentHierarchy h = parse_textgrid(tg);
    EXPECT_EQ(h.phonemes.size(), u.alignment.phonemes.size());
    const HedMatrix m = extract_hed(u.wave, h, bank);
    EXPECT_EQ(m.size(), u.alignment.phonemes.size());
    EXPECT_EQ(m.k(), 3u);
    EXPECT_NO_THROW(m.validate());
    EXPECT_EQ(extract_hed(u.wave, h, bank), m);
  }
}

TEST(Extract, EmptyHierarchyAndIncompleteBank) {
  const auto u = synth::synthesize({"Sad", 1.0, 120.0, 2, 1, {}});
  AlignmentHierarchy empty = u.alignment;
  empty.phonemes.clear();
  empty.word_of_phoneme.clear();
  const ModelBank bank = oracle::toy_bank({"Sad"}, 1);
  EXPECT_EQ(error_code([&] { extract_hed(u.wave, empty, bank); }), errc::kEmptyHierarchy);
  ModelBank partial({"Sad"});
  partial.add(bank.get("Sad", Level::utterance));
  EXPECT_EQ(error_code([&] { extract_hed(u.wave, u.alignment, partial); }), errc::kIncompleteBank);
}

TEST(Extract, ResamplesInput) {
  const auto u = synth::synthesize({"Angry", 1.0, 120.0, 2, 4, {}});
  const ModelBank bank = oracle::toy_bank({"Angry"}, 2);
  const Waveform up = resample(u.wave, 22050);
  const HedMatrix a = extract_hed(u.wave, u.alignment, bank);
  const HedMatrix b = extract_hed(up, u.alignment, bank);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_NO_THROW(b.validate());
}
