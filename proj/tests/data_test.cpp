#include "vatspam/data.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "vatspam/error.hpp"
#include "vatspam/pipeline.hpp"
#include "vatspam/rng.hpp"
#include "vatspam/synth.hpp"

using namespace vatspam;

namespace {

std::string tmp_path(const char* name) {
  return std::string(::testing::TempDir()) + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

ModelConfig tiny(std::uint64_t seed = 1) {
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.hidden = 16;
  c.ff_dim = 32;
  c.max_len = 12;
  c.vocab_size = 64;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(ParseCsv, QuotedFieldsEscapesAndEmbeddedNewlines) {
  std::istringstream in("a,b\n\"x,y\",\"he said \"\"hi\"\"\"\n\"line1\nline2\",plain\n");
  auto rows = detail::parse_csv(in);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x,y");
  EXPECT_EQ(rows[1][1], "he said \"hi\"");
  EXPECT_EQ(rows[2][0], "line1\nline2");
  EXPECT_EQ(rows[2][1], "plain");
}

TEST(LoadCsv, KeepsGoodRowsSkipsMalformed) {
  const std::string path = tmp_path("mixed.csv");
  // Row 2 has the wrong arity, row 4 a bad label; both skipped, never fatal.
  write_file(path,
             "text,label\n"
             "\"good spam\",1\n"
             "\"only one field\"\n"
             "\"good ham\",0\n"
             "\"bad label\",7\n");
  LoadReport rep;
  Dataset d = load_csv(path, true, &rep);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(rep.kept, 2u);
  EXPECT_EQ(rep.skipped, 2u);
  EXPECT_EQ(d[0].text, "good spam");
  EXPECT_EQ(*d[0].label, 1);
  EXPECT_EQ(*d[1].label, 0);
  // Ids are 1-based data row numbers, stable across skips.
  EXPECT_EQ(d[0].id, 1);
  EXPECT_EQ(d[1].id, 3);
  std::remove(path.c_str());
}

TEST(LoadCsv, RemapsLabelFourToOne) {
  const std::string path = tmp_path("remap.csv");
  write_file(path, "text,label\nhello,4\nbye,0\n");
  Dataset d = load_csv(path, true);
  EXPECT_EQ(*d[0].label, 1);
  EXPECT_EQ(*d[1].label, 0);
  std::remove(path.c_str());
}

TEST(LoadCsv, UnlabeledModeAndMissingColumns) {
  const std::string path = tmp_path("unlab.csv");
  write_file(path, "id,text\n7,\"some text\"\n");
  Dataset d = load_csv(path, false);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_FALSE(d[0].label.has_value());
  EXPECT_THROW(load_csv(path, true), data_error);  // no label column

  write_file(path, "a,b\nx,y\n");
  EXPECT_THROW(load_csv(path, false), data_error);  // no text column
  write_file(path, "text,label\n");
  EXPECT_THROW(load_csv(path, true), data_error);  // no usable rows
  EXPECT_THROW(load_csv(tmp_path("missing_file.csv"), true), data_error);
  std::remove(path.c_str());
}

TEST(SaveCsv, RoundTripsArbitraryText) {
  Dataset d;
  d.push_back({1, "plain words", 1});
  d.push_back({2, "commas, \"quotes\", and\nnewlines", 0});
  d.push_back({3, "no label here", std::nullopt});
  const std::string path = tmp_path("rt.csv");
  save_csv(d, path);
  Dataset back = load_csv(path, false);
  ASSERT_EQ(back.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].text, d[i].text);
    EXPECT_EQ(back[i].label, d[i].label);
  }
  std::remove(path.c_str());
}

TEST(SaveCsv, FuzzRoundTripWithHostileCharacters) {
  Rng rng(9);
  const std::string alphabet = "ab,\"\n'x ";
  Dataset d;
  for (int i = 0; i < 200; ++i) {
    std::string text = "t";  // never empty
    const int len = rng.uniform_int(12);
    for (int k = 0; k < len; ++k)
      text += alphabet[static_cast<std::size_t>(rng.uniform_int(
          static_cast<int>(alphabet.size())))];
    d.push_back({i + 1, text, rng.uniform() < 0.5 ? std::optional<int>(1) : std::optional<int>(0)});
  }
  const std::string path = tmp_path("fuzz.csv");
  save_csv(d, path);
  LoadReport rep;
  Dataset back = load_csv(path, true, &rep);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(rep.skipped, 0u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back[i].text, d[i].text);
    EXPECT_EQ(back[i].label, d[i].label);
  }
  std::remove(path.c_str());
}

TEST(Synth, DeterministicPerSeedDistinctAcrossSeeds) {
  Dataset a = synth::gen_spam(50, 7);
  Dataset b = synth::gen_spam(50, 7);
  Dataset c = synth::gen_spam(50, 8);
  ASSERT_EQ(a.size(), 50u);
  bool all_equal = true, any_diff_seed = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    all_equal = all_equal && a[i].text == b[i].text && a[i].label == b[i].label;
    any_diff_seed = any_diff_seed || a[i].text != c[i].text;
  }
  EXPECT_TRUE(all_equal);
  EXPECT_TRUE(any_diff_seed);
}

TEST(Synth, SentimentRowsAreBinaryAndClean) {
  Dataset d = synth::gen_sentiment(200, 3);
  int pos = 0;
  for (const auto& ex : d) {
    ASSERT_TRUE(ex.label.has_value());
    EXPECT_TRUE(*ex.label == 0 || *ex.label == 1);
    pos += *ex.label;
    EXPECT_EQ(ex.text.find("http"), std::string::npos);  // URL-free by design
    EXPECT_FALSE(ex.text.empty());
  }
  EXPECT_GT(pos, 60);  // roughly balanced
  EXPECT_LT(pos, 140);
}

TEST(Synth, SpamFractionIsRespected) {
  Dataset all_spam = synth::gen_spam(80, 4, 1.0);
  Dataset all_ham = synth::gen_spam(80, 4, 0.0);
  for (const auto& ex : all_spam) EXPECT_EQ(*ex.label, 1);
  for (const auto& ex : all_ham) EXPECT_EQ(*ex.label, 0);
}

TEST(Synth, UnlabeledRowsCarryNoLabel) {
  Dataset d = synth::gen_unlabeled(30, 5);
  for (const auto& ex : d) EXPECT_FALSE(ex.label.has_value());
}

TEST(Stage1Tag, PrefixesEveryRowAndCountsClasses) {
  TransformerClassifier m(tiny(2));
  Dataset d = synth::gen_spam(40, 6);
  Vocab v = build_vocab(texts_of(d), 64, 1);
  TagSummary sum;
  Dataset tagged = stage1_tag(d, m, v, &sum);
  ASSERT_EQ(tagged.size(), d.size());
  long long pos = 0, neu = 0, neg = 0;
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    const std::string& t = tagged[i].text;
    const bool has_tag = t.rfind("TAGPOS ", 0) == 0 || t.rfind("TAGNEU ", 0) == 0 ||
                         t.rfind("TAGNEG ", 0) == 0;
    EXPECT_TRUE(has_tag) << t;
    EXPECT_EQ(t.substr(7), d[i].text);        // original text intact after the tag
    EXPECT_EQ(tagged[i].label, d[i].label);   // labels pass through
    pos += t.rfind("TAGPOS ", 0) == 0;
    neu += t.rfind("TAGNEU ", 0) == 0;
    neg += t.rfind("TAGNEG ", 0) == 0;
  }
  EXPECT_EQ(sum.positive, pos);
  EXPECT_EQ(sum.neutral, neu);
  EXPECT_EQ(sum.negative, neg);
  EXPECT_EQ(sum.positive + sum.neutral + sum.negative,
            static_cast<long long>(d.size()));
}

TEST(Improve, TagsUrlsIdempotentlyAndCounts) {
  Dataset d;
  d.push_back({1, "TAGPOS go http://t.ly/ab now", 1});
  d.push_back({2, "TAGNEU nothing here", 0});
  d.push_back({3, "TAGNEG see https://promo-site.example/abcdefghij too", 0});
  UrlTagSummary sum;
  Dataset improved = improve(d, false, &sum);
  EXPECT_EQ(improved[0].text, "TAGPOS TAGURLS go now");
  EXPECT_EQ(improved[1].text, "TAGNEU nothing here");
  EXPECT_EQ(improved[2].text, "TAGNEG TAGURLL see too");
  EXPECT_EQ(sum.short_urls, 1);
  EXPECT_EQ(sum.long_urls, 1);

  UrlTagSummary sum2;
  Dataset twice = improve(improved, false, &sum2);
  for (std::size_t i = 0; i < twice.size(); ++i) EXPECT_EQ(twice[i].text, improved[i].text);
  // Re-running still counts the tags already present.
  EXPECT_EQ(sum2.short_urls, 1);
  EXPECT_EQ(sum2.long_urls, 1);

  UrlTagSummary kept;
  Dataset with_body = improve(d, true, &kept);
  EXPECT_EQ(with_body[0].text, "TAGPOS TAGURLS go http://t.ly/ab now");
}

TEST(EncodeHelpers, LabeledRequiresLabels) {
  Vocab v = build_vocab({"aa bb cc"}, 32);
  Dataset d;
  d.push_back({1, "aa bb", 1});
  d.push_back({2, "cc", std::nullopt});
  EXPECT_THROW(encode_labeled(d, v, 8), data_error);
  d[1].label = 0;
  auto seqs = encode_labeled(d, v, 8);
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs[0].label, 1);
  EXPECT_EQ(seqs[0].seq.ids[0], Vocab::kCls);
  auto unlab = encode_unlabeled(d, v, 8);
  EXPECT_EQ(unlab.size(), 2u);
}

TEST(SplitDataset, ContiguousPartsAndValidation) {
  Dataset d;
  for (int i = 0; i < 10; ++i) d.push_back({i + 1, "t" + std::to_string(i), 0});
  auto parts = split_dataset(d, {0.8, 0.1, 0.1});
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].size(), 8u);
  EXPECT_EQ(parts[1].size(), 1u);
  EXPECT_EQ(parts[2].size(), 1u);
  EXPECT_EQ(parts[0][0].id, 1);
  EXPECT_EQ(parts[2][0].id, 10);  // last part takes the remainder
  EXPECT_THROW(split_dataset(d, {0.9, 0.2}), config_error);
  EXPECT_THROW(split_dataset(d, {-0.1}), config_error);
}

TEST(RunConfig_, DefaultsAndNestedOverrides) {
  RunConfig def = RunConfig::from_json(nlohmann::json::object());
  EXPECT_EQ(def.seed, 0u);
  EXPECT_EQ(def.run_dir, "run");
  EXPECT_EQ(def.model.hidden, 128);
  EXPECT_EQ(def.train.steps, 200);
  EXPECT_EQ(def.ig.steps, 64);

  nlohmann::json j = {
      {"seed", 42},
      {"run_dir", "out"},
      {"keep_url_body", true},
      {"model", {{"hidden", 32}, {"heads", 2}}},
      {"train",
       {{"steps", 10},
        {"lds_weight", 2.0},
        {"adv", {{"method", "vat"}, {"epsilon", 2.0}}}}},
      {"ig", {{"steps", 128}, {"baseline", "keep_position"}}},
  };
  RunConfig rc = RunConfig::from_json(j);
  EXPECT_EQ(rc.seed, 42u);
  EXPECT_EQ(rc.run_dir, "out");
  EXPECT_TRUE(rc.keep_url_body);
  EXPECT_EQ(rc.model.hidden, 32);
  EXPECT_EQ(rc.model.layers, 4);  // untouched default
  EXPECT_EQ(rc.train.steps, 10);
  EXPECT_EQ(rc.train.adv.method, AdvMethod::vat);
  EXPECT_DOUBLE_EQ(rc.train.adv.epsilon, 2.0);
  EXPECT_DOUBLE_EQ(rc.train.lds_weight, 2.0);
  EXPECT_EQ(rc.ig.steps, 128);
  EXPECT_EQ(rc.ig.baseline, IGBaseline::zero_token_keep_position);
}

TEST(RunConfig_, RejectsBadFieldsAndFiles) {
  EXPECT_THROW(RunConfig::from_json({{"train", {{"adv", {{"method", "fgsm"}}}}}}),
               config_error);
  EXPECT_THROW(RunConfig::from_json({{"ig", {{"baseline", "mid"}}}}), config_error);
  EXPECT_THROW(RunConfig::from_json({{"seed", "not a number"}}), config_error);

  const std::string path = tmp_path("rc.json");
  write_file(path, "{ broken");
  EXPECT_THROW(RunConfig::from_file(path), config_error);
  EXPECT_THROW(RunConfig::from_file(tmp_path("rc_missing.json")), config_error);
  write_file(path, "{\"seed\": 9}");
  EXPECT_EQ(RunConfig::from_file(path).seed, 9u);
  std::remove(path.c_str());
}

TEST(WriteTextFile, WritesVerbatim) {
  const std::string path = tmp_path("wt.txt");
  write_text_file(path, "exact\nbytes");
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "exact\nbytes");
  std::remove(path.c_str());
}
