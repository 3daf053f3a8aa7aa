#include "vatspam/tokenize.hpp"

#include <cstdio>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "vatspam/error.hpp"
#include "vatspam/model.hpp"

using namespace vatspam;

namespace {

std::string tmp_path(const char* name) {
  return std::string(::testing::TempDir()) + name;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("Hello, World!"),
            (std::vector<std::string>{"hello", ",", "world", "!"}));
}

TEST(Tokenize, KeepsAlnumRunsTogether) {
  EXPECT_EQ(tokenize("win $500 b4 9pm"),
            (std::vector<std::string>{"win", "$", "500", "b4", "9pm"}));
}

TEST(Tokenize, UrlsSurviveAsSingleTokens) {
  const auto toks = tokenize("go to http://x.co/Ab12 now");
  ASSERT_EQ(toks.size(), 4u);
  EXPECT_EQ(toks[2], "http://x.co/ab12");  // lowercased but unsplit
}

TEST(Tokenize, TagTokensStayUppercase) {
  EXPECT_EQ(tokenize("TAGPOS free TAGURLS"),
            (std::vector<std::string>{"TAGPOS", "free", "TAGURLS"}));
}

TEST(Tokenize, EmptyAndWhitespaceOnly) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("  \t\n ").empty());
}

TEST(SentimentClass, BoundariesAreInclusiveForNeutral) {
  EXPECT_EQ(sentiment_class(0.0), Sentiment::negative);
  EXPECT_EQ(sentiment_class(0.29999), Sentiment::negative);
  EXPECT_EQ(sentiment_class(0.3), Sentiment::neutral);
  EXPECT_EQ(sentiment_class(0.5), Sentiment::neutral);
  EXPECT_EQ(sentiment_class(0.7), Sentiment::neutral);
  EXPECT_EQ(sentiment_class(0.70001), Sentiment::positive);
  EXPECT_EQ(sentiment_class(1.0), Sentiment::positive);
}

TEST(SentimentClass, RejectsOutOfRange) {
  EXPECT_THROW(sentiment_class(-0.01), domain_error);
  EXPECT_THROW(sentiment_class(1.01), domain_error);
  EXPECT_THROW(sentiment_class(std::nan("")), domain_error);
}

TEST(SentimentTag, NamesMatchClasses) {
  EXPECT_EQ(sentiment_tag(Sentiment::positive), "TAGPOS");
  EXPECT_EQ(sentiment_tag(Sentiment::neutral), "TAGNEU");
  EXPECT_EQ(sentiment_tag(Sentiment::negative), "TAGNEG");
  EXPECT_EQ(inject_sentiment_tag("buy now", Sentiment::positive), "TAGPOS buy now");
}

TEST(Vocab, SpecialsAndTagsHaveFixedIds) {
  Vocab v = build_vocab({"aaa bbb aaa"}, 32);
  EXPECT_EQ(v.id_of("[PAD]"), Vocab::kPad);
  EXPECT_EQ(v.id_of("[UNK]"), Vocab::kUnk);
  EXPECT_EQ(v.id_of("[CLS]"), Vocab::kCls);
  EXPECT_EQ(v.id_of("[SEP]"), Vocab::kSep);
  // Tag tokens always occupy ids 4..8 regardless of corpus.
  EXPECT_EQ(v.id_of("TAGPOS"), 4);
  EXPECT_EQ(v.id_of("TAGNEU"), 5);
  EXPECT_EQ(v.id_of("TAGNEG"), 6);
  EXPECT_EQ(v.id_of("TAGURLS"), 7);
  EXPECT_EQ(v.id_of("TAGURLL"), 8);
}

TEST(Vocab, FrequencyRankThenLexicographic) {
  Vocab v = build_vocab({"bb aa bb cc aa bb"}, 32);
  EXPECT_EQ(v.id_of("bb"), 9);  // freq 3
  EXPECT_EQ(v.id_of("aa"), 10);
  EXPECT_EQ(v.id_of("cc"), 11);
  EXPECT_EQ(v.size(), 12);
}

TEST(Vocab, MaxSizeAndMinFreqLimitEntries) {
  Vocab v = build_vocab({"aa aa bb bb cc"}, 11, 2);
  EXPECT_TRUE(v.contains("aa"));
  EXPECT_TRUE(v.contains("bb"));
  EXPECT_FALSE(v.contains("cc"));  // below min_freq
  Vocab w = build_vocab({"aa aa bb bb cc"}, 10, 1);
  EXPECT_EQ(w.size(), 10);  // truncated at max_size
  EXPECT_THROW(build_vocab({"aa"}, 9), config_error);
  EXPECT_THROW(build_vocab({}, 32), data_error);
}

TEST(Vocab, UnknownTokensMapToUnk) {
  Vocab v = build_vocab({"aa bb"}, 32);
  EXPECT_EQ(v.id_of("zz"), Vocab::kUnk);
  EXPECT_THROW(v.token_of(v.size()), index_error);
}

TEST(Vocab, SaveLoadRoundTrip) {
  Vocab v = build_vocab({"spam ham free TAGPOS click"}, 32);
  const std::string path = tmp_path("vocab_rt.txt");
  v.save(path);
  Vocab w = Vocab::load(path);
  ASSERT_EQ(w.size(), v.size());
  for (int i = 0; i < v.size(); ++i) EXPECT_EQ(w.token_of(i), v.token_of(i));
  std::remove(path.c_str());
}

TEST(Encode, PadsAndMasksToMaxLen) {
  Vocab v = build_vocab({"aa bb"}, 32);
  TokenSeq s = encode({"aa", "bb"}, v, 6);
  EXPECT_EQ(s.ids, (std::vector<int>{Vocab::kCls, 9, 10, Vocab::kSep, 0, 0}));
  EXPECT_EQ(s.mask, (std::vector<int>{1, 1, 1, 1, 0, 0}));
  EXPECT_EQ(s.real_len(), 4);
}

TEST(Encode, TruncatesBodyToFit) {
  Vocab v = build_vocab({"aa bb cc"}, 32);
  TokenSeq s = encode({"aa", "bb", "cc"}, v, 4);
  EXPECT_EQ(s.tokens, (std::vector<std::string>{"aa", "bb"}));
  EXPECT_EQ(s.ids.back(), Vocab::kSep);
  EXPECT_THROW(encode({"aa"}, v, 2), config_error);
}

TEST(Encode, DecodeInvertsKnownTokensAndDropsDelimiters) {
  Vocab v = build_vocab({"aa bb"}, 32);
  TokenSeq s = encode({"aa", "zz", "bb"}, v, 8);
  EXPECT_EQ(decode(s, v), (std::vector<std::string>{"aa", "[UNK]", "bb"}));
}

TEST(UrlWord, SchemePrefixCaseInsensitive) {
  EXPECT_TRUE(is_url_word("http://a.b"));
  EXPECT_TRUE(is_url_word("HTTPS://A.B"));
  EXPECT_FALSE(is_url_word("ftp://a.b"));
  EXPECT_FALSE(is_url_word("www.a.b"));
}

TEST(UrlTags, ShortAndLongSplitAtStrict24) {
  // 23 chars -> short, 24 chars -> long.
  const std::string u23 = "http://a.co/345678901234567";  // actually count below
  ASSERT_EQ(std::string("http://x.co/0123456").size(), 19u);
  EXPECT_EQ(inject_url_tags("go http://x.co/0123456 now"), "TAGURLS go now");
  std::string exactly23 = "http://" + std::string(16, 'a');
  std::string exactly24 = "http://" + std::string(17, 'a');
  ASSERT_EQ(exactly23.size(), 23u);
  EXPECT_EQ(inject_url_tags("a " + exactly23), "TAGURLS a");
  EXPECT_EQ(inject_url_tags("a " + exactly24), "TAGURLL a");
}

TEST(UrlTags, InsertAfterLeadingSentimentTag) {
  EXPECT_EQ(inject_url_tags("TAGNEG bad http://x.co/abcd stuff"),
            "TAGNEG TAGURLS bad stuff");
  // Sentiment tag not in leading position is ordinary body text.
  EXPECT_EQ(inject_url_tags("bad TAGNEG http://x.co/abcd"), "TAGURLS bad TAGNEG");
}

TEST(UrlTags, MultipleUrlsKeepOrder) {
  std::string longu = "https://promo-site.example/aaaaaaaaaa";
  EXPECT_EQ(inject_url_tags("x http://t.ly/abc y " + longu),
            "TAGURLS TAGURLL x y");
}

TEST(UrlTags, KeepUrlBodyRetainsUrls) {
  EXPECT_EQ(inject_url_tags("go http://t.ly/abc", true),
            "TAGURLS go http://t.ly/abc");
}

TEST(UrlTags, IdempotentOnceTagged) {
  const std::string once = inject_url_tags("TAGPOS hi http://t.ly/ab and http://t.ly/cd");
  EXPECT_EQ(inject_url_tags(once), once);
  // Also a no-op when a URL tag is present even if a raw URL remains.
  const std::string mixed = "TAGURLS see http://t.ly/zz";
  EXPECT_EQ(inject_url_tags(mixed), mixed);
}

TEST(UrlTags, NoUrlsMeansUnchanged) {
  EXPECT_EQ(inject_url_tags("TAGPOS plain words only"), "TAGPOS plain words only");
  EXPECT_EQ(inject_url_tags(""), "");
}
