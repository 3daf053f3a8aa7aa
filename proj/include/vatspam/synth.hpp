#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vatspam/data.hpp"
#include "vatspam/rng.hpp"
#include "vatspam/tokenize.hpp"

namespace vatspam {

// Seeded tweet-like corpus with the correlations the real datasets exhibit:
// spam skews positive-sentiment and shortened-link-heavy, ham skews neutral
// and chatty with ordinary long links. Sentiment is spread over large
// lexicons of individually rare words, so a small spam model cannot cheaply
// learn it from the surface, while a dedicated sentiment model (and hence the
// injected tag) can. Every URL and noise token is unique, so with min_freq 2
// both collapse to UNK until URL tags are injected.
namespace synth {

inline const std::array<const char*, 36>& positive_words() {
  static const std::array<const char*, 36> w = {
      "good",   "great",    "nice",  "love",   "happy",  "awesome", "best",     "cool",
      "fun",    "sweet",    "amazing", "glad", "delight", "shine",  "bright",   "cheer",
      "smile",  "laugh",    "joy",   "bliss",  "super",  "lovely",  "brilliant", "charming",
      "proud",  "peace",    "warm",  "hug",    "festive", "grin",   "merry",    "thrill",
      "sunny",  "golden",   "rock",  "yay"};
  return w;
}

inline const std::array<const char*, 36>& negative_words() {
  static const std::array<const char*, 36> w = {
      "bad",    "sad",   "hate",   "awful",  "terrible", "angry",  "worst",  "ugh",
      "broken", "annoying", "gross", "fail", "mad",      "cry",    "sick",   "gloom",
      "dark",   "bitter", "lonely", "hurt",  "pain",     "sour",   "dull",   "tired",
      "bored",  "upset", "dread",  "grim",   "cold",     "harsh",  "rotten", "cruel",
      "weep",   "moan",  "sulk",   "angst"};
  return w;
}

inline const std::array<const char*, 36>& neutral_words() {
  static const std::array<const char*, 36> w = {
      "today",  "meeting", "weather", "coffee", "lunch",  "train",  "office", "monday",
      "report", "update",  "street",  "city",   "phone",  "music",  "game",   "desk",
      "paper",  "window",  "door",    "table",  "chair",  "note",   "plan",   "list",
      "mail",   "week",    "month",   "morning", "evening", "road",  "bus",   "map",
      "file",   "page",    "clock",   "news"};
  return w;
}

inline const std::array<const char*, 12>& promo_words() {
  static const std::array<const char*, 12> w = {"free", "deal", "offer", "click", "win",
                                                "prize", "cash", "bonus", "discount", "buy",
                                                "now", "limited"};
  return w;
}

inline const std::array<const char*, 14>& chat_words() {
  static const std::array<const char*, 14> w = {"home", "friend", "dinner", "school", "movie",
                                                "book", "dog", "cat", "family", "sleep",
                                                "walk", "park", "weekend", "birthday"};
  return w;
}

inline const std::array<const char*, 14>& filler_words() {
  static const std::array<const char*, 14> w = {"the", "a", "to", "and", "of", "in", "it",
                                                "is", "my", "on", "for", "with", "at", "this"};
  return w;
}

namespace detail {

template <std::size_t N>
inline const char* pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(N)))];
}

inline std::string rand_alnum(Rng& rng, int len) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string s;
  for (int i = 0; i < len; ++i) s += alphabet[rng.uniform_int(36)];
  return s;
}

inline std::string rand_url(Rng& rng, bool short_url) {
  if (short_url) {
    static const std::array<const char*, 4> hosts = {"x.co", "t.ly", "ow.ly", "bit.ly"};
    return std::string("http://") + hosts[static_cast<std::size_t>(rng.uniform_int(4))] + "/" +
           rand_alnum(rng, 4 + rng.uniform_int(3));  // 16..19 chars < 24
  }
  static const std::array<const char*, 2> hosts = {"promo-site.example", "my-weblog.example"};
  return std::string("https://") + hosts[static_cast<std::size_t>(rng.uniform_int(2))] + "/" +
         rand_alnum(rng, 10 + rng.uniform_int(5));  // 35+ chars
}

inline std::string rand_noise(Rng& rng) {
  static const char letters[] = "abcdefghijklmnopqrstuvwxyz";
  std::string s;
  const int len = 6 + rng.uniform_int(4);
  for (int i = 0; i < len; ++i) s += letters[rng.uniform_int(26)];
  return s;
}

inline std::string join_shuffled(Rng& rng, std::vector<std::string>& words) {
  rng.shuffle(words);
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text += ' ';
    text += words[i];
  }
  return text;
}

inline Sentiment draw_sentiment(Rng& rng, bool spam) {
  const double u = rng.uniform();
  // Class-conditional skew: spam mostly positive, ham mostly neutral.
  if (spam) return u < 0.52 ? Sentiment::positive : u < 0.91 ? Sentiment::neutral
                                                             : Sentiment::negative;
  return u < 0.28 ? Sentiment::positive : u < 0.82 ? Sentiment::neutral : Sentiment::negative;
}

inline void add_sentiment_words(Rng& rng, Sentiment s, int count, std::vector<std::string>& out) {
  for (int i = 0; i < count; ++i)
    out.push_back(s == Sentiment::positive ? pick(rng, positive_words())
                  : s == Sentiment::negative ? pick(rng, negative_words())
                                             : pick(rng, neutral_words()));
}

inline Example spam_example(Rng& rng, long long id, double spam_frac) {
  const bool spam = rng.uniform() < spam_frac;
  const Sentiment s = draw_sentiment(rng, spam);
  std::vector<std::string> words;
  add_sentiment_words(rng, s, 2 + rng.uniform_int(2), words);
  // Weakly separating topic words: both classes draw from both lists.
  const int topic = 2 + rng.uniform_int(2);
  const double promo_p = spam ? 0.65 : 0.30;
  for (int i = 0; i < topic; ++i)
    words.push_back(rng.uniform() < promo_p ? pick(rng, promo_words()) : pick(rng, chat_words()));
  const int fill = 2 + rng.uniform_int(3);
  for (int i = 0; i < fill; ++i) words.push_back(pick(rng, filler_words()));
  // Both classes link, but spam hides behind shorteners; that type signal is
  // invisible until URL tags split short from long.
  if (rng.uniform() < (spam ? 0.8 : 0.5))
    words.push_back(rand_url(rng, rng.uniform() < (spam ? 0.9 : 0.15)));
  if (rng.uniform() < 0.35) words.push_back(rand_noise(rng));
  Example ex;
  ex.id = id;
  ex.text = join_shuffled(rng, words);
  ex.label = spam ? 1 : 0;
  return ex;
}

}  // namespace detail

// Binary sentiment rows (1 positive, 0 negative), URL- and promo-free.
inline Dataset gen_sentiment(int n, std::uint64_t seed) {
  Rng rng(Rng::stream(seed, 0x5e11));
  Dataset out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool pos = rng.uniform() < 0.5;
    std::vector<std::string> words;
    detail::add_sentiment_words(rng, pos ? Sentiment::positive : Sentiment::negative,
                                3 + rng.uniform_int(3), words);
    const int fill = 2 + rng.uniform_int(3);
    for (int j = 0; j < fill; ++j) words.push_back(detail::pick(rng, filler_words()));
    Example ex;
    ex.id = i + 1;
    ex.text = detail::join_shuffled(rng, words);
    ex.label = pos ? 1 : 0;
    out.push_back(std::move(ex));
  }
  return out;
}

// Spam rows (1 spam, 0 ham).
inline Dataset gen_spam(int n, std::uint64_t seed, double spam_frac = 0.5) {
  Rng rng(Rng::stream(seed, 0x5bad));
  Dataset out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(detail::spam_example(rng, i + 1, spam_frac));
  return out;
}

// Label-free rows from the same distribution as gen_spam.
inline Dataset gen_unlabeled(int n, std::uint64_t seed) {
  Rng rng(Rng::stream(seed, 0x0151));
  Dataset out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Example ex = detail::spam_example(rng, i + 1, 0.5);
    ex.label.reset();
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace synth
}  // namespace vatspam
