#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "vatspam/error.hpp"

namespace vatspam {

enum class Sentiment { negative, neutral, positive };

inline const char* sentiment_name(Sentiment s) {
  switch (s) {
    case Sentiment::negative: return "negative";
    case Sentiment::neutral: return "neutral";
    case Sentiment::positive: return "positive";
  }
  return "?";
}

// Tag vocabulary. TAGPOS/TAGNEU/TAGNEG mark stage-1 sentiment; TAGURLS/TAGURLL
// stand in for short (<24 chars) and long URLs.
inline const std::array<std::string, 5>& tag_tokens() {
  static const std::array<std::string, 5> tags = {"TAGPOS", "TAGNEU", "TAGNEG", "TAGURLS",
                                                  "TAGURLL"};
  return tags;
}

inline const std::string& sentiment_tag(Sentiment s) {
  return tag_tokens()[s == Sentiment::positive ? 0 : s == Sentiment::neutral ? 1 : 2];
}

inline bool is_tag_token(const std::string& w) {
  for (const auto& t : tag_tokens())
    if (w == t) return true;
  return false;
}

inline bool is_sentiment_tag(const std::string& w) {
  return w == "TAGPOS" || w == "TAGNEU" || w == "TAGNEG";
}

inline bool is_url_word(const std::string& w) {
  auto starts_with_ci = [&](const char* prefix) {
    std::size_t n = std::char_traits<char>::length(prefix);
    if (w.size() < n) return false;
    for (std::size_t i = 0; i < n; ++i)
      if (std::tolower(static_cast<unsigned char>(w[i])) != prefix[i]) return false;
    return true;
  };
  return starts_with_ci("http://") || starts_with_ci("https://");
}

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kNumSpecials = 4;  // tags follow at ids 4..8

  static const std::array<std::string, 4>& special_tokens() {
    static const std::array<std::string, 4> sp = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    return sp;
  }

  // Builds from a complete id-ordered token list (line format of save()).
  static Vocab from_tokens(std::vector<std::string> tokens) {
    Vocab v;
    v.id_to_token_ = std::move(tokens);
    for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
      auto [it, fresh] = v.token_to_id_.emplace(v.id_to_token_[i], static_cast<int>(i));
      if (!fresh) throw data_error("vocab: duplicate token '" + v.id_to_token_[i] + "'");
    }
    for (int i = 0; i < kNumSpecials; ++i)
      if (v.id_to_token_.size() <= static_cast<std::size_t>(i) ||
          v.id_to_token_[i] != special_tokens()[i])
        throw data_error("vocab: special token table corrupt");
    for (std::size_t i = 0; i < tag_tokens().size(); ++i)
      if (v.id_to_token_.size() <= kNumSpecials + i ||
          v.id_to_token_[kNumSpecials + i] != tag_tokens()[i])
        throw data_error("vocab: tag token table corrupt");
    return v;
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }

  bool contains(const std::string& tok) const { return token_to_id_.count(tok) > 0; }

  // OOV maps to UNK.
  int id_of(const std::string& tok) const {
    auto it = token_to_id_.find(tok);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  const std::string& token_of(int id) const {
    if (id < 0 || id >= size())
      throw index_error("vocab: id " + std::to_string(id) + " outside [0," +
                        std::to_string(size()) + ")");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("vocab: cannot write " + path);
    for (const auto& t : id_to_token_) out << t << '\n';
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("vocab: cannot read " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    if (tokens.empty()) throw data_error("vocab: empty file " + path);
    return from_tokens(std::move(tokens));
  }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Whitespace split, then per word: known tag tokens pass through verbatim,
// URLs (http:// or https:// prefix, any case) become one lowercased token,
// everything else is lowercased and split into alnum runs with punctuation
// as single-char tokens. Bytes >= 0x80 stay inside word runs so UTF-8
// sequences survive intact.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string word = text.substr(i, j - i);
    i = j;
    if (is_tag_token(word)) {
      out.push_back(word);
      continue;
    }
    for (auto& c : word)
      if (static_cast<unsigned char>(c) < 0x80)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (is_url_word(word)) {
      out.push_back(word);
      continue;
    }
    std::size_t k = 0;
    while (k < word.size()) {
      const unsigned char c = static_cast<unsigned char>(word[k]);
      if (std::isalnum(c) || c >= 0x80) {
        std::size_t r = k;
        while (r < word.size()) {
          const unsigned char rc = static_cast<unsigned char>(word[r]);
          if (!std::isalnum(rc) && rc < 0x80) break;
          ++r;
        }
        out.push_back(word.substr(k, r - k));
        k = r;
      } else {
        out.push_back(word.substr(k, 1));
        ++k;
      }
    }
  }
  return out;
}

// Specials and tags are always present; remaining slots go to the most
// frequent corpus tokens (frequency desc, then lexicographic).
inline Vocab build_vocab(const std::vector<std::string>& corpus, int max_size, int min_freq = 1) {
  if (max_size <= static_cast<int>(Vocab::kNumSpecials + tag_tokens().size()))
    throw config_error("build_vocab: max_size must exceed " +
                       std::to_string(Vocab::kNumSpecials + tag_tokens().size()));
  if (corpus.empty()) throw data_error("build_vocab: empty corpus");
  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& text : corpus)
    for (auto& tok : tokenize(text))
      if (!is_tag_token(tok)) ++freq[tok];
  std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens(Vocab::special_tokens().begin(), Vocab::special_tokens().end());
  tokens.insert(tokens.end(), tag_tokens().begin(), tag_tokens().end());
  for (const auto& [tok, count] : ranked) {
    if (static_cast<int>(tokens.size()) >= max_size) break;
    if (count < min_freq) break;  // ranked is frequency-sorted
    tokens.push_back(tok);
  }
  return Vocab::from_tokens(std::move(tokens));
}

struct TokenSeq {
  std::vector<int> ids;             // length max_len, [CLS] body... [SEP] [PAD]...
  std::vector<int> mask;            // 1 for real tokens (incl CLS/SEP), 0 for PAD
  std::vector<std::string> tokens;  // body tokens actually encoded (post-truncation)

  int max_len() const { return static_cast<int>(ids.size()); }
  // Count of real positions: CLS + body + SEP.
  int real_len() const {
    int n = 0;
    for (int m : mask) n += m;
    return n;
  }
};

inline TokenSeq encode(const std::vector<std::string>& tokens, const Vocab& vocab, int max_len) {
  if (max_len < 3) throw config_error("encode: max_len must be >= 3");
  TokenSeq seq;
  const int body = std::min<int>(static_cast<int>(tokens.size()), max_len - 2);
  seq.tokens.assign(tokens.begin(), tokens.begin() + body);
  seq.ids.reserve(max_len);
  seq.ids.push_back(Vocab::kCls);
  for (int i = 0; i < body; ++i) seq.ids.push_back(vocab.id_of(tokens[static_cast<std::size_t>(i)]));
  seq.ids.push_back(Vocab::kSep);
  seq.mask.assign(seq.ids.size(), 1);
  seq.ids.resize(static_cast<std::size_t>(max_len), Vocab::kPad);
  seq.mask.resize(static_cast<std::size_t>(max_len), 0);
  return seq;
}

// Inverse of encode over in-vocab tokens: body token strings between CLS and SEP.
inline std::vector<std::string> decode(const TokenSeq& seq, const Vocab& vocab) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (!seq.mask[i]) break;
    if (seq.ids[i] == Vocab::kCls || seq.ids[i] == Vocab::kSep) continue;
    out.push_back(vocab.token_of(seq.ids[i]));
  }
  return out;
}

inline std::string inject_sentiment_tag(const std::string& text, Sentiment s) {
  return sentiment_tag(s) + " " + text;
}

// Replaces each URL with nothing (or keeps it when keep_url_body) and inserts
// one TAGURLS/TAGURLL per URL right after the leading sentiment tag, or at the
// front if there is none. Strict length rule: chars < 24 including scheme.
// No-op when the text already carries URL tags, which makes it idempotent.
inline std::string inject_url_tags(const std::string& text, bool keep_url_body = false) {
  std::vector<std::string> words;
  {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i >= text.size()) break;
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      words.push_back(text.substr(i, j - i));
      i = j;
    }
  }
  for (const auto& w : words)
    if (w == "TAGURLS" || w == "TAGURLL") return text;

  std::vector<std::string> url_tags;
  std::vector<std::string> body;
  std::string sent_tag;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i == 0 && is_sentiment_tag(words[i])) {
      sent_tag = words[i];
      continue;
    }
    if (is_url_word(words[i])) {
      url_tags.push_back(words[i].size() < 24 ? "TAGURLS" : "TAGURLL");
      if (keep_url_body) body.push_back(words[i]);
      continue;
    }
    body.push_back(words[i]);
  }
  if (url_tags.empty()) return text;

  std::vector<std::string> out;
  if (!sent_tag.empty()) out.push_back(sent_tag);
  out.insert(out.end(), url_tags.begin(), url_tags.end());
  out.insert(out.end(), body.begin(), body.end());
  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) joined += ' ';
    joined += out[i];
  }
  return joined;
}

}  // namespace vatspam
