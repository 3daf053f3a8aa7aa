#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vatspam/data.hpp"
#include "vatspam/error.hpp"
#include "vatspam/interpret.hpp"
#include "vatspam/model.hpp"
#include "vatspam/tokenize.hpp"
#include "vatspam/train.hpp"

namespace vatspam {

struct TagSummary {
  long long positive = 0;
  long long neutral = 0;
  long long negative = 0;
};

// Stage 1 -> stage 2 handoff: prefix each text with the sentiment tag decided
// by thresholding the sentiment model's positive-class probability. Labels
// pass through untouched.
inline Dataset stage1_tag(const Dataset& data, const TransformerClassifier& sentiment_model,
                          const Vocab& vocab, TagSummary* summary = nullptr) {
  Dataset out;
  out.reserve(data.size());
  TagSummary sum;
  for (const auto& ex : data) {
    const double x = sentiment_model.predict_proba(ex.text, vocab)[1];
    const Sentiment s = sentiment_class(x);
    switch (s) {
      case Sentiment::positive: ++sum.positive; break;
      case Sentiment::neutral: ++sum.neutral; break;
      case Sentiment::negative: ++sum.negative; break;
    }
    Example tagged = ex;
    tagged.text = inject_sentiment_tag(ex.text, s);
    out.push_back(std::move(tagged));
  }
  if (summary) *summary = sum;
  return out;
}

struct UrlTagSummary {
  long long short_urls = 0;  // TAGURLS
  long long long_urls = 0;   // TAGURLL
};

// URL-tag self-improvement pass over an already sentiment-tagged dataset.
inline Dataset improve(const Dataset& data, bool keep_url_body = false,
                       UrlTagSummary* summary = nullptr) {
  Dataset out;
  out.reserve(data.size());
  UrlTagSummary sum;
  for (const auto& ex : data) {
    Example imp = ex;
    imp.text = inject_url_tags(ex.text, keep_url_body);
    for (const auto& tok : tokenize(imp.text)) {
      if (tok == "TAGURLS") ++sum.short_urls;
      if (tok == "TAGURLL") ++sum.long_urls;
    }
    out.push_back(std::move(imp));
  }
  if (summary) *summary = sum;
  return out;
}

inline std::vector<LabeledSeq> encode_labeled(const Dataset& data, const Vocab& vocab,
                                              int max_len) {
  std::vector<LabeledSeq> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    if (!ex.label)
      throw data_error("encode_labeled: example " + std::to_string(ex.id) + " has no label");
    out.push_back({encode(tokenize(ex.text), vocab, max_len), *ex.label});
  }
  return out;
}

inline std::vector<TokenSeq> encode_unlabeled(const Dataset& data, const Vocab& vocab,
                                              int max_len) {
  std::vector<TokenSeq> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(encode(tokenize(ex.text), vocab, max_len));
  return out;
}

inline std::vector<std::string> texts_of(const Dataset& data) {
  std::vector<std::string> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(ex.text);
  return out;
}

// Contiguous head/middle/tail split; fractions must sum to <= 1.
inline std::vector<Dataset> split_dataset(const Dataset& data,
                                          const std::vector<double>& fracs) {
  double total = 0.0;
  for (double f : fracs) {
    if (f < 0.0) throw config_error("split: negative fraction");
    total += f;
  }
  if (total > 1.0 + 1e-9) throw config_error("split: fractions exceed 1");
  std::vector<Dataset> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i < fracs.size(); ++i) {
    std::size_t count = i + 1 == fracs.size()
                            ? data.size() - start
                            : static_cast<std::size_t>(fracs[i] * static_cast<double>(data.size()));
    if (start + count > data.size()) count = data.size() - start;
    parts.emplace_back(data.begin() + static_cast<std::ptrdiff_t>(start),
                       data.begin() + static_cast<std::ptrdiff_t>(start + count));
    start += count;
  }
  return parts;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << content;
}

// ---- run configuration (JSON file + overrides) ----

namespace detail {
template <class T>
T jget(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config field '") + key + "': " + e.what());
  }
}
}  // namespace detail

struct RunConfig {
  std::uint64_t seed = 0;
  std::string run_dir = "run";
  ModelConfig model;
  TrainConfig train;
  IGConfig ig;
  bool keep_url_body = false;

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig rc;
    rc.seed = detail::jget<std::uint64_t>(j, "seed", rc.seed);
    rc.run_dir = detail::jget<std::string>(j, "run_dir", rc.run_dir);
    rc.keep_url_body = detail::jget<bool>(j, "keep_url_body", rc.keep_url_body);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      auto& c = rc.model;
      c.layers = detail::jget(m, "layers", c.layers);
      c.heads = detail::jget(m, "heads", c.heads);
      c.hidden = detail::jget(m, "hidden", c.hidden);
      c.ff_dim = detail::jget(m, "ff_dim", c.ff_dim);
      c.max_len = detail::jget(m, "max_len", c.max_len);
      c.vocab_size = detail::jget(m, "vocab_size", c.vocab_size);
      c.dropout = detail::jget(m, "dropout", c.dropout);
      c.num_classes = detail::jget(m, "num_classes", c.num_classes);
      c.head_layers = detail::jget(m, "head_layers", c.head_layers);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto& c = rc.train;
      c.batch_size = detail::jget(t, "batch_size", c.batch_size);
      c.learning_rate = detail::jget(t, "learning_rate", c.learning_rate);
      c.steps = detail::jget(t, "steps", c.steps);
      c.beta1 = detail::jget(t, "beta1", c.beta1);
      c.beta2 = detail::jget(t, "beta2", c.beta2);
      c.adam_eps = detail::jget(t, "adam_eps", c.adam_eps);
      c.lds_weight = detail::jget(t, "lds_weight", c.lds_weight);
      c.eval_every = detail::jget(t, "eval_every", c.eval_every);
      if (t.contains("adv")) {
        const auto& a = t.at("adv");
        auto& ac = c.adv;
        ac.method = adv_method_from(detail::jget<std::string>(a, "method", "none"));
        ac.epsilon = detail::jget(a, "epsilon", ac.epsilon);
        ac.pgd_steps = detail::jget(a, "pgd_steps", ac.pgd_steps);
        ac.pgd_step_size = detail::jget(a, "pgd_step_size", ac.pgd_step_size);
        ac.vat_xi = detail::jget(a, "vat_xi", ac.vat_xi);
        ac.vat_power_iters = detail::jget(a, "vat_power_iters", ac.vat_power_iters);
      }
    }
    if (j.contains("ig")) {
      const auto& g = j.at("ig");
      rc.ig.steps = detail::jget(g, "steps", rc.ig.steps);
      rc.ig.target_class = detail::jget(g, "target_class", rc.ig.target_class);
      const std::string b = detail::jget<std::string>(g, "baseline", "zero");
      if (b == "zero")
        rc.ig.baseline = IGBaseline::zero_embedding;
      else if (b == "keep_position")
        rc.ig.baseline = IGBaseline::zero_token_keep_position;
      else
        throw config_error("ig.baseline must be zero|keep_position");
    }
    return rc;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("config file not readable: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("config parse: ") + e.what());
    }
    return from_json(j);
  }
};

}  // namespace vatspam
