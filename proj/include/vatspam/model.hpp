#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vatspam/error.hpp"
#include "vatspam/rng.hpp"
#include "vatspam/tensor.hpp"
#include "vatspam/tokenize.hpp"

namespace vatspam {

struct ModelConfig {
  int layers = 4;
  int heads = 4;
  int hidden = 128;
  int ff_dim = 256;
  int max_len = 64;
  int vocab_size = 8192;
  double dropout = 0.1;
  int num_classes = 2;
  int head_layers = 2;  // classification head depth, 1 or 2
  std::uint64_t seed = 0;

  void validate() const {
    if (layers < 1 || heads < 1 || hidden < 1 || ff_dim < 1)
      throw config_error("model: layers/heads/hidden/ff_dim must be positive");
    if (hidden % heads != 0) throw config_error("model: hidden must be divisible by heads");
    if (max_len < 3) throw config_error("model: max_len must be >= 3");
    if (vocab_size < 10) throw config_error("model: vocab_size too small for specials+tags");
    if (dropout < 0.0 || dropout >= 1.0) throw config_error("model: dropout must be in [0,1)");
    if (num_classes < 2) throw config_error("model: num_classes must be >= 2");
    if (head_layers != 1 && head_layers != 2)
      throw config_error("model: head_layers must be 1 or 2");
  }

  int head_dim() const { return hidden / heads; }

  // Trains in minutes on CPU.
  static ModelConfig desk() { return ModelConfig{}; }

  // Keeps the 144-head grid layout of the full-size model without its width.
  static ModelConfig full_grid() {
    ModelConfig c;
    c.layers = 12;
    c.heads = 12;
    c.hidden = 96;
    c.ff_dim = 384;
    return c;
  }
};

// X < 0.3 negative, X > 0.7 positive, neutral between (boundaries inclusive).
inline Sentiment sentiment_class(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw domain_error("sentiment_class: X outside [0,1]");
  if (x < 0.3) return Sentiment::negative;
  if (x > 0.7) return Sentiment::positive;
  return Sentiment::neutral;
}

// Per-head attention probabilities for one input. mats[l][h] is an n x n
// row-major matrix; labels align with its rows/columns.
struct AttentionGrid {
  int layers = 0;
  int heads = 0;
  int n = 0;
  std::vector<std::string> labels;
  std::vector<std::vector<std::vector<double>>> mats;

  const std::vector<double>& at(int layer, int head) const {
    if (layer < 0 || layer >= layers || head < 0 || head >= heads)
      throw index_error("attention grid: head " + std::to_string(layer) + "-" +
                        std::to_string(head) + " out of range");
    return mats[static_cast<std::size_t>(layer)][static_cast<std::size_t>(head)];
  }
};

class TransformerClassifier {
 public:
  explicit TransformerClassifier(ModelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    const int d = cfg_.hidden, ff = cfg_.ff_dim, c = cfg_.num_classes;
    auto w = [&](const std::string& name, int rows, int cols) {
      add_param(name, Tensor::from({rows, cols}, rng.gaussian_vec(
                                                     static_cast<std::size_t>(rows) * cols, 0.02)));
    };
    auto zeros = [&](const std::string& name, int n) { add_param(name, Tensor::zeros({n})); };
    auto ones = [&](const std::string& name, int n) {
      add_param(name, Tensor::from({n}, std::vector<double>(static_cast<std::size_t>(n), 1.0)));
    };
    w("tok_emb", cfg_.vocab_size, d);
    w("pos_emb", cfg_.max_len, d);
    ones("emb_ln_g", d);
    zeros("emb_ln_b", d);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      w(p + "wq", d, d);
      zeros(p + "bq", d);
      w(p + "wk", d, d);
      zeros(p + "bk", d);
      w(p + "wv", d, d);
      zeros(p + "bv", d);
      w(p + "wo", d, d);
      zeros(p + "bo", d);
      ones(p + "ln1_g", d);
      zeros(p + "ln1_b", d);
      w(p + "ff_w1", d, ff);
      zeros(p + "ff_b1", ff);
      w(p + "ff_w2", ff, d);
      zeros(p + "ff_b2", d);
      ones(p + "ln2_g", d);
      zeros(p + "ln2_b", d);
    }
    w("pooler_w", d, d);
    zeros("pooler_b", d);
    if (cfg_.head_layers == 2) {
      w("head_w1", d, d);
      zeros("head_b1", d);
      w("head_w2", d, c);
      zeros("head_b2", c);
    } else {
      w("head_w1", d, c);
      zeros("head_b1", c);
    }
  }

  const ModelConfig& config() const { return cfg_; }

  std::vector<std::pair<std::string, Tensor>>& params() { return params_; }
  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }

  const Tensor& param(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw index_error("model: no parameter '" + name + "'");
    return params_[it->second].second;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  // Token + position embeddings, layer norm, then dropout in train mode.
  // ids may be any length up to max_len (callers crop PAD off before predict).
  Tensor embed(const std::vector<int>& ids, bool train = false,
               std::uint64_t drop_seed = 0) const {
    if (ids.empty()) throw dim_error("embed: empty id list");
    if (static_cast<int>(ids.size()) > cfg_.max_len)
      throw dim_error("embed: sequence longer than max_len");
    const int n = static_cast<int>(ids.size());
    Tensor x = add(embedding_lookup(param("tok_emb"), ids), slice_rows(param("pos_emb"), 0, n));
    x = layer_norm(x, param("emb_ln_g"), param("emb_ln_b"));
    std::uint64_t site = 0;
    return maybe_dropout(x, train, drop_seed, site);
  }

  struct ForwardResult {
    Tensor logits;       // 1 x num_classes
    AttentionGrid grid;  // populated only when collect_attention
  };

  // Encoder stack from embedding-space input; the entry point for
  // perturbations and attribution. Masked key columns get a -1e9 additive
  // bias, which underflows to exactly zero probability after softmax.
  ForwardResult forward_from_embeddings(const Tensor& x_in, const std::vector<int>& mask,
                                        bool collect_attention = false, bool train = false,
                                        std::uint64_t drop_seed = 0) const {
    const int n = x_in.rows(), d = cfg_.hidden;
    if (x_in.cols() != d) throw dim_error("forward: embedding width != hidden");
    if (static_cast<int>(mask.size()) != n) throw dim_error("forward: mask length != seq_len");
    for (double v : x_in.values())
      if (!std::isfinite(v)) throw domain_error("forward: non-finite embedding input");

    bool any_masked = false;
    for (int m : mask) any_masked |= (m == 0);
    Tensor mask_bias;
    if (any_masked) {
      std::vector<double> b(static_cast<std::size_t>(n) * n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (!mask[static_cast<std::size_t>(j)]) b[static_cast<std::size_t>(i) * n + j] = -1e9;
      mask_bias = Tensor::from({n, n}, std::move(b));
    }

    ForwardResult res;
    if (collect_attention) {
      res.grid.layers = cfg_.layers;
      res.grid.heads = cfg_.heads;
      res.grid.n = n;
      res.grid.mats.assign(static_cast<std::size_t>(cfg_.layers),
                           std::vector<std::vector<double>>(static_cast<std::size_t>(cfg_.heads)));
    }

    const int dh = cfg_.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    std::uint64_t site = 1;  // site 0 belongs to embed()
    Tensor x = x_in;
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      Tensor q = add_rowvec(matmul(x, param(p + "wq")), param(p + "bq"));
      Tensor k = add_rowvec(matmul(x, param(p + "wk")), param(p + "bk"));
      Tensor v = add_rowvec(matmul(x, param(p + "wv")), param(p + "bv"));
      std::vector<Tensor> ctx;
      ctx.reserve(static_cast<std::size_t>(cfg_.heads));
      for (int h = 0; h < cfg_.heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, dh);
        Tensor kh = slice_cols(k, h * dh, dh);
        Tensor vh = slice_cols(v, h * dh, dh);
        Tensor scores = scale(matmul_nt(qh, kh), inv_sqrt_dh);
        if (any_masked) scores = add(scores, mask_bias);
        Tensor probs = softmax(scores, 1);
        if (collect_attention)
          res.grid.mats[static_cast<std::size_t>(l)][static_cast<std::size_t>(h)] = probs.values();
        probs = maybe_dropout(probs, train, drop_seed, site);
        ctx.push_back(matmul(probs, vh));
      }
      Tensor attn = add_rowvec(matmul(concat_cols(ctx), param(p + "wo")), param(p + "bo"));
      attn = maybe_dropout(attn, train, drop_seed, site);
      x = layer_norm(add(x, attn), param(p + "ln1_g"), param(p + "ln1_b"));
      Tensor ffn = add_rowvec(
          matmul(gelu(add_rowvec(matmul(x, param(p + "ff_w1")), param(p + "ff_b1"))),
                 param(p + "ff_w2")),
          param(p + "ff_b2"));
      ffn = maybe_dropout(ffn, train, drop_seed, site);
      x = layer_norm(add(x, ffn), param(p + "ln2_g"), param(p + "ln2_b"));
    }

    Tensor cls = slice_rows(x, 0, 1);
    Tensor pooled = tanh(add_rowvec(matmul(cls, param("pooler_w")), param("pooler_b")));
    Tensor logits;
    if (cfg_.head_layers == 2) {
      Tensor hid = tanh(add_rowvec(matmul(pooled, param("head_w1")), param("head_b1")));
      logits = add_rowvec(matmul(hid, param("head_w2")), param("head_b2"));
    } else {
      logits = add_rowvec(matmul(pooled, param("head_w1")), param("head_b1"));
    }
    res.logits = logits;
    return res;
  }

  // Eval-mode class distribution. PAD positions are cropped off up front, so
  // every attention row is over real tokens only.
  std::vector<double> predict_proba(const TokenSeq& seq) const {
    std::vector<int> ids(seq.ids.begin(), seq.ids.begin() + seq.real_len());
    Tensor x = embed(ids);
    Tensor logits = forward_from_embeddings(x, std::vector<int>(ids.size(), 1)).logits;
    return softmax(logits, 1).values();
  }

  std::vector<double> predict_proba(const std::string& text, const Vocab& vocab) const {
    return predict_proba(encode(tokenize(text), vocab, cfg_.max_len));
  }

 private:
  void add_param(const std::string& name, Tensor t) {
    index_.emplace(name, params_.size());
    params_.emplace_back(name, std::move(t));
  }

  Tensor maybe_dropout(const Tensor& x, bool train, std::uint64_t drop_seed,
                       std::uint64_t& site) const {
    const std::uint64_t s = site++;
    if (!train || cfg_.dropout == 0.0) return x;
    return dropout(x, cfg_.dropout, Rng::stream(drop_seed, s));
  }

  ModelConfig cfg_;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace vatspam
