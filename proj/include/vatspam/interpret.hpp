#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vatspam/error.hpp"
#include "vatspam/model.hpp"
#include "vatspam/tensor.hpp"
#include "vatspam/tokenize.hpp"

namespace vatspam {

enum class IGBaseline {
  zero_embedding,           // zero out the full embedding-layer output
  zero_token_keep_position  // zero token vectors, keep position + norm
};

struct IGConfig {
  int steps = 64;
  IGBaseline baseline = IGBaseline::zero_embedding;
  int target_class = -1;  // -1 = the model's predicted class

  void validate() const {
    if (steps < 1) throw config_error("ig: steps must be >= 1");
  }
};

struct AttributionRecord {
  std::vector<std::string> tokens;  // [CLS] body... [SEP]
  std::vector<double> scores;      // per-token sums over embedding dims
  std::vector<double> raw;         // n x d integrated gradients, row-major
  int n = 0;
  int d = 0;
  int target = 0;
  double f_x = 0.0;
  double f_baseline = 0.0;
  double completeness_gap = 0.0;  // |sum(raw) - (f_x - f_baseline)|
};

namespace detail {

inline std::vector<int> crop_ids(const TokenSeq& seq) {
  return std::vector<int>(seq.ids.begin(), seq.ids.begin() + seq.real_len());
}

inline std::vector<std::string> seq_labels(const TokenSeq& seq) {
  std::vector<std::string> labels;
  labels.reserve(seq.tokens.size() + 2);
  labels.push_back("[CLS]");
  labels.insert(labels.end(), seq.tokens.begin(), seq.tokens.end());
  labels.push_back("[SEP]");
  return labels;
}

// Probability of `target` as a function of an embedding-space leaf.
inline Tensor class_prob(const TransformerClassifier& model, const Tensor& x,
                         const std::vector<int>& mask, int target) {
  Tensor probs = softmax(model.forward_from_embeddings(x, mask).logits, 1);
  return slice_cols(probs, target, 1);
}

}  // namespace detail

struct PathIntegral {
  std::vector<double> raw;  // elementwise (x - x0) * mean path gradient
  double f_x = 0.0;
  double f_baseline = 0.0;
  double gap = 0.0;  // |sum(raw) - (f_x - f_baseline)|
};

// Midpoint-rule path integral of grad F along the segment x0 -> x, for any
// scalar-graph-valued F. Exact (up to roundoff) when F is linear.
template <class F>
PathIntegral ig_path_integral(F&& f, const Shape& shape, const std::vector<double>& x,
                              const std::vector<double>& x0, int steps) {
  if (steps < 1) throw config_error("ig: steps must be >= 1");
  if (x.size() != x0.size() || x.size() != shape_numel(shape))
    throw dim_error("ig: input/baseline/shape sizes disagree");
  std::vector<double> grad_sum(x.size(), 0.0);
  for (int k = 1; k <= steps; ++k) {
    const double a = (static_cast<double>(k) - 0.5) / static_cast<double>(steps);
    std::vector<double> point(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x0[i] + a * (x[i] - x0[i]);
    Tensor xt = Tensor::from(shape, std::move(point));
    backward(f(xt));
    const auto& g = xt.grad();
    for (std::size_t i = 0; i < x.size(); ++i) grad_sum[i] += g[i];
  }
  PathIntegral out;
  out.raw.resize(x.size());
  const double inv_steps = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.raw[i] = (x[i] - x0[i]) * grad_sum[i] * inv_steps;
  out.f_x = f(Tensor::from(shape, x)).item();
  out.f_baseline = f(Tensor::from(shape, x0)).item();
  double total = 0.0;
  for (double v : out.raw) total += v;
  out.gap = std::abs(total - (out.f_x - out.f_baseline));
  return out;
}

// Midpoint-rule integrated gradients along the straight path from the
// baseline to the eval-mode embedding of `seq`:
//   IG_ij = (x_ij - x'_ij) * (1/steps) * sum_k dF/dx_ij at x' + ((k-0.5)/steps)(x - x')
// F is the probability of the target class. The completeness gap is recorded,
// never hidden.
inline AttributionRecord integrated_gradients(const TransformerClassifier& model,
                                              const TokenSeq& seq, const IGConfig& cfg) {
  cfg.validate();
  const std::vector<int> ids = detail::crop_ids(seq);
  const std::vector<int> mask(ids.size(), 1);
  const int n = static_cast<int>(ids.size());
  const int d = model.config().hidden;

  const std::vector<double> x = model.embed(ids).values();
  std::vector<double> x0(x.size(), 0.0);
  if (cfg.baseline == IGBaseline::zero_token_keep_position)
    x0 = layer_norm(slice_rows(model.param("pos_emb"), 0, n), model.param("emb_ln_g"),
                    model.param("emb_ln_b"))
             .values();

  AttributionRecord rec;
  rec.tokens = detail::seq_labels(seq);
  rec.n = n;
  rec.d = d;
  int target = cfg.target_class;
  if (target < 0) {
    const std::vector<double> p =
        softmax(model.forward_from_embeddings(Tensor::from({n, d}, x), mask).logits, 1).values();
    target = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
      if (p[c] > p[static_cast<std::size_t>(target)]) target = static_cast<int>(c);
  } else if (target >= model.config().num_classes) {
    throw config_error("ig: target class out of range");
  }
  rec.target = target;

  PathIntegral pi = ig_path_integral(
      [&](const Tensor& xt) { return detail::class_prob(model, xt, mask, target); }, {n, d}, x,
      x0, cfg.steps);
  rec.raw = std::move(pi.raw);

  rec.scores.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) rec.scores[static_cast<std::size_t>(i)] += rec.raw[static_cast<std::size_t>(i) * d + j];

  rec.f_x = pi.f_x;
  rec.f_baseline = pi.f_baseline;
  rec.completeness_gap = pi.gap;
  return rec;
}

// Per-token scores scaled into [-1, 1] by the max absolute score; sign kept.
inline std::vector<double> word_importance(const AttributionRecord& rec) {
  double mx = 0.0;
  for (double s : rec.scores) mx = std::max(mx, std::abs(s));
  std::vector<double> out(rec.scores.size(), 0.0);
  if (mx == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rec.scores[i] / mx;
  return out;
}

// One eval-mode forward with attention collection; input cropped to real
// tokens, so every returned matrix is over real positions only.
inline AttentionGrid extract_attention(const TransformerClassifier& model, const TokenSeq& seq) {
  const std::vector<int> ids = detail::crop_ids(seq);
  const std::vector<int> mask(ids.size(), 1);
  Tensor x = model.embed(ids);
  AttentionGrid grid = model.forward_from_embeddings(x, mask, true).grid;
  grid.labels = detail::seq_labels(seq);
  return grid;
}

struct HeadSummary {
  int layer = 0;
  int head = 0;
  double mean_row_entropy = 0.0;
  // histogram of argmax(row) - row over offsets -(n-1)..(n-1); index offset+n-1
  std::vector<long long> offset_hist;
  double cls_to_tag = 0.0;  // [CLS]-row mass on the sentiment-tag column, 0 if untagged
};

inline std::vector<HeadSummary> head_summary(const AttentionGrid& grid) {
  const int n = grid.n;
  if (n < 1) throw dim_error("head_summary: empty grid");
  int tag_col = -1;
  for (std::size_t i = 0; i < grid.labels.size(); ++i)
    if (is_sentiment_tag(grid.labels[i])) {
      tag_col = static_cast<int>(i);
      break;
    }
  std::vector<HeadSummary> out;
  out.reserve(static_cast<std::size_t>(grid.layers) * grid.heads);
  for (int l = 0; l < grid.layers; ++l)
    for (int h = 0; h < grid.heads; ++h) {
      const auto& m = grid.at(l, h);
      HeadSummary s;
      s.layer = l;
      s.head = h;
      s.offset_hist.assign(static_cast<std::size_t>(2 * n - 1), 0);
      double entropy = 0.0;
      for (int i = 0; i < n; ++i) {
        double row_h = 0.0;
        int arg = 0;
        for (int j = 0; j < n; ++j) {
          const double p = m[static_cast<std::size_t>(i) * n + j];
          if (p > 0.0) row_h -= p * std::log(p);
          if (p > m[static_cast<std::size_t>(i) * n + arg]) arg = j;
        }
        entropy += row_h;
        ++s.offset_hist[static_cast<std::size_t>(arg - i + n - 1)];
      }
      s.mean_row_entropy = entropy / n;
      if (tag_col >= 0) s.cls_to_tag = m[static_cast<std::size_t>(tag_col)];
      out.push_back(std::move(s));
    }
  return out;
}

inline nlohmann::json attribution_to_json(const AttributionRecord& rec) {
  return nlohmann::json{{"tokens", rec.tokens},
                        {"scores", rec.scores},
                        {"raw", rec.raw},
                        {"n", rec.n},
                        {"d", rec.d},
                        {"target", rec.target},
                        {"f_x", rec.f_x},
                        {"f_baseline", rec.f_baseline},
                        {"completeness_gap", rec.completeness_gap}};
}

inline nlohmann::json grid_to_json(const AttentionGrid& grid) {
  nlohmann::json mats = nlohmann::json::array();
  for (int l = 0; l < grid.layers; ++l) {
    nlohmann::json row = nlohmann::json::array();
    for (int h = 0; h < grid.heads; ++h) row.push_back(grid.at(l, h));
    mats.push_back(std::move(row));
  }
  return nlohmann::json{
      {"layers", grid.layers}, {"heads", grid.heads}, {"n", grid.n},
      {"labels", grid.labels}, {"matrices", mats}};
}

}  // namespace vatspam
