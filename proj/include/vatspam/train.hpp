#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "vatspam/adversarial.hpp"
#include "vatspam/error.hpp"
#include "vatspam/model.hpp"
#include "vatspam/rng.hpp"
#include "vatspam/tensor.hpp"
#include "vatspam/tokenize.hpp"

namespace vatspam {

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 3e-4;  // from-scratch desk default; full-size fine-tuning wants 2e-5 to 1e-5
  int steps = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  AdvConfig adv;
  double lds_weight = 1.0;  // alpha on the LDS term
  std::uint64_t seed = 0;
  int eval_every = 50;

  void validate() const {
    if (batch_size < 1) throw config_error("train: batch_size must be >= 1");
    if (steps < 1) throw config_error("train: steps must be >= 1");
    if (learning_rate <= 0.0) throw config_error("train: learning_rate must be > 0");
    if (lds_weight < 0.0) throw config_error("train: lds_weight must be >= 0");
    if (eval_every < 1) throw config_error("train: eval_every must be >= 1");
    adv.validate();
  }
};

struct Metrics {
  double precision = 0.0;
  double accuracy = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  bool degenerate = false;  // some rate had a zero denominator

  static Metrics from_counts(long long tp, long long fp, long long tn, long long fn) {
    Metrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const long long n = tp + fp + tn + fn;
    if (tp + fp > 0)
      m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else
      m.degenerate = true;
    if (tp + fn > 0)
      m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    else
      m.degenerate = true;
    if (n > 0) m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
    if (m.precision + m.recall > 0.0)
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
      m.degenerate = true;
    return m;
  }
};

struct TrainRecord {
  int step = 0;
  double clean_loss = 0.0;
  double adv_loss = 0.0;
  double lds = 0.0;
  Metrics metrics;
};

struct TrainHistory {
  std::vector<TrainRecord> records;

  // step,clean_loss,adv_loss,lds,precision,accuracy,recall,f1
  void save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("history: cannot write " + path);
    out << "step,clean_loss,adv_loss,lds,precision,accuracy,recall,f1\n";
    char buf[64];
    auto num = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    for (const auto& r : records)
      out << r.step << ',' << num(r.clean_loss) << ',' << num(r.adv_loss) << ',' << num(r.lds)
          << ',' << num(r.metrics.precision) << ',' << num(r.metrics.accuracy) << ','
          << num(r.metrics.recall) << ',' << num(r.metrics.f1) << '\n';
  }
};

struct LabeledSeq {
  TokenSeq seq;
  int label = 0;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  long long t = 0;
};

// Standard Adam with bias correction. Empty grad entries (parameter absent
// from the step's graph) leave that parameter untouched.
inline void adam_step(std::vector<std::pair<std::string, Tensor>>& params,
                      const std::vector<std::vector<double>>& grads, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (grads.size() != params.size()) throw dim_error("adam: grads/params size mismatch");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].second.size(), 0.0);
      state.v[i].assign(params[i].second.size(), 0.0);
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].empty()) continue;
    auto& p = params[i].second.values();
    if (grads[i].size() != p.size())
      throw dim_error("adam: grad shape mismatch for " + params[i].first);
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = grads[i][j];
      m[j] = beta1 * m[j] + (1.0 - beta1) * g;
      v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
      p[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
    }
  }
}

inline Metrics evaluate(const TransformerClassifier& model, const std::vector<LabeledSeq>& data) {
  if (data.empty()) throw data_error("evaluate: empty dataset");
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& ex : data) {
    const std::vector<double> p = model.predict_proba(ex.seq);
    int pred = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
      if (p[c] > p[pred]) pred = static_cast<int>(c);
    // positive class = 1 (spam)
    if (ex.label == 1 && pred == 1)
      ++tp;
    else if (ex.label == 0 && pred == 1)
      ++fp;
    else if (ex.label == 0 && pred == 0)
      ++tn;
    else
      ++fn;
  }
  return Metrics::from_counts(tp, fp, tn, fn);
}

namespace detail {

inline std::vector<int> real_ids(const TokenSeq& s) {
  return std::vector<int>(s.ids.begin(), s.ids.begin() + s.real_len());
}

// Epoch-shuffled index sampler.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : rng_(seed), order_(n) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    rng_.shuffle(order_);
  }
  std::size_t next() {
    if (pos_ >= order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

inline Tensor fold_mean(const std::vector<Tensor>& parts) {
  Tensor total = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) total = add(total, parts[i]);
  return scale(total, 1.0 / static_cast<double>(parts.size()));
}

inline std::vector<std::vector<double>> collect_grads(
    const std::vector<std::pair<std::string, Tensor>>& params, int step) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) {
      grads.emplace_back();
      continue;
    }
    for (double g : t.grad())
      if (!std::isfinite(g))
        throw domain_error("train: non-finite gradient in '" + name + "' at step " +
                           std::to_string(step));
    grads.push_back(t.grad());
  }
  return grads;
}

// RNG stream ids; separate streams keep optional components (adversarial
// search, unlabeled sampling) from shifting the draws of the core loop, so
// e.g. fgm at epsilon=0 replays the exact trace of method none.
constexpr std::uint64_t kStreamBatch = 1;
constexpr std::uint64_t kStreamDropout = 2;
constexpr std::uint64_t kStreamAdv = 3;
constexpr std::uint64_t kStreamUnlabeled = 4;

}  // namespace detail

// Supervised loop: clean cross-entropy, optionally plus the adversarial loss
// at an FGM/PGD perturbation found per example. History rows are written at
// every eval_every-th step and at the final step, with metrics over `data`
// unless a separate eval set is given.
inline TrainHistory train_supervised(TransformerClassifier& model,
                                     const std::vector<LabeledSeq>& data, const TrainConfig& cfg,
                                     const std::vector<LabeledSeq>* eval_data = nullptr) {
  cfg.validate();
  if (cfg.adv.method != AdvMethod::none && cfg.adv.method != AdvMethod::fgm &&
      cfg.adv.method != AdvMethod::pgd)
    throw config_error("train_supervised: adv method must be none, fgm, or pgd");
  if (data.empty()) throw data_error("train_supervised: empty dataset");

  detail::BatchSampler sampler(data.size(), Rng::stream(cfg.seed, detail::kStreamBatch));
  const std::uint64_t drop_base = Rng::stream(cfg.seed, detail::kStreamDropout);
  AdamState adam;
  TrainHistory hist;
  const bool use_adv = cfg.adv.method != AdvMethod::none && cfg.adv.epsilon > 0.0;

  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<Tensor> clean_losses, adv_losses;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const LabeledSeq& ex = data[sampler.next()];
      const std::vector<int> ids = detail::real_ids(ex.seq);
      const std::vector<int> mask(ids.size(), 1);
      const std::uint64_t drop_seed =
          Rng::stream(Rng::stream(drop_base, static_cast<std::uint64_t>(step)),
                      static_cast<std::uint64_t>(b));
      Tensor x_train = model.embed(ids, true, drop_seed);
      clean_losses.push_back(
          cross_entropy(model.forward_from_embeddings(x_train, mask, false, true, drop_seed).logits,
                        ex.label));
      if (use_adv) {
        // Perturbation search runs dropout-free on the eval embedding.
        Tensor x_eval = model.embed(ids);
        Perturbation delta =
            cfg.adv.method == AdvMethod::fgm
                ? fgm_perturb(model, x_eval, mask, ex.label, cfg.adv.epsilon)
                : pgd_perturb(model, x_eval, mask, ex.label, cfg.adv);
        adv_losses.push_back(adversarial_loss(model, x_eval, mask, ex.label, delta, true,
                                              Rng::stream(drop_seed, 0x0adf)));
      }
    }
    Tensor clean = detail::fold_mean(clean_losses);
    Tensor total = clean;
    double adv_value = 0.0;
    if (use_adv) {
      Tensor adv = detail::fold_mean(adv_losses);
      adv_value = adv.item();
      total = add(clean, adv);
    }
    backward(total);
    auto grads = detail::collect_grads(model.params(), step);
    adam_step(model.params(), grads, adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      TrainRecord rec;
      rec.step = step;
      rec.clean_loss = clean.item();
      rec.adv_loss = adv_value;
      rec.lds = 0.0;
      rec.metrics = evaluate(model, eval_data ? *eval_data : data);
      hist.records.push_back(rec);
    }
  }
  return hist;
}

// VAT loop: labeled cross-entropy plus lds_weight times the mean LDS over a
// batch drawn from labeled and unlabeled inputs together. The reference
// distribution inside each LDS term is computed before the step's update, so
// it is exactly the step-start parameter snapshot.
inline TrainHistory train_semisupervised(TransformerClassifier& model,
                                         const std::vector<LabeledSeq>& labeled,
                                         const std::vector<TokenSeq>& unlabeled,
                                         const TrainConfig& cfg,
                                         const std::vector<LabeledSeq>* eval_data = nullptr) {
  cfg.validate();
  if (cfg.adv.method != AdvMethod::vat)
    throw config_error("train_semisupervised: adv method must be vat");
  if (labeled.empty()) throw data_error("train_semisupervised: empty labeled dataset");
  if (unlabeled.empty())
    std::cerr << "warning: no unlabeled data, LDS term uses labeled inputs only\n";

  // x_* pool: labeled inputs (labels unread) plus all unlabeled inputs.
  std::vector<const TokenSeq*> pool;
  pool.reserve(labeled.size() + unlabeled.size());
  for (const auto& ex : labeled) pool.push_back(&ex.seq);
  for (const auto& seq : unlabeled) pool.push_back(&seq);

  detail::BatchSampler sampler(labeled.size(), Rng::stream(cfg.seed, detail::kStreamBatch));
  detail::BatchSampler pool_sampler(pool.size(), Rng::stream(cfg.seed, detail::kStreamUnlabeled));
  Rng adv_rng(Rng::stream(cfg.seed, detail::kStreamAdv));
  const std::uint64_t drop_base = Rng::stream(cfg.seed, detail::kStreamDropout);
  AdamState adam;
  TrainHistory hist;
  const bool use_lds = cfg.lds_weight > 0.0;

  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<Tensor> clean_losses;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const LabeledSeq& ex = labeled[sampler.next()];
      const std::vector<int> ids = detail::real_ids(ex.seq);
      const std::vector<int> mask(ids.size(), 1);
      const std::uint64_t drop_seed =
          Rng::stream(Rng::stream(drop_base, static_cast<std::uint64_t>(step)),
                      static_cast<std::uint64_t>(b));
      Tensor x_train = model.embed(ids, true, drop_seed);
      clean_losses.push_back(
          cross_entropy(model.forward_from_embeddings(x_train, mask, false, true, drop_seed).logits,
                        ex.label));
    }
    Tensor clean = detail::fold_mean(clean_losses);
    Tensor total = clean;
    double lds_value = 0.0;
    if (use_lds) {
      std::vector<Tensor> lds_terms;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const TokenSeq& seq = *pool[pool_sampler.next()];
        const std::vector<int> ids = detail::real_ids(seq);
        const std::vector<int> mask(ids.size(), 1);
        Tensor x_eval = model.embed(ids);
        Perturbation r = vat_perturb(model, x_eval, mask, cfg.adv, adv_rng);
        lds_terms.push_back(compute_lds(model, x_eval, mask, r));
      }
      Tensor lds = detail::fold_mean(lds_terms);
      lds_value = lds.item();
      total = add(clean, scale(lds, cfg.lds_weight));
    }
    backward(total);
    auto grads = detail::collect_grads(model.params(), step);
    adam_step(model.params(), grads, adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      TrainRecord rec;
      rec.step = step;
      rec.clean_loss = clean.item();
      rec.adv_loss = 0.0;
      rec.lds = lds_value;
      rec.metrics = evaluate(model, eval_data ? *eval_data : labeled);
      hist.records.push_back(rec);
    }
  }
  return hist;
}

}  // namespace vatspam
