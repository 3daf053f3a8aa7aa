#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vatspam/error.hpp"
#include "vatspam/model.hpp"
#include "vatspam/rng.hpp"
#include "vatspam/tensor.hpp"

namespace vatspam {

enum class AdvMethod { none, fgm, pgd, vat };

inline const char* adv_method_name(AdvMethod m) {
  switch (m) {
    case AdvMethod::none: return "none";
    case AdvMethod::fgm: return "fgm";
    case AdvMethod::pgd: return "pgd";
    case AdvMethod::vat: return "vat";
  }
  return "?";
}

inline AdvMethod adv_method_from(const std::string& s) {
  if (s == "none") return AdvMethod::none;
  if (s == "fgm") return AdvMethod::fgm;
  if (s == "pgd") return AdvMethod::pgd;
  if (s == "vat") return AdvMethod::vat;
  throw config_error("adv method must be none|fgm|pgd|vat, got '" + s + "'");
}

struct AdvConfig {
  AdvMethod method = AdvMethod::none;
  double epsilon = 1.0;       // L2 radius in embedding space; 0 disables the term
  int pgd_steps = 3;          // K
  double pgd_step_size = 0.0; // 0 = default epsilon/4
  double vat_xi = 0.0;        // finite-difference scale; 0 = 1e-6*sqrt(seq*d)
  int vat_power_iters = 1;

  void validate() const {
    if (epsilon < 0.0) throw config_error("adv: epsilon must be >= 0");
    if (pgd_steps < 1) throw config_error("adv: pgd_steps must be >= 1");
    if (pgd_step_size < 0.0) throw config_error("adv: pgd_step_size must be >= 0");
    if (vat_xi < 0.0) throw config_error("adv: vat_xi must be >= 0");
    if (vat_power_iters < 1) throw config_error("adv: vat_power_iters must be >= 1");
  }

  double step_size() const { return pgd_step_size > 0.0 ? pgd_step_size : epsilon / 4.0; }
  double xi_for(std::size_t numel) const {
    return vat_xi > 0.0 ? vat_xi : 1e-6 * std::sqrt(static_cast<double>(numel));
  }
};

// Embedding-space perturbation plus its recorded L2 norm.
struct Perturbation {
  Shape shape;
  std::vector<double> delta;
  double norm = 0.0;

  bool is_zero() const {
    for (double d : delta)
      if (d != 0.0) return false;
    return true;
  }
};

inline double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

namespace detail {

// out = alpha * g / ||g||. False (out zeroed) when the gradient is degenerate.
// FGM and the PGD first step share this exact code path so they agree bitwise.
inline bool scaled_unit(const std::vector<double>& g, double alpha, std::vector<double>& out) {
  const double n = l2_norm(g);
  out.assign(g.size(), 0.0);
  if (n <= 1e-12) return false;
  const double c = alpha / n;
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = c * g[i];
  return true;
}

// Radial rescale onto the eps-ball. The relative tolerance keeps an
// exactly-on-the-sphere perturbation (the K=1, alpha=eps case) untouched.
inline void project_l2(std::vector<double>& delta, double eps, double& norm) {
  norm = l2_norm(delta);
  if (norm > eps * (1.0 + 1e-12)) {
    const double c = eps / norm;
    for (auto& d : delta) d *= c;
    norm = l2_norm(delta);
  }
}

// Gradient of eval-mode cross-entropy w.r.t. an embedding-space input.
inline std::vector<double> ce_grad_at(const TransformerClassifier& model, const Shape& shape,
                                      const std::vector<double>& xv, const std::vector<int>& mask,
                                      int label) {
  Tensor x = Tensor::from(shape, xv);
  Tensor loss = cross_entropy(model.forward_from_embeddings(x, mask).logits, label);
  backward(loss);
  return x.grad();
}

inline std::vector<double> eval_proba_at(const TransformerClassifier& model, const Shape& shape,
                                         const std::vector<double>& xv,
                                         const std::vector<int>& mask) {
  Tensor x = Tensor::from(shape, xv);
  return softmax(model.forward_from_embeddings(x, mask).logits, 1).values();
}

}  // namespace detail

// delta = eps * g / ||g||; zero perturbation on a degenerate gradient.
inline Perturbation fgm_perturb(const std::vector<double>& g, const Shape& shape, double eps) {
  for (double x : g)
    if (!std::isfinite(x)) throw domain_error("fgm: non-finite gradient");
  Perturbation p;
  p.shape = shape;
  if (detail::scaled_unit(g, eps, p.delta)) p.norm = l2_norm(p.delta);
  return p;
}

// Convenience form: gradient taken at the clean embedding, dropout off.
inline Perturbation fgm_perturb(const TransformerClassifier& model, const Tensor& x_clean,
                                const std::vector<int>& mask, int label, double eps) {
  return fgm_perturb(detail::ce_grad_at(model, x_clean.shape(), x_clean.values(), mask, label),
                     x_clean.shape(), eps);
}

// K normalized ascent steps, each followed by projection onto the eps-ball
// around the clean input. Zero gradient at any step returns the perturbation
// built so far.
inline Perturbation pgd_perturb(const TransformerClassifier& model, const Tensor& x_clean,
                                const std::vector<int>& mask, int label, const AdvConfig& cfg) {
  cfg.validate();
  const double alpha = cfg.step_size();
  Perturbation p;
  p.shape = x_clean.shape();
  p.delta.assign(x_clean.size(), 0.0);
  std::vector<double> xv = x_clean.values();
  std::vector<double> step;
  for (int t = 0; t < cfg.pgd_steps; ++t) {
    const std::vector<double> g = detail::ce_grad_at(model, p.shape, xv, mask, label);
    if (t == 0) {
      if (!detail::scaled_unit(g, alpha, p.delta)) return p;
    } else {
      if (!detail::scaled_unit(g, alpha, step)) break;
      for (std::size_t i = 0; i < p.delta.size(); ++i) p.delta[i] += step[i];
    }
    detail::project_l2(p.delta, cfg.epsilon, p.norm);
    if (t + 1 < cfg.pgd_steps) {
      xv = x_clean.values();
      for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += p.delta[i];
    }
  }
  return p;
}

// Virtual adversarial direction via power iteration: start from a random unit
// direction, repeatedly take the gradient of KL(p(x) || p(x + xi*d)) w.r.t.
// the perturbed input and renormalize. Needs no label. Falls back to the
// initial random direction when the divergence gradient vanishes.
inline Perturbation vat_perturb(const TransformerClassifier& model, const Tensor& x_clean,
                                const std::vector<int>& mask, const AdvConfig& cfg, Rng& rng) {
  cfg.validate();
  Perturbation p;
  p.shape = x_clean.shape();
  std::vector<double> d = rng.gaussian_vec(x_clean.size());
  {
    const double n = l2_norm(d);
    for (auto& v : d) v /= n;
  }
  const std::vector<double> d0 = d;
  const double xi = cfg.xi_for(x_clean.size());
  const std::vector<double> p_hat = detail::eval_proba_at(model, p.shape, x_clean.values(), mask);
  const Tensor p_ref = Tensor::from({1, static_cast<int>(p_hat.size())}, p_hat);
  bool degenerate = false;
  for (int it = 0; it < cfg.vat_power_iters; ++it) {
    std::vector<double> xv = x_clean.values();
    for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += xi * d[i];
    Tensor x = Tensor::from(p.shape, xv);
    Tensor q = softmax(model.forward_from_embeddings(x, mask).logits, 1);
    Tensor div = kl_divergence(p_ref, q);
    backward(div);
    const std::vector<double>& g = x.grad();
    const double n = l2_norm(g);
    if (n <= 1e-12) {
      degenerate = true;
      break;
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] / n;
  }
  const std::vector<double>& dir = degenerate ? d0 : d;
  p.delta.resize(dir.size());
  for (std::size_t i = 0; i < dir.size(); ++i) p.delta[i] = cfg.epsilon * dir[i];
  p.norm = l2_norm(p.delta);
  return p;
}

// LDS(x, r) = KL(p(.|x, theta_hat) || p(.|x + r, theta)): the reference side
// is a constant snapshot, gradient flows through the perturbed branch only.
// Both branches run dropout-free so LDS(x, 0) is exactly zero: for all-zero r
// the perturbed input reuses x's bytes verbatim and the two distributions
// coincide bitwise.
inline Tensor compute_lds(const TransformerClassifier& model, const Tensor& x_clean,
                          const std::vector<int>& mask, const Perturbation& r) {
  const std::vector<double> p_hat =
      detail::eval_proba_at(model, x_clean.shape(), x_clean.values(), mask);
  std::vector<double> xv = x_clean.values();
  if (!r.is_zero()) {
    if (r.delta.size() != xv.size()) throw dim_error("compute_lds: perturbation shape mismatch");
    for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += r.delta[i];
  }
  Tensor x = Tensor::from(x_clean.shape(), std::move(xv));
  Tensor q = softmax(model.forward_from_embeddings(x, mask).logits, 1);
  return kl_divergence(Tensor::from({1, static_cast<int>(p_hat.size())}, p_hat), q);
}

// Cross-entropy at the perturbed input. delta enters as a constant, so the
// gradient reaches theta but never the perturbation.
inline Tensor adversarial_loss(const TransformerClassifier& model, const Tensor& x_clean,
                               const std::vector<int>& mask, int label, const Perturbation& delta,
                               bool train = false, std::uint64_t drop_seed = 0) {
  std::vector<double> xv = x_clean.values();
  if (!delta.is_zero()) {
    if (delta.delta.size() != xv.size())
      throw dim_error("adversarial_loss: perturbation shape mismatch");
    for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += delta.delta[i];
  }
  Tensor x = Tensor::from(x_clean.shape(), std::move(xv));
  return cross_entropy(
      model.forward_from_embeddings(x, mask, false, train, drop_seed).logits, label);
}

}  // namespace vatspam
