#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vatspam/error.hpp"
#include "vatspam/rng.hpp"

namespace vatspam {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One value in a define-by-run graph. The graph is rebuilt on every forward
// pass; leaves (parameters, constants) live across graphs.
struct Node {
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;
  std::vector<NodePtr> parents;
  // Reads this->grad, accumulates into parents' grad.
  std::function<void(Node&)> backprop;
  std::uint64_t id = 0;

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
};

inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

// --- raw matmul kernels (row-major) ---

// c (m x n) = a (m x k) * b (k x n)
inline void mm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool acc) {
  if (!acc)
    for (int i = 0; i < m * n; ++i) c[i] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* ar = a + static_cast<std::size_t>(i) * k;
    double* cr = c + static_cast<std::size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = ar[l];
      const double* br = b + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
}

// c (m x n) = a (m x k) * b^T where b is (n x k)
inline void mm_nt(const double* a, const double* b, double* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const double* ar = a + static_cast<std::size_t>(i) * k;
    double* cr = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* br = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += ar[l] * br[l];
      if (acc)
        cr[j] += s;
      else
        cr[j] = s;
    }
  }
}

// c (m x n) = a^T * b where a is (k x m), b is (k x n)
inline void mm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool acc) {
  if (!acc)
    for (int i = 0; i < m * n; ++i) c[i] = 0.0;
  for (int l = 0; l < k; ++l) {
    const double* ar = a + static_cast<std::size_t>(l) * m;
    const double* br = b + static_cast<std::size_t>(l) * n;
    for (int i = 0; i < m; ++i) {
      const double av = ar[i];
      double* cr = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
}

}  // namespace detail

// Value-semantic handle to a graph node. 64-bit precision throughout.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size())
      throw dim_error("tensor literal: " + shape_str(shape) + " needs " +
                      std::to_string(shape_numel(shape)) + " values, got " +
                      std::to_string(values.size()));
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->val = std::move(values);
    n->id = detail::next_node_id();
    return Tensor(std::move(n));
  }

  static Tensor zeros(Shape shape) {
    std::vector<double> v(shape_numel(shape), 0.0);
    return from(std::move(shape), std::move(v));
  }

  static Tensor scalar(double v) { return from({1}, {v}); }

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int rows() const { return n_->rows(); }
  int cols() const { return n_->cols(); }
  std::size_t size() const { return n_->val.size(); }

  std::vector<double>& values() { return n_->val; }
  const std::vector<double>& values() const { return n_->val; }

  bool has_grad() const { return !n_->grad.empty(); }
  std::vector<double>& grad() { return n_->grad; }
  const std::vector<double>& grad() const { return n_->grad; }

  double item() const {
    if (size() != 1) throw contract_error("item() on non-scalar tensor " + shape_str(shape()));
    return n_->val[0];
  }

  std::uint64_t id() const { return n_->id; }
  detail::Node* node() const { return n_.get(); }
  const detail::NodePtr& ptr() const { return n_; }

 private:
  explicit Tensor(detail::NodePtr n) : n_(std::move(n)) {}
  detail::NodePtr n_;

  friend Tensor make_op(Shape, std::vector<double>, std::vector<Tensor>,
                        std::function<void(detail::Node&)>);
};

inline Tensor make_op(Shape shape, std::vector<double> val, std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backprop) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->val = std::move(val);
  n->parents.reserve(parents.size());
  for (auto& p : parents) n->parents.push_back(p.ptr());
  n->backprop = std::move(backprop);
  n->id = detail::next_node_id();
  return Tensor(std::move(n));
}

namespace detail {
inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw dim_error(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}
inline std::vector<double>& ensure_grad(Node& n) {
  if (n.grad.size() != n.val.size()) n.grad.assign(n.val.size(), 0.0);
  return n.grad;
}
}  // namespace detail

// ---- elementwise and structural ops ----

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    auto& gb = detail::ensure_grad(*self.parents[1]);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ga[i] += self.grad[i];
      gb[i] += self.grad[i];
    }
  });
}

// a (m x n) + row vector v (n) broadcast over rows.
inline Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  const int m = a.rows(), n = a.cols();
  if (static_cast<int>(v.size()) != n)
    throw dim_error("add_rowvec: " + shape_str(a.shape()) + " vs " + shape_str(v.shape()));
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& vv = v.values();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + vv[j];
  return make_op(a.shape(), std::move(out), {a, v}, [m, n](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    auto& gv = detail::ensure_grad(*self.parents[1]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        ga[i * n + j] += self.grad[i * n + j];
        gv[j] += self.grad[i * n + j];
      }
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * av[i];
  return make_op(a.shape(), std::move(out), {a}, [c](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += c * self.grad[i];
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    auto& ga = detail::ensure_grad(pa);
    auto& gb = detail::ensure_grad(pb);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ga[i] += self.grad[i] * pb.val[i];
      gb[i] += self.grad[i] * pa.val[i];
    }
  });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const int m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2 || a.shape().size() != 2 || b.shape().size() != 2)
    throw dim_error("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  detail::mm_nn(a.values().data(), b.values().data(), out.data(), m, k, n, false);
  return make_op({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    auto& ga = detail::ensure_grad(pa);
    auto& gb = detail::ensure_grad(pb);
    // dA += dC * B^T ; dB += A^T * dC
    detail::mm_nt(self.grad.data(), pb.val.data(), ga.data(), m, n, k, true);
    detail::mm_tn(pa.val.data(), self.grad.data(), gb.data(), k, m, n, true);
  });
}

// a (m x k) * b^T with b (n x k); used for attention scores.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
  if (k != b.cols() || a.shape().size() != 2 || b.shape().size() != 2)
    throw dim_error("matmul_nt: " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  detail::mm_nt(a.values().data(), b.values().data(), out.data(), m, k, n, false);
  return make_op({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    auto& ga = detail::ensure_grad(pa);
    auto& gb = detail::ensure_grad(pb);
    // C = A * B^T : dA += dC * B ; dB += dC^T * A
    detail::mm_nn(self.grad.data(), pb.val.data(), ga.data(), m, n, k, true);
    detail::mm_tn(self.grad.data(), pa.val.data(), gb.data(), n, m, k, true);
  });
}

inline Tensor slice_rows(const Tensor& a, int r0, int nrows) {
  const int m = a.rows(), n = a.cols();
  if (r0 < 0 || nrows < 1 || r0 + nrows > m) throw dim_error("slice_rows out of range");
  std::vector<double> out(static_cast<std::size_t>(nrows) * n);
  std::copy_n(a.values().begin() + static_cast<std::size_t>(r0) * n, out.size(), out.begin());
  return make_op({nrows, n}, std::move(out), {a}, [r0, n](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      ga[static_cast<std::size_t>(r0) * n + i] += self.grad[i];
  });
}

inline Tensor slice_cols(const Tensor& a, int c0, int ncols) {
  const int m = a.rows(), n = a.cols();
  if (c0 < 0 || ncols < 1 || c0 + ncols > n) throw dim_error("slice_cols out of range");
  std::vector<double> out(static_cast<std::size_t>(m) * ncols);
  const auto& av = a.values();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < ncols; ++j) out[i * ncols + j] = av[i * n + c0 + j];
  return make_op({m, ncols}, std::move(out), {a}, [m, n, c0, ncols](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < ncols; ++j) ga[i * n + c0 + j] += self.grad[i * ncols + j];
  });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw dim_error("concat_cols: empty");
  const int m = parts[0].rows();
  int n = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) throw dim_error("concat_cols: row mismatch");
    n += p.cols();
  }
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  std::vector<int> widths;
  int off = 0;
  for (const auto& p : parts) {
    const int w = p.cols();
    const auto& pv = p.values();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j) out[i * n + off + j] = pv[i * w + j];
    widths.push_back(w);
    off += w;
  }
  return make_op({m, n}, std::move(out), parts, [m, n, widths](detail::Node& self) {
    int off2 = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      const int w = widths[p];
      auto& gp = detail::ensure_grad(*self.parents[p]);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j) gp[i * w + j] += self.grad[i * n + off2 + j];
      off2 += w;
    }
  });
}

// ---- nonlinearities ----

inline Tensor gelu(const Tensor& a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * av[i] * (1.0 + std::erf(av[i] * inv_sqrt2));
  return make_op(a.shape(), std::move(out), {a}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& ga = detail::ensure_grad(pa);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double x = pa.val[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
      ga[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
}

inline Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  return make_op(a.shape(), std::move(out), {a}, [](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.val[i];
      ga[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

// Softmax along `axis` of a 1-D or 2-D tensor (axis 1 = across each row).
inline Tensor softmax(const Tensor& a, int axis = -1) {
  const bool vec = a.shape().size() == 1;
  const int m = vec ? 1 : a.rows();
  const int n = vec ? static_cast<int>(a.size()) : a.cols();
  if (axis < 0) axis = vec ? 0 : 1;
  if (vec && axis != 0) throw dim_error("softmax: axis out of range for 1-D input");
  if (!vec && axis != 0 && axis != 1) throw dim_error("softmax: axis must be 0 or 1");
  const bool rowwise = vec || axis == 1;
  const int slices = rowwise ? m : n;
  const int len = rowwise ? n : m;
  const int stride = rowwise ? 1 : n;
  const auto& av = a.values();
  for (double x : av)
    if (!std::isfinite(x)) throw domain_error("softmax: non-finite input");
  std::vector<double> out(a.size());
  for (int s = 0; s < slices; ++s) {
    const std::size_t base = rowwise ? static_cast<std::size_t>(s) * n : static_cast<std::size_t>(s);
    double mx = av[base];
    for (int i = 1; i < len; ++i) mx = std::max(mx, av[base + static_cast<std::size_t>(i) * stride]);
    double z = 0.0;
    for (int i = 0; i < len; ++i) {
      const double e = std::exp(av[base + static_cast<std::size_t>(i) * stride] - mx);
      out[base + static_cast<std::size_t>(i) * stride] = e;
      z += e;
    }
    for (int i = 0; i < len; ++i) out[base + static_cast<std::size_t>(i) * stride] /= z;
  }
  return make_op(a.shape(), std::move(out), {a}, [slices, len, stride, rowwise, n](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (int s = 0; s < slices; ++s) {
      const std::size_t base = rowwise ? static_cast<std::size_t>(s) * n : static_cast<std::size_t>(s);
      double dot = 0.0;
      for (int i = 0; i < len; ++i) {
        const std::size_t ix = base + static_cast<std::size_t>(i) * stride;
        dot += self.grad[ix] * self.val[ix];
      }
      for (int i = 0; i < len; ++i) {
        const std::size_t ix = base + static_cast<std::size_t>(i) * stride;
        ga[ix] += self.val[ix] * (self.grad[ix] - dot);
      }
    }
  });
}

// Row-wise layer norm with learned gain/bias over the last dimension.
inline Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                         double eps = 1e-12) {
  const int m = a.rows(), n = a.cols();
  if (static_cast<int>(gain.size()) != n || static_cast<int>(bias.size()) != n)
    throw dim_error("layer_norm: gain/bias length " + std::to_string(n) + " expected");
  const auto& av = a.values();
  std::vector<double> xhat(a.size());
  std::vector<double> inv_std(m);
  std::vector<double> out(a.size());
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  for (int i = 0; i < m; ++i) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += av[i * n + j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = av[i * n + j] - mu;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (int j = 0; j < n; ++j) {
      const double xh = (av[i * n + j] - mu) * inv;
      xhat[i * n + j] = xh;
      out[i * n + j] = gv[j] * xh + bv[j];
    }
  }
  return make_op(a.shape(), std::move(out), {a, gain, bias},
                 [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
                   auto& pa = *self.parents[0];
                   auto& ga = detail::ensure_grad(pa);
                   auto& gg = detail::ensure_grad(*self.parents[1]);
                   auto& gb = detail::ensure_grad(*self.parents[2]);
                   const auto& gv = self.parents[1]->val;
                   for (int i = 0; i < m; ++i) {
                     double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                     for (int j = 0; j < n; ++j) {
                       const std::size_t ix = static_cast<std::size_t>(i) * n + j;
                       const double dxh = self.grad[ix] * gv[j];
                       sum_dxh += dxh;
                       sum_dxh_xh += dxh * xhat[ix];
                       gg[j] += self.grad[ix] * xhat[ix];
                       gb[j] += self.grad[ix];
                     }
                     for (int j = 0; j < n; ++j) {
                       const std::size_t ix = static_cast<std::size_t>(i) * n + j;
                       const double dxh = self.grad[ix] * gv[j];
                       ga[ix] += inv_std[i] * (dxh - (sum_dxh + xhat[ix] * sum_dxh_xh) / n);
                     }
                   }
                 });
}

inline Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  const int v = table.rows(), d = table.cols();
  const int n = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  const auto& tv = table.values();
  for (int p = 0; p < n; ++p) {
    if (ids[p] < 0 || ids[p] >= v)
      throw index_error("embedding_lookup: id " + std::to_string(ids[p]) + " outside vocab of " +
                        std::to_string(v));
    std::copy_n(tv.begin() + static_cast<std::size_t>(ids[p]) * d, d, out.begin() + static_cast<std::size_t>(p) * d);
  }
  return make_op({n, d}, std::move(out), {table}, [ids, d](detail::Node& self) {
    auto& gt = detail::ensure_grad(*self.parents[0]);
    for (std::size_t p = 0; p < ids.size(); ++p)
      for (int j = 0; j < d; ++j) gt[static_cast<std::size_t>(ids[p]) * d + j] += self.grad[p * d + j];
  });
}

// Inverted dropout with an explicit seed; callers skip this op entirely in
// eval/attribution mode.
inline Tensor dropout(const Tensor& a, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw config_error("dropout rate must be in [0,1)");
  if (rate == 0.0) return a;
  Rng rng(seed);
  std::vector<double> keep(a.size());
  const double inv = 1.0 / (1.0 - rate);
  for (auto& k : keep) k = rng.uniform() >= rate ? inv : 0.0;
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * keep[i];
  return make_op(a.shape(), std::move(out), {a}, [keep = std::move(keep)](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * keep[i];
  });
}

// Softmax cross-entropy of a single logit vector ({C} or {1,C}) against a label.
inline Tensor cross_entropy(const Tensor& logits, int label) {
  const int c = static_cast<int>(logits.size());
  if (logits.shape().size() > 2 || (logits.shape().size() == 2 && logits.rows() != 1))
    throw dim_error("cross_entropy: logits must be a single row");
  if (label < 0 || label >= c) throw index_error("cross_entropy: label out of range");
  const auto& z = logits.values();
  double mx = z[0];
  for (int i = 1; i < c; ++i) mx = std::max(mx, z[i]);
  double sum = 0.0;
  std::vector<double> p(c);
  for (int i = 0; i < c; ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (int i = 0; i < c; ++i) p[i] /= sum;
  const double loss = std::log(sum) + mx - z[label];
  return make_op({1}, {loss}, {logits}, [p = std::move(p), label](detail::Node& self) {
    auto& gz = detail::ensure_grad(*self.parents[0]);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < p.size(); ++i)
      gz[i] += g * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
  });
}

// KL(p || q) in nats for two distribution vectors.
inline Tensor kl_divergence(const Tensor& p, const Tensor& q) {
  detail::require_same_shape(p, q, "kl_divergence");
  const auto& pv = p.values();
  const auto& qv = q.values();
  auto check_dist = [](const std::vector<double>& v, const char* name) {
    double sum = 0.0;
    for (double x : v) {
      if (!std::isfinite(x) || x < 0.0)
        throw domain_error(std::string("kl_divergence: ") + name + " is not a distribution");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw domain_error(std::string("kl_divergence: ") + name + " does not sum to 1");
  };
  check_dist(pv, "p");
  check_dist(qv, "q");
  double kl = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (pv[i] > 0.0) {
      if (qv[i] <= 0.0) throw domain_error("kl_divergence: q has zero mass where p > 0");
      kl += pv[i] * (std::log(pv[i]) - std::log(qv[i]));
    }
  }
  return make_op({1}, {kl}, {p, q}, [](detail::Node& self) {
    auto& np = *self.parents[0];
    auto& nq = *self.parents[1];
    auto& gp = detail::ensure_grad(np);
    auto& gq = detail::ensure_grad(nq);
    const double g = self.grad[0];
    for (std::size_t i = 0; i < np.val.size(); ++i) {
      if (np.val[i] > 0.0) {
        gp[i] += g * (std::log(np.val[i]) - std::log(nq.val[i]) + 1.0);
        gq[i] += g * (-np.val[i] / nq.val[i]);
      }
    }
  });
}

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return make_op({1}, {s}, {a}, [](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (auto& g : ga) g += self.grad[0];
  });
}

inline Tensor mean(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  const double inv = 1.0 / static_cast<double>(a.size());
  return make_op({1}, {s * inv}, {a}, [inv](detail::Node& self) {
    auto& ga = detail::ensure_grad(*self.parents[0]);
    for (auto& g : ga) g += self.grad[0] * inv;
  });
}

// ---- backward ----

// Populates grad on every tensor reachable from `loss`, replacing previous
// contents. Traversal order is fixed by graph structure, so gradients are
// bit-identical across repeated calls.
inline void backward(const Tensor& loss) {
  if (loss.size() != 1) throw contract_error("backward: loss must be scalar");
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  // Iterative post-order DFS.
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (detail::Node* n : order) n->grad.assign(n->val.size(), 0.0);
  loss.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

}  // namespace vatspam
