#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vatspam/error.hpp"
#include "vatspam/rng.hpp"
#include "vatspam/tensor.hpp"

namespace vatspam {

struct FiniteDiffReport {
  double max_rel_err = 0.0;
  std::size_t worst_param = 0;  // index into the params list
  std::size_t worst_index = 0;  // flat index within that tensor
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares backward() gradients of the scalar loss f() against central
// differences, probing at most `max_entries` seeded-random entries per tensor
// (0 = every entry). Error metric per entry:
//   |g_i - fd_i| / max(|g_i|, 1e-8)
// f must be deterministic (no dropout); it is called twice up front and
// rejected if the loss value is not bit-identical.
//
// Central differences carry a roundoff floor of about |f|*eps/(2h); checks
// that can hit near-zero gradients (deep-model parameters) should pick h
// around 5e-4 so that noise stays well below the 1e-8 denominator floor.
template <class F>
FiniteDiffReport finite_diff_check_sampled(F&& f, const std::vector<Tensor>& params, double h,
                                           std::size_t max_entries, Rng* rng) {
  Tensor loss = f();
  const double base = loss.item();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    if (!p.has_grad())
      throw contract_error("finite_diff_check: parameter unreachable from loss");
    analytic.push_back(p.grad());
  }
  if (f().item() != base)
    throw contract_error("finite_diff_check: f() is not deterministic across calls");

  FiniteDiffReport rep;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    // values() is shared with the live parameter node, so nudges are visible to f.
    auto& v = const_cast<Tensor&>(params[pi]).values();
    std::vector<std::size_t> probe;
    if (max_entries == 0 || v.size() <= max_entries) {
      probe.resize(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) probe[i] = i;
    } else {
      if (!rng) throw contract_error("finite_diff_check_sampled: sampling needs an rng");
      for (std::size_t k = 0; k < max_entries; ++k)
        probe.push_back(static_cast<std::size_t>(rng->uniform_int(static_cast<int>(v.size()))));
    }
    for (std::size_t i : probe) {
      const double keep = v[i];
      v[i] = keep + h;
      const double fp = f().item();
      v[i] = keep - h;
      const double fm = f().item();
      v[i] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double g = analytic[pi][i];
      const double rel = std::abs(g - fd) / std::max(std::abs(g), 1e-8);
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = pi;
        rep.worst_index = i;
        rep.analytic = g;
        rep.numeric = fd;
      }
    }
  }
  return rep;
}

// Full sweep over every entry of every listed tensor.
template <class F>
FiniteDiffReport finite_diff_check(F&& f, const std::vector<Tensor>& params, double h = 1e-5) {
  return finite_diff_check_sampled(std::forward<F>(f), params, h, 0, nullptr);
}

}  // namespace vatspam
