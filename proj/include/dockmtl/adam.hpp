#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dockmtl/tensor.hpp"

namespace dockmtl {

class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  Scalar lr = 0.001;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// One bias-corrected Adam update. `grads[i]` may be null for a parameter that
// received no gradient this step; it is treated as zero. The step is rejected
// (nothing modified) when any gradient is non-finite.
inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: one gradient slot per parameter required");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i]) continue;
    if (!grads[i]->same_shape(*params[i])) throw ShapeError("adam_step: gradient shape differs from parameter");
    if (!grads[i]->all_finite()) throw NonFiniteGradientError("adam_step: non-finite gradient, step rejected");
  }
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape(), 0.0);
      state.v.emplace_back(p->shape(), 0.0);
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state was built for a different parameter list");
  }

  ++state.t;
  const Scalar c1 = 1.0 - std::pow(state.beta1, static_cast<Scalar>(state.t));
  const Scalar c2 = 1.0 - std::pow(state.beta2, static_cast<Scalar>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor* g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const Scalar gj = g ? (*g)[j] : 0.0;
      m[j] = state.beta1 * m[j] + (1 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1 - state.beta2) * gj * gj;
      const Scalar m_hat = m[j] / c1;
      const Scalar v_hat = v[j] / c2;
      p[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace dockmtl
