#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dockmtl/tensor.hpp"

namespace dockmtl {

struct GradCheckResult {
  Scalar max_relative_error = 0;
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
  Scalar analytic_at_worst = 0;
  Scalar numeric_at_worst = 0;
  std::size_t elements_checked = 0;
};

// Compares tape gradients of a scalar function against central finite
// differences. `f` must build its graph from tape.leaf(*inputs[i]) so the
// perturbations are seen. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult grad_check(const std::function<Var(Tape&)>& f, std::span<Tensor* const> inputs,
                                  Scalar h = 1e-5, Scalar floor = 1e-6) {
  std::vector<bool> previous(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    previous[i] = inputs[i]->requires_grad;
    inputs[i]->requires_grad = true;
  }

  std::vector<Tensor> analytic;
  {
    Tape tape;
    const Var out = f(tape);
    tape.backward(out);
    for (Tensor* in : inputs) {
      const Tensor* g = tape.grad_of(*in);
      analytic.push_back(g ? *g : Tensor(in->shape(), 0.0));
    }
  }

  auto evaluate = [&]() {
    Tape tape(false);
    return tape.value(f(tape)).item();
  };

  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor& x = *inputs[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const Scalar saved = x[j];
      x[j] = saved + h;
      const Scalar up = evaluate();
      x[j] = saved - h;
      const Scalar down = evaluate();
      x[j] = saved;
      const Scalar numeric = (up - down) / (2 * h);
      const Scalar a = analytic[i][j];
      const Scalar denom = std::max({std::abs(a), std::abs(numeric), floor});
      const Scalar rel = std::abs(a - numeric) / denom;
      ++result.elements_checked;
      if (rel > result.max_relative_error || result.elements_checked == 1) {
        result.max_relative_error = rel;
        result.worst_input = i;
        result.worst_element = j;
        result.analytic_at_worst = a;
        result.numeric_at_worst = numeric;
      }
    }
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i]->requires_grad = previous[i];
  return result;
}

}  // namespace dockmtl
