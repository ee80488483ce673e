#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dockmtl/rng.hpp"

namespace dockmtl {

using Scalar = double;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major array. Every tensor the model touches is a matrix; a
// scalar is 1x1 and a vector is 1xn.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, Scalar fill = 0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) throw ShapeError("tensor data does not match its shape");
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, Scalar fill = 0) { return Tensor({rows, cols}, fill); }
  static Tensor scalar(Scalar v) { return Tensor({1, 1}, std::vector<Scalar>{v}); }
  static Tensor row(std::vector<Scalar> values) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
  }

  [[nodiscard]] const std::vector<std::size_t>& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  [[nodiscard]] std::size_t cols() const { return rows() == 0 ? 0 : data_.size() / rows(); }

  [[nodiscard]] std::span<Scalar> data() { return data_; }
  [[nodiscard]] std::span<const Scalar> data() const { return data_; }
  [[nodiscard]] std::vector<Scalar>& storage() { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }
  Scalar& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Scalar operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  [[nodiscard]] Scalar item() const {
    if (data_.size() != 1) throw ShapeError("item() on a non-scalar tensor");
    return data_[0];
  }

  [[nodiscard]] bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  [[nodiscard]] bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
  }

  void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

  bool requires_grad = false;

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

 private:
  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> shape_;
  std::vector<Scalar> data_;
};

struct Var {
  std::uint32_t id = 0;
};

// Records primitive ops in execution order; backward() replays them in
// reverse, accumulating gradients additively. A tape built with
// record=false only evaluates values.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  [[nodiscard]] bool recording() const { return record_; }

  Var constant(Tensor value) { return push_node(std::move(value), nullptr, false); }

  // References an external tensor (a model parameter) without copying it.
  // Repeated calls with the same tensor return the same Var.
  Var leaf(const Tensor& t) {
    if (auto it = leaves_.find(&t); it != leaves_.end()) return it->second;
    Node n;
    n.external = &t;
    n.requires_grad = record_ && t.requires_grad;
    nodes_.push_back(std::move(n));
    Var v{static_cast<std::uint32_t>(nodes_.size() - 1)};
    leaves_.emplace(&t, v);
    return v;
  }

  [[nodiscard]] const Tensor& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.external ? *n.external : n.value;
  }

  [[nodiscard]] bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  [[nodiscard]] const Tensor* grad(Var v) const {
    const Node& n = nodes_[v.id];
    return n.has_grad ? &n.grad : nullptr;
  }

  [[nodiscard]] const Tensor* grad_of(const Tensor& external) const {
    auto it = leaves_.find(&external);
    return it == leaves_.end() ? nullptr : grad(it->second);
  }

  void backward(Var loss) {
    if (!record_) throw std::logic_error("backward() on a non-recording tape");
    if (value(loss).size() != 1) throw ShapeError("backward() needs a scalar loss");
    if (!nodes_[loss.id].requires_grad) return;
    grad_ref(loss).fill(1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.has_grad) n.backward(*this);
    }
  }

  // Op construction interface.
  using BackwardFn = std::function<void(Tape&)>;

  Var push(Tensor value, bool requires_grad, BackwardFn fn) {
    const bool rg = record_ && requires_grad;
    return push_node(std::move(value), rg ? std::move(fn) : nullptr, rg);
  }

  // Gradient buffer of v, zero-initialised on first use.
  Tensor& grad_ref(Var v) {
    Node& n = nodes_[v.id];
    if (!n.has_grad) {
      n.grad = Tensor(value(v).shape(), 0.0);
      n.has_grad = true;
    }
    return n.grad;
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push_node(Tensor value, BackwardFn fn, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, Var> leaves_;
};

namespace ops {

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

// c[m x n] += a[m x k] * b[k x n]
inline void gemm_nn(std::span<const Scalar> a, std::span<const Scalar> b, std::span<Scalar> c, std::size_t m,
                    std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    Scalar* crow = c.data() + i * n;
    const Scalar* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Scalar av = arow[p];
      if (av == 0) continue;
      const Scalar* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m x k] += a[m x n] * b[k x n]^T. b is transposed once so the inner loop
// is a contiguous axpy the compiler can vectorize.
inline void gemm_nt(std::span<const Scalar> a, std::span<const Scalar> b, std::span<Scalar> c, std::size_t m,
                    std::size_t n, std::size_t k) {
  std::vector<Scalar> bt(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  gemm_nn(a, bt, c, m, n, k);
}

// c[k x n] += a[m x k]^T * b[m x n]
inline void gemm_tn(std::span<const Scalar> a, std::span<const Scalar> b, std::span<Scalar> c, std::size_t m,
                    std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Scalar* arow = a.data() + i * k;
    const Scalar* brow = b.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Scalar av = arow[p];
      if (av == 0) continue;
      Scalar* crow = c.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

inline Var matmul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  detail::require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::matrix(m, n);
  detail::gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), rg, [a, b, o, m, k, n](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    if (tp.requires_grad(a)) detail::gemm_nt(g.data(), tp.value(b).data(), tp.grad_ref(a).data(), m, n, k);
    if (tp.requires_grad(b)) detail::gemm_tn(tp.value(a).data(), g.data(), tp.grad_ref(b).data(), m, k, n);
  });
}

inline Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  detail::require(av.same_shape(bv), "add: shapes differ");
  Tensor out = av;
  out.requires_grad = false;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b, o](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    for (Var in : {a, b}) {
      if (!tp.requires_grad(in)) continue;
      Tensor& gi = tp.grad_ref(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

// Adds a 1 x n row to every row of an m x n matrix (bias add).
inline Var add_row(Tape& t, Var a, Var row) {
  const Tensor& av = t.value(a);
  const Tensor& rv = t.value(row);
  detail::require(rv.rows() == 1 && rv.cols() == av.cols(), "add_row: row width differs");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out = av;
  out.requires_grad = false;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += rv[j];
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(row), [a, row, o, m, n](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_ref(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.requires_grad(row)) {
      Tensor& gr = tp.grad_ref(row);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
    }
  });
}

// Elementwise product.
inline Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  detail::require(av.same_shape(bv), "mul: shapes differ");
  Tensor out = av;
  out.requires_grad = false;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b, o](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_ref(a);
      const Tensor& bv = tp.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_ref(b);
      const Tensor& av = tp.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

inline Var scale(Tape& t, Var a, Scalar s) {
  Tensor out = t.value(a);
  out.requires_grad = false;
  for (auto& x : out.data()) x *= s;
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a), [a, o, s](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

inline Var sum(Tape& t, Var a) {
  const Tensor& av = t.value(a);
  Scalar s = 0;
  for (Scalar x : av.data()) s += x;
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(Tensor::scalar(s), t.requires_grad(a), [a, o](Tape& tp) {
    const Scalar g = tp.grad(o)->item();
    for (auto& x : tp.grad_ref(a).data()) x += g;
  });
}

inline Var relu(Tape& t, Var a) {
  Tensor out = t.value(a);
  out.requires_grad = false;
  for (auto& x : out.data()) x = x > 0 ? x : 0;
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a), [a, o](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    const Tensor& y = tp.value(o);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (y[i] > 0) ga[i] += g[i];
  });
}

// Inverted dropout: survivors are scaled by 1/(1-rate) at train time so
// evaluation is the identity.
inline Var dropout(Tape& t, Var a, Scalar rate, bool train, Rng rng) {
  if (!(rate >= 0 && rate < 1)) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (!train || rate == 0) return a;
  const Tensor& av = t.value(a);
  std::vector<Scalar> mask(av.size());
  const Scalar keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor out = av;
  out.requires_grad = false;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a), [a, o, mask = std::move(mask)](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

// out[i] = a[index[i]]; also serves as embedding lookup on a table.
inline Var gather_rows(Tape& t, Var a, std::vector<std::uint32_t> index) {
  const Tensor& av = t.value(a);
  const std::size_t n = av.cols();
  Tensor out = Tensor::matrix(index.size(), n);
  for (std::size_t i = 0; i < index.size(); ++i) {
    detail::require(index[i] < av.rows(), "gather_rows: index out of range");
    std::copy_n(av.data().begin() + static_cast<std::ptrdiff_t>(index[i] * n), n,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a), [a, o, n, index = std::move(index)](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < index.size(); ++i) {
      Scalar* dst = ga.data().data() + index[i] * n;
      const Scalar* src = g.data().data() + i * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
    }
  });
}

inline Var embedding_lookup(Tape& t, Var table, std::vector<std::uint32_t> index) {
  return gather_rows(t, table, std::move(index));
}

// out[s] = sum of rows i with segment[i] == s.
inline Var segment_sum(Tape& t, Var a, std::vector<std::uint32_t> segment, std::size_t segments) {
  const Tensor& av = t.value(a);
  detail::require(segment.size() == av.rows(), "segment_sum: one segment id per row required");
  const std::size_t n = av.cols();
  Tensor out = Tensor::matrix(segments, n);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    detail::require(segment[i] < segments, "segment_sum: segment id out of range");
    Scalar* dst = out.data().data() + segment[i] * n;
    const Scalar* src = av.data().data() + i * n;
    for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
  }
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(a), [a, o, n, segment = std::move(segment)](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    Tensor& ga = tp.grad_ref(a);
    for (std::size_t i = 0; i < segment.size(); ++i) {
      const Scalar* src = g.data().data() + segment[i] * n;
      Scalar* dst = ga.data().data() + i * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
    }
  });
}

inline Var segment_mean(Tape& t, Var a, std::vector<std::uint32_t> segment, std::size_t segments) {
  std::vector<Scalar> inv_count(segments, 0.0);
  for (auto s : segment) {
    detail::require(s < segments, "segment_mean: segment id out of range");
    inv_count[s] += 1;
  }
  for (auto& c : inv_count) {
    detail::require(c > 0, "segment_mean: empty segment");
    c = 1.0 / c;
  }
  const Var summed = segment_sum(t, a, std::move(segment), segments);
  const Tensor& sv = t.value(summed);
  const std::size_t n = sv.cols();
  Tensor out = sv;
  out.requires_grad = false;
  for (std::size_t s = 0; s < segments; ++s)
    for (std::size_t j = 0; j < n; ++j) out[s * n + j] *= inv_count[s];
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), t.requires_grad(summed), [summed, o, n, inv = std::move(inv_count)](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    Tensor& gs = tp.grad_ref(summed);
    for (std::size_t s = 0; s < inv.size(); ++s)
      for (std::size_t j = 0; j < n; ++j) gs[s * n + j] += g[s * n + j] * inv[s];
  });
}

// Stacks m x 1 columns side by side.
inline Var concat_cols(Tape& t, const std::vector<Var>& columns) {
  detail::require(!columns.empty(), "concat_cols: no columns");
  const std::size_t m = t.value(columns[0]).rows();
  const std::size_t k = columns.size();
  Tensor out = Tensor::matrix(m, k);
  bool rg = false;
  for (std::size_t c = 0; c < k; ++c) {
    const Tensor& cv = t.value(columns[c]);
    detail::require(cv.rows() == m && cv.cols() == 1, "concat_cols: inputs must be m x 1");
    for (std::size_t i = 0; i < m; ++i) out[i * k + c] = cv[i];
    rg = rg || t.requires_grad(columns[c]);
  }
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), rg, [columns, o, m, k](Tape& tp) {
    const Tensor& g = *tp.grad(o);
    for (std::size_t c = 0; c < k; ++c) {
      if (!tp.requires_grad(columns[c])) continue;
      Tensor& gc = tp.grad_ref(columns[c]);
      for (std::size_t i = 0; i < m; ++i) gc[i] += g[i * k + c];
    }
  });
}

struct BatchNormOptions {
  bool train = true;
  bool update_running_stats = true;
  Scalar momentum = 0.1;
  Scalar eps = 1e-5;
};

// Per-column normalization. Train mode uses batch statistics (biased
// variance) and optionally folds them into the running estimates (unbiased
// variance); eval mode uses the running estimates.
inline Var batch_norm(Tape& t, Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
                      const BatchNormOptions& opt) {
  const Tensor& xv = t.value(x);
  const std::size_t m = xv.rows(), n = xv.cols();
  detail::require(t.value(gamma).size() == n && t.value(beta).size() == n, "batch_norm: affine width differs");
  detail::require(running_mean.size() == n && running_var.size() == n, "batch_norm: running stats width differs");
  if (opt.train && m < 2) throw ShapeError("batch_norm: train mode needs at least 2 rows");

  std::vector<Scalar> mean(n, 0.0), inv_std(n, 0.0);
  if (opt.train) {
    std::vector<Scalar> var(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) mean[j] += xv[i * n + j];
    for (auto& v : mean) v /= static_cast<Scalar>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const Scalar d = xv[i * n + j] - mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < n; ++j) {
      const Scalar biased = var[j] / static_cast<Scalar>(m);
      inv_std[j] = 1.0 / std::sqrt(biased + opt.eps);
      if (opt.update_running_stats) {
        const Scalar unbiased = var[j] / static_cast<Scalar>(m - 1);
        running_mean[j] = (1 - opt.momentum) * running_mean[j] + opt.momentum * mean[j];
        running_var[j] = (1 - opt.momentum) * running_var[j] + opt.momentum * unbiased;
      }
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      mean[j] = running_mean[j];
      inv_std[j] = 1.0 / std::sqrt(running_var[j] + opt.eps);
    }
  }

  const Tensor& gv = t.value(gamma);
  const Tensor& bv = t.value(beta);
  std::vector<Scalar> xhat(m * n);
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t idx = i * n + j;
      xhat[idx] = (xv[idx] - mean[j]) * inv_std[j];
      out[idx] = gv[j] * xhat[idx] + bv[j];
    }

  const bool rg = t.requires_grad(x) || t.requires_grad(gamma) || t.requires_grad(beta);
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out), rg,
                [x, gamma, beta, o, m, n, train = opt.train, xhat = std::move(xhat),
                 inv_std = std::move(inv_std)](Tape& tp) {
                  const Tensor& g = *tp.grad(o);
                  const Tensor& gv = tp.value(gamma);
                  std::vector<Scalar> sum_g(n, 0.0), sum_gx(n, 0.0);
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                      sum_g[j] += g[i * n + j];
                      sum_gx[j] += g[i * n + j] * xhat[i * n + j];
                    }
                  if (tp.requires_grad(gamma)) {
                    Tensor& gg = tp.grad_ref(gamma);
                    for (std::size_t j = 0; j < n; ++j) gg[j] += sum_gx[j];
                  }
                  if (tp.requires_grad(beta)) {
                    Tensor& gb = tp.grad_ref(beta);
                    for (std::size_t j = 0; j < n; ++j) gb[j] += sum_g[j];
                  }
                  if (!tp.requires_grad(x)) return;
                  Tensor& gx = tp.grad_ref(x);
                  if (!train) {
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i * n + j] * gv[j] * inv_std[j];
                    return;
                  }
                  const Scalar inv_m = 1.0 / static_cast<Scalar>(m);
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                      const std::size_t idx = i * n + j;
                      // d/dxhat = g * gamma; the sums carry the same gamma factor.
                      gx[idx] += gv[j] * inv_std[j] *
                                 (g[idx] - inv_m * sum_g[j] - xhat[idx] * inv_m * sum_gx[j]);
                    }
                });
}

// Mean of squared differences over entries where mask != 0.
inline Var masked_mse_loss(Tape& t, Var pred, const Tensor& target, const Tensor& mask) {
  const Tensor& pv = t.value(pred);
  detail::require(pv.same_shape(target) && pv.same_shape(mask), "masked_mse_loss: shapes differ");
  Scalar count = 0;
  Scalar total = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (mask[i] == 0) continue;
    const Scalar d = pv[i] - target[i];
    total += d * d;
    count += 1;
  }
  if (count == 0) throw std::invalid_argument("masked_mse_loss: no labeled entries in batch");
  const Scalar inv = 1.0 / count;
  std::vector<Scalar> residual(pv.size(), 0.0);
  for (std::size_t i = 0; i < pv.size(); ++i)
    if (mask[i] != 0) residual[i] = pv[i] - target[i];
  const Var o{static_cast<std::uint32_t>(t.size())};
  return t.push(Tensor::scalar(total * inv), t.requires_grad(pred),
                [pred, o, inv, residual = std::move(residual)](Tape& tp) {
                  const Scalar g = tp.grad(o)->item();
                  Tensor& gp = tp.grad_ref(pred);
                  for (std::size_t i = 0; i < residual.size(); ++i) gp[i] += g * 2.0 * inv * residual[i];
                });
}

inline Var mse_loss(Tape& t, Var pred, const Tensor& target) {
  Tensor mask(target.shape(), 1.0);
  return masked_mse_loss(t, pred, target, mask);
}

}  // namespace ops

}  // namespace dockmtl
