#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "dockmtl/dataset.hpp"

namespace dockmtl {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Number of predicted hits for a cutoff fraction p of n compounds: ceil(p*n),
// with products that are integers up to rounding noise taken as exact.
inline std::size_t cutoff_count(double p, std::size_t n) {
  const double x = p * static_cast<double>(n);
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(x));
}

// Indices of the `count` best scores; ties go to the lower index.
inline std::vector<std::size_t> top_indices(std::span<const double> scores, HitDirection dir, std::size_t count) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, idx.size());
  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return better(dir, scores[a], scores[b]);
    return a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), before);
  idx.resize(count);
  std::sort(idx.begin(), idx.end(), before);
  return idx;
}

struct ScreenResult {
  std::vector<double> truth;
  std::vector<double> predicted;
  HitDirection direction = HitDirection::lower_is_better;
  std::size_t k = 0;          // number of true virtual hits
  double cutoff_fraction = 0;  // fraction of predictions taken as predicted hits
};

// |true top-k  ∩  predicted top-ceil(p n)| / k
inline double recall_at(const ScreenResult& r) {
  const std::size_t n = r.truth.size();
  if (r.predicted.size() != n) throw MetricError("recall_at: truth and prediction lengths differ");
  if (r.k == 0 || r.k > n) throw MetricError("recall_at: k must lie in 1..n");
  if (!(r.cutoff_fraction > 0 && r.cutoff_fraction < 1)) throw MetricError("recall_at: cutoff fraction must lie in (0, 1)");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(r.truth[i]) || std::isnan(r.predicted[i])) throw MetricError("recall_at: NaN score");
  }
  const auto true_hits = top_indices(r.truth, r.direction, r.k);
  const auto predicted_hits = top_indices(r.predicted, r.direction, cutoff_count(r.cutoff_fraction, n));
  std::vector<std::uint8_t> is_predicted(n, 0);
  for (auto i : predicted_hits) is_predicted[i] = 1;
  std::size_t tp = 0;
  for (auto i : true_hits) tp += is_predicted[i];
  return static_cast<double>(tp) / static_cast<double>(r.k);
}

inline double recall_at(std::span<const double> truth, std::span<const double> predicted, HitDirection dir,
                        std::size_t k, double cutoff_fraction) {
  return recall_at(ScreenResult{{truth.begin(), truth.end()}, {predicted.begin(), predicted.end()}, dir, k, cutoff_fraction});
}

struct ConcordanceCounts {
  std::uint64_t concordant = 0;  // pairs with y_k > y_l and pred_k > pred_l
  std::uint64_t comparable = 0;  // pairs with y_k > y_l
};

// O(n log n) pair counting: sweep in increasing truth, query a Fenwick tree
// over prediction ranks for strictly smaller predictions.
inline ConcordanceCounts concordance_counts(std::span<const double> y, std::span<const double> pred) {
  const std::size_t n = y.size();
  if (pred.size() != n) throw MetricError("concordance_index: lengths differ");
  std::vector<double> sorted_pred(pred.begin(), pred.end());
  std::sort(sorted_pred.begin(), sorted_pred.end());
  sorted_pred.erase(std::unique(sorted_pred.begin(), sorted_pred.end()), sorted_pred.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(sorted_pred.begin(), sorted_pred.end(), pred[i]) -
                                       sorted_pred.begin());
  }
  std::vector<std::uint64_t> tree(sorted_pred.size() + 1, 0);
  auto insert = [&](std::size_t r) {
    for (std::size_t i = r + 1; i < tree.size(); i += i & (~i + 1)) ++tree[i];
  };
  auto count_below = [&](std::size_t r) {  // number inserted with rank < r
    std::uint64_t s = 0;
    for (std::size_t i = r; i > 0; i -= i & (~i + 1)) s += tree[i];
    return s;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });

  ConcordanceCounts c;
  std::uint64_t inserted = 0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi < n && y[order[hi]] == y[order[lo]]) ++hi;
    for (std::size_t i = lo; i < hi; ++i) {
      c.comparable += inserted;
      c.concordant += count_below(rank[order[i]]);
    }
    for (std::size_t i = lo; i < hi; ++i) insert(rank[order[i]]);
    inserted += hi - lo;
    lo = hi;
  }
  return c;
}

// sum 1[pred_k > pred_l] 1[y_k > y_l] / sum 1[y_k > y_l]; tied predictions
// earn no credit.
inline double concordance_index(std::span<const double> y, std::span<const double> pred) {
  if (y.size() < 2) throw MetricError("concordance_index: at least 2 samples required");
  const ConcordanceCounts c = concordance_counts(y, pred);
  if (c.comparable == 0) throw MetricError("concordance_index: all true values are equal");
  return static_cast<double>(c.concordant) / static_cast<double>(c.comparable);
}

inline double pearson(std::span<const double> y, std::span<const double> pred) {
  const std::size_t n = y.size();
  if (pred.size() != n) throw MetricError("pearson: lengths differ");
  if (n < 2) throw MetricError("pearson: at least 2 samples required");
  double my = 0, mp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    my += y[i];
    mp += pred[i];
  }
  my /= static_cast<double>(n);
  mp /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = y[i] - my, b = pred[i] - mp;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0 || syy == 0) throw MetricError("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

inline double mse(std::span<const double> y, std::span<const double> pred) {
  if (pred.size() != y.size()) throw MetricError("mse: lengths differ");
  if (y.empty()) throw MetricError("mse: no samples");
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - pred[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

// -log10 of a molar IC50.
inline double pchembl(double ic50_molar) {
  if (!(ic50_molar > 0) || !std::isfinite(ic50_molar)) throw MetricError("pchembl: IC50 must be positive and finite");
  return -std::log10(ic50_molar);
}

}  // namespace dockmtl
