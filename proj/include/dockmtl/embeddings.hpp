#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dockmtl/gin.hpp"

namespace dockmtl {

// Mean-readout graph embedding of every compound (eval mode), n x d.
inline Tensor export_embeddings(const ModelParams& params, std::span<const FeaturizedGraph> graphs,
                                std::size_t batch_size = 128) {
  const std::size_t d = params.config.embed_dim;
  Tensor out = Tensor::matrix(graphs.size(), d);
  for (std::size_t lo = 0; lo < graphs.size(); lo += batch_size) {
    const std::size_t hi = std::min(graphs.size(), lo + batch_size);
    const Tensor z = embed_values(make_batch(graphs.subspan(lo, hi - lo)), params);
    std::copy(z.data().begin(), z.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(lo * d));
  }
  return out;
}

// id,smiles,z0,...,z{d-1}; values printed with 17 significant digits.
inline void write_embeddings_csv(std::ostream& os, const std::vector<std::string>& smiles, const Tensor& z) {
  const auto old_precision = os.precision(17);
  os << "id,smiles";
  for (std::size_t j = 0; j < z.cols(); ++j) os << ",z" << j;
  os << '\n';
  for (std::size_t i = 0; i < z.rows(); ++i) {
    os << i << ',' << smiles[i];
    for (std::size_t j = 0; j < z.cols(); ++j) os << ',' << z(i, j);
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace dockmtl
