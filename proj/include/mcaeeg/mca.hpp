#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "mcaeeg/error.hpp"
#include "mcaeeg/features.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg {

/// softmax(Q K^T / sqrt(d_k)) V with d_k the last dimension of Q.
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  detail::require_rank(q, 2, "attention");
  detail::require_same_shape(q, k, "attention");
  detail::require_same_shape(q, v, "attention");
  const double d_k = static_cast<double>(q.dim(1));
  const Tensor scores = scale(matmul(q, transpose2d(k)), 1.0 / std::sqrt(d_k));
  return matmul(softmax_rows(scores), v);
}

/// Mutual cross-attention: each feature queries the other and the two
/// results are summed. Symmetric in its arguments.
inline Tensor mca(const Tensor& f1, const Tensor& f2) {
  detail::require_same_shape(f1, f2, "mca");
  return add(attention(f1, f2, f2), attention(f2, f1, f1));
}

/// Band-by-band MCA of a DE cube and a PSD cube (either order).
inline FeatureCube fuse_cubes(const FeatureCube& a, const FeatureCube& b) {
  const bool kinds_ok = (a.kind == FeatureKind::de && b.kind == FeatureKind::psd) ||
                        (a.kind == FeatureKind::psd && b.kind == FeatureKind::de);
  if (!kinds_ok) {
    throw InvalidArgument(std::string("fuse_cubes: need one DE and one PSD cube, got ") + to_string(a.kind) +
                          " and " + to_string(b.kind));
  }
  detail::require_rank(a.values, 3, "fuse_cubes");
  detail::require_same_shape(a.values, b.values, "fuse_cubes");
  const std::size_t channels = a.channels(), bands = a.bands(), frames = a.frames();

  FeatureCube out{FeatureKind::fused, Tensor(a.values.shape())};
  Tensor fa({channels, frames}), fb({channels, frames});
  for (std::size_t band = 0; band < bands; ++band) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < frames; ++t) {
        fa.at(c, t) = a.values.at(c, band, t);
        fb.at(c, t) = b.values.at(c, band, t);
      }
    }
    const Tensor fused = mca(fa, fb);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t t = 0; t < frames; ++t) out.values.at(c, band, t) = fused.at(c, t);
  }
  return out;
}

/// Elementwise DE + PSD, the additive fusion baseline.
inline FeatureCube sum_cubes(const FeatureCube& a, const FeatureCube& b) {
  return {FeatureKind::fused, add(a.values, b.values)};
}

/// Standardize to zero mean and unit variance over the whole cube.
inline FeatureCube zscore(const FeatureCube& cube) {
  const auto d = cube.values.data();
  const double n = static_cast<double>(d.size());
  const double mean = pairwise_sum(d) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  FeatureCube out{cube.kind, Tensor(cube.values.shape())};
  for (std::size_t i = 0; i < d.size(); ++i) out.values[i] = sd > 0.0 ? (d[i] - mean) / sd : 0.0;
  return out;
}

}  // namespace mcaeeg
