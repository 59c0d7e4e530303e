#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "xcorr/sampling.hpp"

namespace xcorr {

struct WhtVector {
  std::vector<double> data;      // length is a power of two
  std::size_t original_len = 0;  // sample count before zero-padding
};

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place unitary Walsh-Hadamard transform, natural (Hadamard) ordering.
// Butterflies run unnormalized; the single 1/sqrt(n) scaling at the end
// keeps the rounding of repeated halving out of the passes. Applying the
// transform twice restores the input (the matrix is its own inverse).
inline void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!is_pow2(n))
    throw std::invalid_argument("fwht: length must be a power of two");
  for (std::size_t h = 1; h < n; h <<= 1)
    for (std::size_t i = 0; i < n; i += h << 1)
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (double& x : v) x *= scale;
}

inline std::vector<double> fwht(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  fwht_inplace(out);
  return out;
}

// Zero-pads to the next power of two (identity for power-of-two input).
inline WhtVector pad_pow2(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("pad_pow2: empty input");
  std::size_t n = 1;
  while (n < v.size()) n <<= 1;
  WhtVector out{{v.begin(), v.end()}, v.size()};
  out.data.resize(n, 0.0);
  return out;
}

// Transforms both coordinates of a batch, padding as needed. effective_n
// keeps the pre-padding sample count: the transform is unitary, so inner
// products (and with them correlation scores) are preserved only when
// downstream averaging still divides by the original length.
inline SampleBatch transform_batch(const SampleBatch& batch) {
  if (batch.xs.size() != batch.ys.size())
    throw std::invalid_argument("transform_batch: length mismatch");
  if (batch.xs.empty()) throw std::invalid_argument("transform_batch: empty batch");
  SampleBatch out;
  out.xs = pad_pow2(batch.xs).data;
  out.ys = pad_pow2(batch.ys).data;
  fwht_inplace(out.xs);
  fwht_inplace(out.ys);
  out.family = batch.family;
  out.true_r = batch.true_r;
  out.seed = batch.seed;
  out.effective_n = batch.effective_n;
  return out;
}

}  // namespace xcorr
