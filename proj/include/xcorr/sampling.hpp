#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xcorr/common.hpp"
#include "xcorr/correlators.hpp"
#include "xcorr/rng.hpp"

namespace xcorr {

// Marginal law of the raw draws before mixing. Every family is standardized
// analytically to zero mean and unit variance, so the linear mixing below
// yields Pearson correlation exactly r for each of them.
enum class Family { gaussian, uniform, gamma, mixed };

inline std::string family_to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::uniform: return "uniform";
    case Family::gamma: return "gamma";
    case Family::mixed: return "mixed";
  }
  throw std::logic_error("family_to_string: unreachable");
}

inline Family family_from_string(std::string_view s) {
  if (s == "gaussian") return Family::gaussian;
  if (s == "uniform") return Family::uniform;
  if (s == "gamma") return Family::gamma;
  if (s == "mixed") return Family::mixed;
  throw parse_error("unknown family '" + std::string(s) + "'");
}

struct SampleBatch {
  std::vector<double> xs;
  std::vector<double> ys;
  Family family = Family::gaussian;
  double true_r = 0.0;
  std::uint64_t seed = 0;
  // Normalization length for score averaging. Equals xs.size() except after
  // zero-padding, where it keeps the original sample count.
  std::size_t effective_n = 0;
};

namespace detail {

inline double draw_standardized(Family f, RngStream& rng) {
  switch (f) {
    case Family::gaussian:
      return rng.next_gaussian();
    case Family::uniform:
      // uniform on [-sqrt(3), sqrt(3)]
      return std::numbers::sqrt3 * (2.0 * rng.next_unit() - 1.0);
    case Family::gamma: {
      // shape 2, scale 1, drawn exactly as a sum of two exponentials,
      // then centred and scaled; skewness sqrt(2) survives the transform
      const double g = -std::log(rng.next_unit()) - std::log(rng.next_unit());
      return (g - 2.0) / std::numbers::sqrt2;
    }
    case Family::mixed: {
      const double u = rng.next_unit();
      const Family pick = u < 1.0 / 3.0   ? Family::uniform
                          : u < 2.0 / 3.0 ? Family::gaussian
                                          : Family::gamma;
      return draw_standardized(pick, rng);
    }
  }
  throw std::logic_error("draw_standardized: unreachable");
}

}  // namespace detail

// Correlated pair stream: x = s1, y = r s1 + sqrt(1 - r^2) s2 with s1, s2
// iid standardized draws from the family. For the Gaussian family the pair
// is exactly bivariate normal; for the others y is a two-component blend
// whose correlation with x is still exactly r.
inline SampleBatch sample_correlated(std::size_t n, double r, Family family,
                                     RngStream& rng) {
  if (n == 0) throw std::invalid_argument("sample_correlated: n must be positive");
  if (!(std::abs(r) <= 1.0))
    throw std::domain_error("sample_correlated: |r| must be <= 1");
  SampleBatch batch;
  batch.xs.resize(n);
  batch.ys.resize(n);
  batch.family = family;
  batch.true_r = r;
  batch.seed = rng.seed();
  batch.effective_n = n;
  const double blend = std::sqrt(1.0 - r * r);
  for (std::size_t i = 0; i < n; ++i) {
    const double s1 = detail::draw_standardized(family, rng);
    const double s2 = detail::draw_standardized(family, rng);
    batch.xs[i] = s1;
    batch.ys[i] = r * s1 + blend * s2;
  }
  return batch;
}

inline SampleBatch sample_bivariate_gaussian(std::size_t n, double r,
                                             RngStream& rng) {
  return sample_correlated(n, r, Family::gaussian, rng);
}

// Score of a batch, normalized by effective_n so zero-padded (transformed)
// batches average over the original sample count.
inline double batch_score(const SampleBatch& batch, const CorrelatorSpec& spec) {
  if (batch.xs.size() != batch.ys.size())
    throw std::invalid_argument("batch_score: length mismatch");
  if (batch.xs.empty()) throw std::invalid_argument("batch_score: empty batch");
  if (batch.effective_n == 0)
    throw std::invalid_argument("batch_score: effective_n must be positive");
  return detail::sum_pair_scores(batch.xs, batch.ys, spec) /
         static_cast<double>(batch.effective_n);
}

// Shifts to zero mean and scales to unit variance (denominator n, not n-1).
inline std::vector<double> standardize(std::span<const double> values) {
  if (values.size() < 2)
    throw std::invalid_argument("standardize: need at least 2 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0) || !std::isfinite(var))
    throw std::invalid_argument("standardize: degenerate input (zero variance)");
  const double inv_sd = 1.0 / std::sqrt(var);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = (values[i] - mean) * inv_sd;
  return out;
}

// Plain Pearson sample correlation; handy as the reference estimator.
inline double sample_correlation(std::span<const double> xs,
                                 std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("sample_correlation: length mismatch");
  if (xs.size() < 2)
    throw std::invalid_argument("sample_correlation: need at least 2 pairs");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw std::invalid_argument("sample_correlation: degenerate input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace xcorr
