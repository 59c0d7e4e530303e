#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "xcorr/calibration.hpp"
#include "xcorr/common.hpp"
#include "xcorr/correlators.hpp"
#include "xcorr/parallel.hpp"
#include "xcorr/rng.hpp"
#include "xcorr/sampling.hpp"

namespace xcorr {

// Fisher information of the correlation parameter of a standardized
// bivariate Gaussian pair: (1 + r^2) / (1 - r^2)^2 per sample.
inline double fisher_info(double r) {
  if (!(std::abs(r) < 1.0))
    throw std::domain_error("fisher_info: |r| must be < 1");
  const double r2 = r * r;
  const double d = 1.0 - r2;
  return (1.0 + r2) / (d * d);
}

// Cramer-Rao lower bound on the standard deviation of any unbiased
// estimator of r from n iid pairs.
inline double crb_sigma(double r, std::size_t n) {
  if (n == 0) throw std::invalid_argument("crb_sigma: n must be positive");
  return 1.0 / std::sqrt(static_cast<double>(n) * fisher_info(r));
}

// SNR convention used throughout: 20 log10(1 / sigma_bar), sigma_bar being
// the error standard deviation averaged uniformly over the r grid.
inline double snr_db(double sigma_bar) {
  if (!(sigma_bar > 0.0))
    throw std::invalid_argument("snr_db: sigma_bar must be positive");
  return -20.0 * std::log10(sigma_bar);
}

struct SweepResult {
  CorrelatorSpec spec = CorrelatorSpec::linear_rectifier();
  Family family = Family::gaussian;
  bool use_wht = false;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<double> r_grid;
  std::vector<std::size_t> n_values;
  // indexed [n_idx][r_idx]
  std::vector<std::vector<double>> sigma;
  std::vector<std::vector<double>> sigma_se;  // bootstrap standard error
  std::vector<std::vector<double>> crb;
  std::vector<double> snr_db_values;  // one per n
};

inline constexpr std::size_t kBootstrapResamples = 200;

inline std::vector<double> default_sweep_grid() { return linspace(-0.9, 0.9, 19); }

inline std::vector<std::size_t> default_snr_n_values() {
  return {16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
}

namespace detail {

// Sample standard deviation (n - 1 denominator) about the sample mean, so a
// calibration bias shifts the mean without inflating the spread.
inline double sample_std(std::span<const double> v) {
  const std::size_t n = v.size();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(n - 1));
}

// Bootstrap standard error of sample_std under resampling with replacement.
inline double bootstrap_std_se(std::span<const double> v, RngStream& rng) {
  std::vector<double> resample(v.size());
  std::vector<double> stats(kBootstrapResamples);
  for (std::size_t b = 0; b < kBootstrapResamples; ++b) {
    for (std::size_t i = 0; i < v.size(); ++i)
      resample[i] = v[rng.next_u64() % v.size()];
    stats[b] = sample_std(resample);
  }
  return sample_std(stats);
}

}  // namespace detail

// Error spread of the calibrated estimator at one batch size: for every
// grid correlation, the sample standard deviation of estimate_r() - r over
// fresh batches, plus a bootstrap SE for that spread and the matching CRB.
// `stream_block` offsets the RNG cells so multi-n sweeps never reuse draws.
inline SweepResult error_std_sweep(const CorrelatorSpec& spec,
                                   const CalibrationModel& model, Family family,
                                   std::span<const double> r_grid, std::size_t n,
                                   std::size_t trials, std::uint64_t seed,
                                   bool use_wht = false, unsigned threads = 0,
                                   std::uint64_t stream_block = 0) {
  if (r_grid.empty()) throw std::invalid_argument("error_std_sweep: empty grid");
  for (double r : r_grid)
    if (!(std::abs(r) < 1.0))
      throw std::domain_error("error_std_sweep: grid must lie inside (-1, 1)");
  if (n == 0) throw std::invalid_argument("error_std_sweep: n must be positive");
  if (trials < 8)
    throw std::invalid_argument("error_std_sweep: trials must be >= 8");

  const std::size_t points = r_grid.size();
  std::vector<double> errors(points * trials);
  parallel_for(points * trials, threads, [&](std::size_t cell) {
    const std::size_t i = cell / trials;
    RngStream rng(seed, stream_phase::sweep + stream_block + cell);
    const SampleBatch batch = sample_correlated(n, r_grid[i], family, rng);
    errors[cell] = estimate_r(batch, spec, model, use_wht) - r_grid[i];
  });

  SweepResult result;
  result.spec = spec;
  result.family = family;
  result.use_wht = use_wht;
  result.trials = trials;
  result.seed = seed;
  result.r_grid.assign(r_grid.begin(), r_grid.end());
  result.n_values = {n};
  result.sigma.resize(1);
  result.sigma_se.resize(1);
  result.crb.resize(1);
  result.sigma[0].resize(points);
  result.sigma_se[0].resize(points);
  result.crb[0].resize(points);
  double sigma_sum = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const std::span<const double> cell_errors(errors.data() + i * trials, trials);
    result.sigma[0][i] = detail::sample_std(cell_errors);
    RngStream boot(seed, stream_phase::bootstrap + stream_block + i * trials);
    result.sigma_se[0][i] = detail::bootstrap_std_se(cell_errors, boot);
    result.crb[0][i] = crb_sigma(r_grid[i], n);
    sigma_sum += result.sigma[0][i];
  }
  result.snr_db_values = {snr_db(sigma_sum / static_cast<double>(points))};
  return result;
}

// error_std_sweep across a set of batch sizes; one SNR value per n.
inline SweepResult snr_sweep(const CorrelatorSpec& spec,
                             const CalibrationModel& model, Family family,
                             std::span<const std::size_t> n_values,
                             std::span<const double> r_grid, std::size_t trials,
                             std::uint64_t seed, bool use_wht = false,
                             unsigned threads = 0) {
  if (n_values.empty())
    throw std::invalid_argument("snr_sweep: need at least one batch size");

  SweepResult result;
  result.spec = spec;
  result.family = family;
  result.use_wht = use_wht;
  result.trials = trials;
  result.seed = seed;
  result.r_grid.assign(r_grid.begin(), r_grid.end());
  result.n_values.assign(n_values.begin(), n_values.end());
  const std::uint64_t block_size = r_grid.size() * trials;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    const SweepResult row =
        error_std_sweep(spec, model, family, r_grid, n_values[k], trials, seed,
                        use_wht, threads, k * block_size);
    result.sigma.push_back(row.sigma[0]);
    result.sigma_se.push_back(row.sigma_se[0]);
    result.crb.push_back(row.crb[0]);
    result.snr_db_values.push_back(row.snr_db_values[0]);
  }
  return result;
}

}  // namespace xcorr
