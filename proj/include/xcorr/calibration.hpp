#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcorr/common.hpp"
#include "xcorr/correlators.hpp"
#include "xcorr/parallel.hpp"
#include "xcorr/rng.hpp"
#include "xcorr/sampling.hpp"
#include "xcorr/wht.hpp"

namespace xcorr {

// Monte-Carlo estimate of the score curve: mean batch score per grid
// correlation, with its standard error.
struct CalibrationTable {
  CorrelatorSpec spec = CorrelatorSpec::linear_rectifier();
  Family family = Family::gaussian;
  bool use_wht = false;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<double> r_grid;
  std::vector<double> mean_scores;  // isotonic-projected, see build_table
  std::vector<double> std_errors;
};

// Inverse map from score to correlation: a fitted polynomial P with
// P(mean score) ~ r, valid on the score interval seen during calibration.
struct CalibrationModel {
  CorrelatorSpec spec = CorrelatorSpec::linear_rectifier();
  int degree = 0;
  std::vector<double> coefficients;  // ascending powers of the score
  double domain_lo = 0.0;
  double domain_hi = 0.0;
  double fit_residual = 0.0;  // max |P(mean_score) - r| over the table
};

// Pool-adjacent-violators projection onto nondecreasing sequences
// (uniform weights). Order-preserving cleanup for tables whose
// Monte-Carlo noise produced local inversions.
inline std::vector<double> isotonic_nondecreasing(std::span<const double> v) {
  std::vector<double> level;
  std::vector<std::size_t> count;
  level.reserve(v.size());
  count.reserve(v.size());
  for (double x : v) {
    level.push_back(x);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const std::size_t k = level.size();
      const double total = static_cast<double>(count[k - 2] + count[k - 1]);
      level[k - 2] = (level[k - 2] * static_cast<double>(count[k - 2]) +
                      level[k - 1] * static_cast<double>(count[k - 1])) /
                     total;
      count[k - 2] += count[k - 1];
      level.pop_back();
      count.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t b = 0; b < level.size(); ++b)
    out.insert(out.end(), count[b], level[b]);
  return out;
}

// Recommended fit degree: the strongly kinked MP curves need one more
// degree than the rest.
inline int default_fit_degree(const CorrelatorSpec& spec) {
  return spec.kind() == CorrelatorKind::mp ? 5 : 4;
}

inline constexpr std::size_t kDefaultCalibrationGridSize = 41;
inline constexpr double kDefaultCalibrationGridMax = 0.95;
inline constexpr std::size_t kDefaultCalibrationN = 4096;
inline constexpr std::size_t kDefaultCalibrationTrials = 200;

inline std::vector<double> default_calibration_grid() {
  return linspace(-kDefaultCalibrationGridMax, kDefaultCalibrationGridMax,
                  kDefaultCalibrationGridSize);
}

// Builds the score table by Monte Carlo. Cell (grid point, trial) draws its
// own RNG stream, so the result is bit-identical for any thread count, and
// the per-point means are reduced in fixed index order. The returned
// mean_scores are isotonic-projected; raw per-point standard errors are
// kept as std_errors.
inline CalibrationTable build_table(const CorrelatorSpec& spec,
                                    std::span<const double> r_grid,
                                    std::size_t n, std::size_t trials,
                                    std::uint64_t seed,
                                    Family family = Family::gaussian,
                                    bool use_wht = false, unsigned threads = 0) {
  if (r_grid.size() < 2)
    throw std::invalid_argument("build_table: need at least 2 grid points");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(std::abs(r_grid[i]) <= 0.99))
      throw std::domain_error("build_table: grid must lie inside [-0.99, 0.99]");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1]))
      throw std::invalid_argument("build_table: grid must be strictly increasing");
  }
  if (n < 16) throw std::invalid_argument("build_table: n must be >= 16");
  if (trials < 8) throw std::invalid_argument("build_table: trials must be >= 8");

  const std::size_t points = r_grid.size();
  std::vector<double> scores(points * trials);
  parallel_for(points * trials, threads, [&](std::size_t cell) {
    const std::size_t i = cell / trials;
    RngStream rng(seed, stream_phase::calibration + cell);
    SampleBatch batch = sample_correlated(n, r_grid[i], family, rng);
    if (use_wht) batch = transform_batch(batch);
    scores[cell] = batch_score(batch, spec);
  });

  CalibrationTable table;
  table.spec = spec;
  table.family = family;
  table.use_wht = use_wht;
  table.n = n;
  table.trials = trials;
  table.seed = seed;
  table.r_grid.assign(r_grid.begin(), r_grid.end());
  table.mean_scores.resize(points);
  table.std_errors.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    double mean = 0.0;
    for (std::size_t t = 0; t < trials; ++t) mean += scores[i * trials + t];
    mean /= static_cast<double>(trials);
    double var = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double d = scores[i * trials + t] - mean;
      var += d * d;
    }
    var /= static_cast<double>(trials - 1);
    table.mean_scores[i] = mean;
    table.std_errors[i] = std::sqrt(var / static_cast<double>(trials));
  }
  table.mean_scores = isotonic_nondecreasing(table.mean_scores);
  return table;
}

// Least-squares polynomial fit of r against the table's mean scores.
// degree < 0 picks default_fit_degree(spec).
inline CalibrationModel fit_inverse(const CalibrationTable& table,
                                    int degree = -1) {
  if (degree < 0) degree = default_fit_degree(table.spec);
  if (degree < 2 || degree > 8)
    throw std::invalid_argument("fit_inverse: degree must be in [2, 8]");
  const std::size_t points = table.r_grid.size();
  if (points < static_cast<std::size_t>(degree) + 2)
    throw std::invalid_argument("fit_inverse: need at least degree + 2 points");

  const double lo = table.mean_scores.front();
  const double hi = table.mean_scores.back();
  if (!(hi - lo > 1e-9))
    throw numeric_error("fit_inverse: score range is degenerate, curve not invertible",
                        hi - lo);

  Eigen::MatrixXd vand(points, degree + 1);
  Eigen::VectorXd target(points);
  for (std::size_t i = 0; i < points; ++i) {
    double power = 1.0;
    for (int j = 0; j <= degree; ++j) {
      vand(static_cast<Eigen::Index>(i), j) = power;
      power *= table.mean_scores[i];
    }
    target(static_cast<Eigen::Index>(i)) = table.r_grid[i];
  }
  const Eigen::VectorXd coef = vand.colPivHouseholderQr().solve(target);

  CalibrationModel model;
  model.spec = table.spec;
  model.degree = degree;
  model.coefficients.assign(coef.data(), coef.data() + degree + 1);
  model.domain_lo = lo;
  model.domain_hi = hi;
  double residual = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    double value = 0.0;
    for (int j = degree; j >= 0; --j)
      value = value * table.mean_scores[i] + model.coefficients[j];
    residual = std::max(residual, std::abs(value - table.r_grid[i]));
  }
  model.fit_residual = residual;
  return model;
}

// P(y) with y clamped to the calibrated score interval and the result
// clamped to the valid correlation range.
inline double invert(const CalibrationModel& model, double y) {
  if (model.coefficients.empty())
    throw std::invalid_argument("invert: empty model");
  y = std::clamp(y, model.domain_lo, model.domain_hi);
  double value = 0.0;
  for (int j = model.degree; j >= 0; --j)
    value = value * y + model.coefficients[j];
  return std::clamp(value, -1.0, 1.0);
}

// Full estimation pipeline: (optional) Walsh-Hadamard front end, batch
// score, fitted inverse. The model must have been calibrated for the same
// correlator it is applied to.
inline double estimate_r(const SampleBatch& batch, const CorrelatorSpec& spec,
                         const CalibrationModel& model, bool use_wht = false) {
  if (!(model.spec == spec))
    throw std::invalid_argument(
        "estimate_r: model was calibrated for '" + model.spec.to_string() +
        "', not '" + spec.to_string() + "'");
  const double score =
      use_wht ? batch_score(transform_batch(batch), spec) : batch_score(batch, spec);
  return invert(model, score);
}

inline double estimate_r(std::span<const double> xs, std::span<const double> ys,
                         const CorrelatorSpec& spec, const CalibrationModel& model,
                         bool use_wht = false) {
  SampleBatch batch;
  batch.xs.assign(xs.begin(), xs.end());
  batch.ys.assign(ys.begin(), ys.end());
  batch.effective_n = xs.size();
  return estimate_r(batch, spec, model, use_wht);
}

// ---- model persistence -------------------------------------------------
//
// Small line-oriented text format, one field per line, numbers written in
// shortest exact (round-trip) decimal form:
//
//   xcorr calibration model
//   version 1
//   spec l1
//   degree 4
//   domain <lo> <hi>
//   residual <r>
//   coefficients <count>
//   <c0>
//   ...

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelMagic = "xcorr calibration model";

inline void save_model(const CalibrationModel& model, std::ostream& out) {
  out << kModelMagic << '\n';
  out << "version " << kModelFormatVersion << '\n';
  out << "spec " << model.spec.to_string() << '\n';
  out << "degree " << model.degree << '\n';
  out << "domain " << detail::format_number(model.domain_lo) << ' '
      << detail::format_number(model.domain_hi) << '\n';
  out << "residual " << detail::format_number(model.fit_residual) << '\n';
  out << "coefficients " << model.coefficients.size() << '\n';
  for (double c : model.coefficients) out << detail::format_number(c) << '\n';
}

inline void save_model(const CalibrationModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open '" + path + "'");
  save_model(model, out);
  if (!out) throw std::runtime_error("save_model: write failed for '" + path + "'");
}

namespace detail {

inline std::string next_model_line(std::istream& in, const char* field) {
  std::string line;
  if (!std::getline(in, line))
    throw parse_error(std::string("calibration model: truncated before ") + field);
  return line;
}

// "key rest-of-line", with the key checked.
inline std::string expect_field(std::istream& in, const std::string& key) {
  const std::string line = next_model_line(in, key.c_str());
  if (line.size() < key.size() + 2 || line.compare(0, key.size(), key) != 0 ||
      line[key.size()] != ' ')
    throw parse_error("calibration model: expected '" + key + " ...', got '" +
                      line + "'");
  return line.substr(key.size() + 1);
}

}  // namespace detail

inline CalibrationModel load_model(std::istream& in) {
  const std::string magic = detail::next_model_line(in, "header");
  if (magic != kModelMagic)
    throw parse_error("calibration model: bad header line '" + magic + "'");
  const std::string version = detail::expect_field(in, "version");
  if (version != std::to_string(kModelFormatVersion))
    throw version_error("calibration model: unsupported version '" + version + "'");

  CalibrationModel model;
  model.spec = CorrelatorSpec::parse(detail::expect_field(in, "spec"));
  model.degree = static_cast<int>(
      detail::parse_number(detail::expect_field(in, "degree"), "model degree"));
  if (model.degree < 0 || model.degree > 32)
    throw parse_error("calibration model: implausible degree " +
                      std::to_string(model.degree));
  {
    const std::string domain = detail::expect_field(in, "domain");
    const auto parts = detail::split(domain, ' ');
    if (parts.size() != 2)
      throw parse_error("calibration model: bad domain line '" + domain + "'");
    model.domain_lo = detail::parse_number(parts[0], "model domain");
    model.domain_hi = detail::parse_number(parts[1], "model domain");
  }
  model.fit_residual =
      detail::parse_number(detail::expect_field(in, "residual"), "model residual");
  const std::size_t count = static_cast<std::size_t>(detail::parse_number(
      detail::expect_field(in, "coefficients"), "coefficient count"));
  if (count != static_cast<std::size_t>(model.degree) + 1)
    throw parse_error("calibration model: coefficient count does not match degree");
  model.coefficients.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    model.coefficients[i] = detail::parse_number(
        detail::next_model_line(in, "coefficient"), "model coefficient");
  return model;
}

inline CalibrationModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace xcorr
