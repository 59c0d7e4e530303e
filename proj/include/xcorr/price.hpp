#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "xcorr/common.hpp"
#include "xcorr/correlators.hpp"

namespace xcorr {

// Expected-score theory for PWL mixture correlators driven by standardized
// jointly Gaussian inputs with correlation r. Differentiating the expected
// score under the Gaussian density (Price's theorem) collapses to
//
//   dg/dr = sum_l w_l [ k(sqrt(1+r); alpha_l) + k(sqrt(1-r); alpha_l) ],
//   k(t; a) = exp(-a^2 / (4 t^2)) / (sqrt(pi) t),
//
// and g(r) is recovered by integrating the slope from 0.

inline double dg_dr(double r, const PwlMixture& m) {
  validate(m);
  if (!(std::abs(r) < 1.0)) throw std::domain_error("dg_dr: |r| must be < 1");
  const double sp = 1.0 + r;
  const double sm = 1.0 - r;
  const double cp = 1.0 / std::sqrt(std::numbers::pi * sp);
  const double cm = 1.0 / std::sqrt(std::numbers::pi * sm);
  double acc = 0.0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double a2 = m.offsets[l] * m.offsets[l];
    acc += m.weights[l] *
           (cp * std::exp(-a2 / (4.0 * sp)) + cm * std::exp(-a2 / (4.0 * sm)));
  }
  return acc;
}

namespace detail {

// sum_l w_l exp(-alpha_l^2 / (4 t^2)): the slope integrand after the
// substitutions t = sqrt(1 + rho) and t = sqrt(1 - rho). Smooth on t > 0;
// the t = 0 limit (reached only at rho = +/-1) is the weight mass sitting
// at alpha = 0, and needs a guard because 0/0 would otherwise produce NaN.
inline double offset_kernel(const PwlMixture& m, double t) {
  double acc = 0.0;
  if (t == 0.0) {
    for (std::size_t l = 0; l < m.weights.size(); ++l)
      if (m.offsets[l] == 0.0) acc += m.weights[l];
    return acc;
  }
  const double inv = 1.0 / (4.0 * t * t);
  for (std::size_t l = 0; l < m.weights.size(); ++l)
    acc += m.weights[l] * std::exp(-m.offsets[l] * m.offsets[l] * inv);
  return acc;
}

// Adaptive Simpson with Richardson correction. Leaves that bottom out on
// the depth cap report their unmet error estimate through `overrun`.
template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, int depth,
                    double& overrun) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = (left + right - whole) / 15.0;
  if (std::abs(err) <= tol || depth <= 0) {
    if (depth <= 0 && !(std::abs(err) <= tol)) overrun += std::abs(err);
    return left + right + err;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1,
                      overrun) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1,
                      overrun);
}

template <class F>
double integrate(const F& f, double a, double b, double tol, double& overrun) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, tol, overrun);
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 48, overrun);
}

}  // namespace detail

// Integral of dg/dr over [r0, r1]. Substituting t = sqrt(1 + rho) in the
// first slope term and u = sqrt(1 - rho) in the second removes the
// 1/sqrt(1 -+ rho) endpoint singularities entirely, so plain adaptive
// quadrature of the smooth kernel is enough even with |r| = 1 as a bound:
//
//   int_{r0}^{r1} dg = 2/sqrt(pi) * [ int_{sqrt(1+r0)}^{sqrt(1+r1)} k
//                                   + int_{sqrt(1-r1)}^{sqrt(1-r0)} k ].
inline double g_segment(double r0, double r1, const PwlMixture& m,
                        double tol = 1e-9) {
  validate(m);
  if (!(std::abs(r0) <= 1.0 && std::abs(r1) <= 1.0))
    throw std::domain_error("g_segment: bounds must be within [-1, 1]");
  if (!(tol > 0.0)) throw std::invalid_argument("g_segment: tol must be positive");
  const auto kernel = [&m](double t) { return detail::offset_kernel(m, t); };
  double overrun = 0.0;
  const double plus = detail::integrate(kernel, std::sqrt(1.0 + r0),
                                        std::sqrt(1.0 + r1), 0.5 * tol, overrun);
  const double minus = detail::integrate(kernel, std::sqrt(1.0 - r1),
                                         std::sqrt(1.0 - r0), 0.5 * tol, overrun);
  if (overrun > tol)
    throw numeric_error("g_segment: quadrature did not converge", overrun);
  return 2.0 * std::numbers::inv_sqrtpi * (plus + minus);
}

// Expected score g(r) = int_0^r dg, to absolute tolerance tol.
inline double g_of_r(double r, const PwlMixture& m, double tol = 1e-9) {
  return g_segment(0.0, r, m, tol);
}

// Closed form for the single-hinge correlator at alpha = 0
// (f(x, y) = |x + y| - |x - y|).
inline double g_l1_closed(double r) {
  if (!(std::abs(r) <= 1.0))
    throw std::domain_error("g_l1_closed: |r| must be <= 1");
  return 2.0 * std::numbers::inv_sqrtpi *
         (std::sqrt(1.0 + r) - std::sqrt(1.0 - r));
}

// Limit curve of the dense equal-weight mixture with offsets filling [0, c]:
// the expected score degenerates to the scaled product correlator.
inline double g_l2_closed(double r, double c) {
  if (!(std::abs(r) <= 1.0))
    throw std::domain_error("g_l2_closed: |r| must be <= 1");
  if (!(c > 0.0)) throw std::invalid_argument("g_l2_closed: c must be positive");
  return 2.0 * r / c;
}

// Algebraic inverse of g_l1_closed, squared: for y = g_l1_closed(r),
// r^2 = (pi/4) y^2 - (pi^2/64) y^4. Valid for |y| up to g_l1_closed(1).
inline double l1_quartic_identity(double y) {
  if (!(std::abs(y) <= g_l1_closed(1.0)))
    throw std::domain_error("l1_quartic_identity: |y| exceeds the l1 score range");
  const double y2 = y * y;
  constexpr double pi = std::numbers::pi;
  return (pi / 4.0) * y2 - (pi * pi / 64.0) * y2 * y2;
}

struct GCurve {
  PwlMixture mixture;
  std::vector<double> r_grid;
  std::vector<double> g_values;
};

// Tabulates g over a strictly increasing grid in one pass, integrating only
// between neighbouring grid points. Per-segment tolerance is deliberately
// tighter than g_of_r's default since segment errors accumulate along the
// grid.
inline GCurve build_gcurve(const PwlMixture& m, std::span<const double> r_grid,
                           double segment_tol = 1e-11) {
  validate(m);
  if (r_grid.empty()) throw std::invalid_argument("build_gcurve: empty grid");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(std::abs(r_grid[i]) <= 1.0))
      throw std::domain_error("build_gcurve: grid must lie within [-1, 1]");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1]))
      throw std::invalid_argument("build_gcurve: grid must be strictly increasing");
  }
  GCurve curve{m, {r_grid.begin(), r_grid.end()}, {}};
  curve.g_values.resize(r_grid.size());
  curve.g_values[0] = g_segment(0.0, r_grid[0], m, segment_tol);
  for (std::size_t i = 1; i < r_grid.size(); ++i)
    curve.g_values[i] =
        curve.g_values[i - 1] + g_segment(r_grid[i - 1], r_grid[i], m, segment_tol);
  return curve;
}

inline GCurve build_gcurve(const PwlMixture& m) {
  const auto grid = linspace(-0.99, 0.99, 199);
  return build_gcurve(m, grid);
}

}  // namespace xcorr
