#include "xcorr/price.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

namespace {

using xcorr::PwlMixture;

const PwlMixture kAbs{{1.0}, {0.0}};
const PwlMixture kSingle1{{1.0}, {1.0}};
const PwlMixture kHalfHalf{{0.5, 0.5}, {0.0, 2.0}};

// Independent slow oracle: composite trapezoid over the slope with a fixed
// panel count, no substitution, no adaptivity. Only valid away from the
// |r| = 1 endpoints where the slope stays bounded.
double g_trapezoid(double r, const PwlMixture& m, std::size_t panels) {
  const double h = r / static_cast<double>(panels);
  double acc = 0.5 * (xcorr::dg_dr(0.0, m) + xcorr::dg_dr(r, m));
  for (std::size_t i = 1; i < panels; ++i)
    acc += xcorr::dg_dr(h * static_cast<double>(i), m);
  return acc * h;
}

// Second independent oracle, exact up to erfc: the kernel
// exp(-c^2 / t^2) has antiderivative t exp(-c^2/t^2) - c sqrt(pi) erfc(c/t)
// for c > 0 (and plain t for c = 0), so single-hinge segments integrate in
// closed form.
double kernel_antiderivative(double t, double alpha) {
  const double c = 0.5 * alpha;
  if (c == 0.0) return t;
  if (t == 0.0) return 0.0;  // t exp(-c^2/t^2) -> 0 and erfc(c/t) -> 0
  return t * std::exp(-c * c / (t * t)) -
         c * std::sqrt(std::numbers::pi) * std::erfc(c / t);
}

double g_segment_closed(double r0, double r1, const PwlMixture& m) {
  double acc = 0.0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double a = m.offsets[l];
    acc += m.weights[l] *
           (kernel_antiderivative(std::sqrt(1.0 + r1), a) -
            kernel_antiderivative(std::sqrt(1.0 + r0), a) +
            kernel_antiderivative(std::sqrt(1.0 - r0), a) -
            kernel_antiderivative(std::sqrt(1.0 - r1), a));
  }
  return 2.0 * std::numbers::inv_sqrtpi * acc;
}

TEST(DgDr, FrozenSlopeAtZero) {
  // both kernel terms contribute 1/sqrt(pi) when alpha = 0 and r = 0
  EXPECT_NEAR(xcorr::dg_dr(0.0, kAbs), 1.1283791670955126, 1e-15);
}

TEST(DgDr, DomainAndValidation) {
  EXPECT_THROW(xcorr::dg_dr(1.0, kAbs), std::domain_error);
  EXPECT_THROW(xcorr::dg_dr(-1.0, kAbs), std::domain_error);
  EXPECT_THROW(xcorr::dg_dr(0.0, PwlMixture{{0.7}, {0.0}}), std::invalid_argument);
}

TEST(DgDr, EvenInR) {
  for (const auto& m : {kAbs, kSingle1, kHalfHalf})
    for (double r : {0.1, 0.4, 0.85})
      EXPECT_NEAR(xcorr::dg_dr(r, m), xcorr::dg_dr(-r, m), 1e-15);
}

// For the zero-offset hinge the exponentials degenerate to 1 and the slope
// is 1/sqrt(pi(1+r)) + 1/sqrt(pi(1-r)); near r = 1 the second term blows up
// like 1/sqrt(pi eps).
TEST(DgDr, DivergenceRateNearUnitCorrelation) {
  const double r = 1.0 - 1e-6;
  const double eps = 1.0 - r;  // realized gap, not the nominal 1e-6
  const double expected = 1.0 / std::sqrt(std::numbers::pi * eps) +
                          1.0 / std::sqrt(std::numbers::pi * (2.0 - eps));
  EXPECT_NEAR(xcorr::dg_dr(r, kAbs) / expected, 1.0, 1e-12);
  EXPECT_GT(xcorr::dg_dr(r, kAbs), 500.0);
}

TEST(GOfR, MatchesTrapezoidOracle) {
  // 1e6-panel trapezoid pinned as the reference for the adaptive quadrature
  for (const auto& m : {kAbs, kSingle1, kHalfHalf}) {
    const double oracle = g_trapezoid(0.5, m, 1000000);
    EXPECT_NEAR(xcorr::g_of_r(0.5, m, 1e-10), oracle, 1e-8);
  }
}

TEST(GOfR, MatchesClosedFormL1) {
  for (double r : {-0.99, -0.5, 0.0, 0.3, 0.9, 0.99})
    EXPECT_NEAR(xcorr::g_of_r(r, kAbs, 1e-10), xcorr::g_l1_closed(r), 1e-9);
}

TEST(GOfR, HandlesUnitEndpoints) {
  EXPECT_NEAR(xcorr::g_of_r(1.0, kAbs, 1e-10), xcorr::g_l1_closed(1.0), 1e-9);
  EXPECT_NEAR(xcorr::g_of_r(-1.0, kAbs, 1e-10), xcorr::g_l1_closed(-1.0), 1e-9);
  EXPECT_NO_THROW(xcorr::g_of_r(1.0, kHalfHalf, 1e-9));
}

TEST(GSegment, MatchesErfcClosedForm) {
  const PwlMixture half{{1.0}, {0.5}};
  const PwlMixture two{{1.0}, {2.0}};
  const struct {
    double r0, r1;
  } ranges[] = {{0.0, 0.8}, {-0.5, 0.3}, {0.9, 1.0}, {-1.0, -0.2}};
  for (const auto& m : {half, two, kHalfHalf}) {
    for (const auto& seg : ranges) {
      EXPECT_NEAR(xcorr::g_segment(seg.r0, seg.r1, m, 1e-11),
                  g_segment_closed(seg.r0, seg.r1, m), 1e-9);
    }
  }
}

TEST(GSegment, Additivity) {
  const double whole = xcorr::g_segment(0.0, 0.9, kHalfHalf, 1e-11);
  const double parts = xcorr::g_segment(0.0, 0.4, kHalfHalf, 1e-11) +
                       xcorr::g_segment(0.4, 0.9, kHalfHalf, 1e-11);
  EXPECT_NEAR(whole, parts, 1e-10);
}

TEST(GSegment, OrientationAndValidation) {
  EXPECT_NEAR(xcorr::g_segment(0.2, 0.7, kAbs),
              -xcorr::g_segment(0.7, 0.2, kAbs), 1e-12);
  EXPECT_THROW(xcorr::g_segment(0.0, 1.5, kAbs), std::domain_error);
  EXPECT_THROW(xcorr::g_segment(0.0, 0.5, kAbs, 0.0), std::invalid_argument);
}

TEST(GOfR, OddInR) {
  for (const auto& m : {kAbs, kSingle1, kHalfHalf})
    for (double r : {0.2, 0.6, 0.95})
      EXPECT_NEAR(xcorr::g_of_r(-r, m, 1e-11), -xcorr::g_of_r(r, m, 1e-11), 1e-9);
}

TEST(GL1Closed, FrozenValues) {
  EXPECT_NEAR(xcorr::g_l1_closed(1.0), 1.5957691216057308, 1e-15);
  EXPECT_DOUBLE_EQ(xcorr::g_l1_closed(0.0), 0.0);
  EXPECT_NEAR(xcorr::g_l1_closed(0.5),
              2.0 * std::numbers::inv_sqrtpi *
                  (std::sqrt(1.5) - std::sqrt(0.5)),
              1e-15);
  EXPECT_THROW(xcorr::g_l1_closed(1.5), std::domain_error);
}

TEST(QuarticIdentity, ExactOnClosedFormCurve) {
  for (double r : {0.0, 0.3, -0.3, 0.8, -0.8, 1.0, -1.0})
    EXPECT_NEAR(xcorr::l1_quartic_identity(xcorr::g_l1_closed(r)), r * r, 1e-12);
  EXPECT_THROW(xcorr::l1_quartic_identity(1.6), std::domain_error);
}

// Dense equal-weight mixture with offsets filling (0, c]: the score curve
// collapses to the scaled product correlator, g(r) -> 2r/c.
TEST(EmpiricalLimit, DenseMixtureApproachesScaledProduct) {
  const std::size_t L = 4096;
  const double c = 16.0;
  PwlMixture m;
  m.weights.assign(L, 1.0 / static_cast<double>(L));
  m.offsets.resize(L);
  for (std::size_t l = 0; l < L; ++l)
    m.offsets[l] = c * static_cast<double>(l + 1) / static_cast<double>(L);
  for (double r : {-0.5, -0.2, 0.1, 0.35, 0.5}) {
    const double g = xcorr::g_of_r(r, m, 1e-9);
    EXPECT_NEAR(0.5 * c * g, r, 1e-3) << "r = " << r;
    EXPECT_NEAR(g, xcorr::g_l2_closed(r, c), 1e-3 * 2.0 / c);
  }
}

TEST(DgDr, ConsistentWithQuadratureDerivative) {
  const double h = 1e-4;
  for (const auto& m : {kAbs, kSingle1, kHalfHalf}) {
    for (double r : {0.0, 0.3, -0.3, 0.7}) {
      const double fd =
          (xcorr::g_of_r(r + h, m, 1e-12) - xcorr::g_of_r(r - h, m, 1e-12)) /
          (2.0 * h);
      EXPECT_NEAR(fd, xcorr::dg_dr(r, m), 1e-5);
    }
  }
}

TEST(BuildGCurve, MatchesPointwiseQuadrature) {
  const auto grid = xcorr::linspace(-0.9, 0.9, 13);
  const auto curve = xcorr::build_gcurve(kHalfHalf, grid);
  ASSERT_EQ(curve.r_grid.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); i += 3)
    EXPECT_NEAR(curve.g_values[i], xcorr::g_of_r(grid[i], kHalfHalf, 1e-11), 1e-9);
}

TEST(BuildGCurve, DefaultGridShape) {
  const auto curve = xcorr::build_gcurve(kAbs);
  ASSERT_EQ(curve.r_grid.size(), 199u);
  EXPECT_DOUBLE_EQ(curve.r_grid.front(), -0.99);
  EXPECT_DOUBLE_EQ(curve.r_grid.back(), 0.99);
  double worst = 0.0;
  for (std::size_t i = 0; i < curve.r_grid.size(); ++i)
    worst = std::max(worst,
                     std::abs(curve.g_values[i] - xcorr::g_l1_closed(curve.r_grid[i])));
  EXPECT_LE(worst, 1e-8);
}

TEST(BuildGCurve, MonotoneForAnyMixture) {
  const PwlMixture m{{0.3, 0.3, 0.4}, {0.2, 1.1, 3.0}};
  const auto curve = xcorr::build_gcurve(m, xcorr::linspace(-0.95, 0.95, 39));
  for (std::size_t i = 1; i < curve.g_values.size(); ++i)
    EXPECT_GT(curve.g_values[i], curve.g_values[i - 1]);
}

TEST(BuildGCurve, RejectsBadGrids) {
  EXPECT_THROW(xcorr::build_gcurve(kAbs, std::vector<double>{}),
               std::invalid_argument);
  EXPECT_THROW(xcorr::build_gcurve(kAbs, std::vector<double>{0.0, 0.0}),
               std::invalid_argument);
  EXPECT_THROW(xcorr::build_gcurve(kAbs, std::vector<double>{0.0, 1.5}),
               std::domain_error);
}

}  // namespace
