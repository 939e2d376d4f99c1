#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "anrsp/anrsp.hpp"
#include "support.hpp"

using namespace anrsp;

namespace {

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  double d1 = a.x1 - b.x1, d2 = a.x2 - b.x2;
  d1 -= std::round(d1);
  d2 -= std::round(d2);
  return std::hypot(d1, d2);
}

}  // namespace

TEST(Validate, QuadraticFitIsExactOnQuadratics) {
  const std::vector<double> x{0.0, 1e-3, 2e-3, 4e-3};
  std::vector<double> y;
  for (double v : x) y.push_back(0.3 - 2.5 * v + 40.0 * v * v);
  const QuadraticFit q = fit_quadratic(x, y);
  EXPECT_NEAR(q.intercept, 0.3, 1e-13);
  EXPECT_NEAR(q.slope, -2.5, 1e-9);
  EXPECT_NEAR(q.curvature, 40.0, 1e-5);
  EXPECT_LT(q.slope_stderr, 1e-9);
  const std::vector<double> two{0.0, 1.0};
  EXPECT_THROW(fit_quadratic(two, two), ConfigError);
}

TEST(Validate, LineFitIsExactOnLines) {
  const std::vector<double> x{0.0, 1.0, 2.0, 5.0}, y{1.0, 3.0, 5.0, 11.0};
  const LineFit f = fit_line(x, y);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.slope_stderr, 0.0, 1e-14);
}

TEST(Validate, DeltaSweepIsValidated) {
  const auto& run = fixtures::cached_run(true, 16);
  const auto cfg = SpectralConfig::for_order(16);
  const std::vector<double> empty, unsorted{2e-3, 1e-3}, negative{-1e-3, 1e-3};
  for (const auto* d : {&empty, &unsorted, &negative}) {
    EXPECT_THROW(finite_difference_response(nonlinear_cat_map(), run.field, run.objective, cfg, *d),
                 ConfigError);
  }
}

TEST(Validate, ZeroFieldHasZeroResponse) {
  const auto& run = fixtures::cached_run(true, 16);
  const SpectralField z(16);
  const auto sweep = default_delta_sweep();
  const ResponseProbe p = finite_difference_response(nonlinear_cat_map(), z, z, run.objective,
                                                     SpectralConfig::for_order(16), sweep);
  EXPECT_EQ(p.slope, 0.0);
  EXPECT_EQ(p.curvature, 0.0);
  for (double e : p.expectations) EXPECT_EQ(e, p.base_expectation);
}

TEST(Validate, PerturbedSrbAtZeroDeltaIsBase) {
  const auto& run = fixtures::cached_run(true, 16);
  const SRBEstimate s = srb_of_perturbed(nonlinear_cat_map(), run.field, 0.0, SpectralConfig::for_order(16));
  EXPECT_EQ(s.density.data(), run.base.srb.density.data());
  EXPECT_EQ(s.eigenvalue, run.base.srb.eigenvalue);
}

TEST(Validate, FiniteDifferenceMatchesLinearResponse) {
  for (bool nonlinear : {false, true}) {
    const auto& run = fixtures::cached_run(nonlinear, 16);
    const RunConfig cfg = fixtures::case_config(nonlinear, 16);
    const auto sweep = default_delta_sweep();
    const ResponseProbe p = finite_difference_response(cfg.map, run.field, run.objective, cfg.spectral, sweep);
    EXPECT_NEAR(p.slope, run.field.nu, 0.05 * run.field.nu) << cfg.map.name;
  }
}

// Sending V to -V flips the fitted slope.
TEST(Validate, FiniteDifferenceSlopeIsOdd) {
  for (bool nonlinear : {false, true}) {
    const auto& run = fixtures::cached_run(nonlinear, 16);
    const RunConfig cfg = fixtures::case_config(nonlinear, 16);
    const auto sweep = default_delta_sweep();
    const ResponseProbe p = finite_difference_response(cfg.map, run.field, run.objective, cfg.spectral, sweep);
    SpectralField m1 = run.field.a1, m2 = run.field.a2;
    m1 *= -1.0;
    m2 *= -1.0;
    const ResponseProbe q = finite_difference_response(cfg.map, m1, m2, run.objective, cfg.spectral, sweep);
    EXPECT_NEAR(q.slope, -p.slope, 1e-6) << cfg.map.name;
  }
}

// A constant shift of the cat map carries Lebesgue measure to itself.
TEST(Validate, CatConstantShiftHasNoResponse) {
  const auto& run = fixtures::cached_run(false, 16);
  SpectralField one(16), zero(16);
  one.at({0, 0}) = 1.0;
  const auto sweep = default_delta_sweep();
  const ResponseProbe p = finite_difference_response(cat_map(), one, zero, run.objective,
                                                     SpectralConfig::for_order(16), sweep);
  EXPECT_NEAR(p.slope, 0.0, 1e-10);
  EXPECT_NEAR(p.slope, run.field.raw1.at({0, 0}).real(), 1e-10);
}

// Dropping the largest delta moves the fitted slope by under 1%.
TEST(Validate, SlopeStableUnderShorterSweep) {
  for (bool nonlinear : {false, true}) {
    const auto& run = fixtures::cached_run(nonlinear, 32);
    const RunConfig cfg = fixtures::case_config(nonlinear, 32);
    const std::vector<double> full{1e-3, 2e-3, 4e-3}, half{1e-3, 2e-3};
    const double a = finite_difference_response(cfg.map, run.field, run.objective, cfg.spectral, full).slope;
    const double b = finite_difference_response(cfg.map, run.field, run.objective, cfg.spectral, half).slope;
    EXPECT_LT(std::abs(a - b), 0.01 * std::abs(a)) << cfg.map.name;
  }
}

TEST(Validate, ProbeCsvLayout) {
  ResponseProbe p;
  p.deltas = {1e-3, 2e-3};
  p.expectations = {0.5, 0.25};
  p.base_expectation = 1.0;
  EXPECT_EQ(probe_csv(p), "delta,expectation\n0,1\n0.001,0.5\n0.002,0.25\n");
  p.slope = 2.0;
  EXPECT_EQ(probe_summary_line(p, 4.0), "slope=2,stderr=0,J=4,rel_err=0.5");
}

TEST(Validate, CatFixedPointAndPeriodTwoOrbit) {
  for (TorusPoint seed : {TorusPoint{0.1, 0.1}, TorusPoint{0.02, 0.97}}) {
    const auto fixed = find_periodic_orbit(cat_map(), 1, seed);
    ASSERT_EQ(fixed.size(), 1u);
    EXPECT_LT(torus_distance(fixed[0], {0.0, 0.0}), 1e-12);
  }
  // (A^2 - I)(0.2, 0.4) = (2, 1).
  const auto orbit = find_periodic_orbit(cat_map(), 2, {0.18, 0.40});
  ASSERT_EQ(orbit.size(), 2u);
  EXPECT_LT(torus_distance(orbit[0], {0.2, 0.4}), 1e-12);
  EXPECT_LT(torus_distance(orbit[1], {0.8, 0.6}), 1e-12);
}

TEST(Validate, NonlinearOrbitIsInvariant) {
  const auto map = nonlinear_cat_map(0.01);
  const auto orbit = find_periodic_orbit(map, 2, {0.18, 0.40});
  ASSERT_EQ(orbit.size(), 2u);
  EXPECT_LT(torus_distance(eval_map(map, orbit[0]), orbit[1]), 1e-10);
  EXPECT_LT(torus_distance(eval_map(map, orbit[1]), orbit[0]), 1e-10);
  EXPECT_GT(torus_distance(orbit[0], orbit[1]), 0.1);
}

TEST(Validate, NonlinearOrbitMatchesReferenceValues) {
  const auto orbit = find_periodic_orbit(nonlinear_cat_map(0.01), 2, {0.18, 0.40});
  ASSERT_EQ(orbit.size(), 2u);
  EXPECT_LT(torus_distance(orbit[0], {0.1796, 0.4023}), 5e-4);
  EXPECT_LT(torus_distance(orbit[1], {0.7877, 0.5852}), 5e-4);
}

TEST(Validate, OrbitRejectsBadPeriod) {
  EXPECT_THROW(find_periodic_orbit(cat_map(), 0, {0.1, 0.1}), ConfigError);
}

TEST(Validate, SpotCheckBounds) {
  const OptimalField& f = fixtures::cached_run(true, 16).field;
  const SpotCheckReport none = optimality_spot_check(f, 0, 0);
  EXPECT_EQ(none.trials, 0);
  EXPECT_TRUE(none.values.empty());
  EXPECT_EQ(none.max_ratio, 0.0);

  const SpotCheckReport a = optimality_spot_check(f, 40, 3);
  EXPECT_LE(a.max_ratio, 1.0 + 1e-8);
  EXPECT_NEAR(a.optimal_value, f.nu, 1e-8 * f.nu);
  const SpotCheckReport b = optimality_spot_check(f, 40, 3);
  EXPECT_EQ(a.values, b.values);
  const SpotCheckReport c = optimality_spot_check(f, 40, 4);
  EXPECT_NE(a.values, c.values);
}

TEST(Validate, OptimalFieldHasRatioOne) {
  const OptimalField& f = fixtures::cached_run(false, 32).field;
  EXPECT_NEAR(objective_value(f.a1, f.a2, f.raw1, f.raw2) / objective_value(f), 1.0, 0.0);
  const SpotCheckReport r = optimality_spot_check(f, 100, 0);
  EXPECT_LE(r.max_ratio, 1.0);
}

TEST(Validate, SpotCheckIndependentOfWorkerCount) {
  const OptimalField& f = fixtures::cached_run(true, 16).field;
  worker_count_override() = 1;
  const auto a = optimality_spot_check(f, 20, 11).values;
  worker_count_override() = 4;
  const auto b = optimality_spot_check(f, 20, 11).values;
  worker_count_override() = 0;
  EXPECT_EQ(a, b);
}

TEST(Validate, SpotCheckFlagsNonOptimalField) {
  OptimalField f = fixtures::cached_run(true, 16).field;
  f.a1 *= -1.0;
  f.a2 *= -1.0;
  EXPECT_THROW(optimality_spot_check(f, 20, 0), OptimalityViolated);
}
