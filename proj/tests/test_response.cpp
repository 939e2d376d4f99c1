#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "anrsp/anrsp.hpp"
#include "support.hpp"

using namespace anrsp;

namespace {

constexpr double kPi = std::numbers::pi;

double max_diff(const SpectralField& a, const SpectralField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Cat map with f0 = 1: g = 2 pi i (B^T k)_c e_k with B = A^{-1}, and L e_p = fejer(q) e_q for
// p = A^T q. Walking preimage chains of the observable's modes u gives every numerator.
SpectralField cat_numerator_oracle(int n, int component, const SpectralField& c) {
  const ModeSet modes(n);
  SpectralField raw(n);
  const int binv[2][2] = {{1, -1}, {-1, 2}};
  for (std::size_t ui = 0; ui < modes.size(); ++ui) {
    const ModeIndex u = modes.mode(ui);
    if (u == ModeIndex{0, 0} || c[ui] == cplx(0.0)) continue;
    ModeIndex k = u;
    double weight = 1.0;
    for (int step = 0; step < 64; ++step) {
      weight *= fejer_weight(k, n);
      k = {2 * k.k1 + k.k2, k.k1 + k.k2};
      if (!modes.contains(k) || weight == 0.0) break;
      const double bk = binv[0][component - 1] * k.k1 + binv[1][component - 1] * k.k2;
      const cplx g(0.0, 2 * kPi * bk);
      raw.at(k) += -c[ui] * std::conj(weight * g);
    }
  }
  return raw;
}

OptimalField rerun(const OptimalRun& run, const ObjectiveSpec& spec, const RunConfig& cfg) {
  const Objective c(spec, cfg.spectral);
  return optimal_field(c, run.base.matrix, run.solver, run.base.srb, cfg.map, cfg.spectral);
}

}  // namespace

TEST(Response, CatDivergenceTermIsSingleMode) {
  const auto& run = fixtures::cached_run(false, 16);
  const auto cfg = SpectralConfig::for_order(16);
  const DivergenceOperator op(cat_map(), run.base.srb, cfg);
  const auto t = op.terms({1, 0}, 1);
  for (std::size_t p = 0; p < t[0].size(); ++p) {
    EXPECT_LT(std::abs(t[0][p]), 1e-10);
    EXPECT_LT(std::abs(t[1][p]), 1e-10);
  }
  cplx mean;
  const SpectralField g = op.evaluate({1, 0}, 1, &mean);
  EXPECT_LT(std::abs(mean), 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx want = g.modes().mode(i) == ModeIndex{1, 0} ? cplx(0.0, 2 * kPi) : cplx(0.0);
    EXPECT_NEAR(std::abs(g[i] - want), 0.0, 1e-12);
  }
  // Component 2, k = (3,-2): (B^T k)_2 = -3 - 4.
  const SpectralField g2 = op.evaluate({3, -2}, 2);
  EXPECT_NEAR(std::abs(g2.at({3, -2}) - cplx(0.0, 2 * kPi * -7.0)), 0.0, 1e-11);
}

TEST(Response, DivergenceTermHasZeroMean) {
  const auto& run = fixtures::cached_run(true, 16);
  const DivergenceOperator op(nonlinear_cat_map(), run.base.srb, SpectralConfig::for_order(16));
  for (ModeIndex k : {ModeIndex{0, 0}, ModeIndex{1, 0}, ModeIndex{-3, 5}, ModeIndex{8, 8}, ModeIndex{-7, 2}}) {
    for (int c = 1; c <= 2; ++c) {
      cplx mean;
      op.evaluate(k, c, &mean);
      EXPECT_LT(std::abs(mean), 1e-8) << k.k1 << "," << k.k2 << " c" << c;
    }
  }
}

TEST(Response, GridRouteMatchesShiftedRoute) {
  const auto& run = fixtures::cached_run(true, 16);
  const DivergenceOperator op(nonlinear_cat_map(), run.base.srb, SpectralConfig::for_order(16));
  for (ModeIndex k : {ModeIndex{0, 0}, ModeIndex{2, -1}, ModeIndex{-7, 8}, ModeIndex{8, 8}}) {
    for (int c = 1; c <= 2; ++c) {
      const SpectralField a = op.evaluate(k, c), b = op.evaluate_shifted(k, c);
      EXPECT_LT(max_diff(a, b), 1e-10 * std::max(1.0, a.max_abs()));
    }
  }
}

TEST(Response, AdjointNumeratorsMatchDirectSolves) {
  const auto& run = fixtures::cached_run(true, 16);
  const RunConfig cfg = fixtures::case_config(true, 16);
  const Objective& c = run.objective;
  for (ModeIndex k : {ModeIndex{1, 0}, ModeIndex{0, -1}, ModeIndex{3, 2}, ModeIndex{-5, 7}}) {
    for (int comp = 1; comp <= 2; ++comp) {
      const cplx direct =
          raw_numerator(c, run.base.matrix, run.solver, run.base.srb, cfg.map, k, comp);
      const cplx adjoint = run.field.numerators(comp).at(k);
      EXPECT_NEAR(std::abs(direct - adjoint), 0.0, 1e-10 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(Response, CatNumeratorsMatchChainOracle) {
  const auto& run = fixtures::cached_run(false, 32);
  const double scale = std::max(run.field.raw1.max_abs(), run.field.raw2.max_abs());
  ASSERT_GT(scale, 1.0);
  for (int comp = 1; comp <= 2; ++comp) {
    const SpectralField want = cat_numerator_oracle(32, comp, run.objective.coeffs());
    EXPECT_LT(max_diff(run.field.numerators(comp), want), 1e-10 * scale);
  }
  EXPECT_LT(std::abs(run.field.raw1.at({0, 0})), 1e-12);
  EXPECT_LT(std::abs(run.field.a1.at({0, 0})), 1e-15);
  EXPECT_LT(std::abs(run.field.a2.at({0, 0})), 1e-15);
}

TEST(Response, ConstantObservableIsDegenerate) {
  const auto& run = fixtures::cached_run(true, 16);
  const RunConfig cfg = fixtures::case_config(true, 16);
  const auto spec = ObjectiveSpec::function([](const TorusPoint&) { return 3.0; }, "const");
  const Objective c(spec, cfg.spectral);
  EXPECT_EQ(pair_response(c, run.base.matrix, run.solver,
                          DivergenceOperator(cfg.map, run.base.srb, cfg.spectral).evaluate({1, 2}, 1)),
            cplx(0.0));
  EXPECT_THROW(rerun(run, spec, cfg), DegenerateObjective);
}

// Real V = cos(2 pi x1) e_1 pairs with Re raw(1,0); V = sin(2 pi x1) e_1 with -Im raw(1,0).
TEST(Response, NumeratorMatchesCentralDifference) {
  const auto& run = fixtures::cached_run(true, 32);
  const RunConfig cfg = fixtures::case_config(true, 32);
  const cplx raw = run.field.raw1.at({1, 0});
  const double d = 1e-3;
  SpectralField zero(32), vc(32), vs(32);
  vc.at({1, 0}) = 0.5;
  vc.at({-1, 0}) = 0.5;
  vs.at({1, 0}) = cplx(0.0, -0.5);
  vs.at({-1, 0}) = cplx(0.0, 0.5);
  auto central = [&](const SpectralField& v) {
    const double ep = run.objective.expectation(srb_of_perturbed(cfg.map, v, zero, d, cfg.spectral).density);
    const double em = run.objective.expectation(srb_of_perturbed(cfg.map, v, zero, -d, cfg.spectral).density);
    return (ep - em) / (2 * d);
  };
  EXPECT_NEAR(central(vc), raw.real(), 0.02 * std::abs(raw));
  EXPECT_NEAR(central(vs), -raw.imag(), 0.02 * std::abs(raw));
}

TEST(Response, OptimalFieldOnUnitSphereAndAttainsNu) {
  for (bool nonlinear : {false, true}) {
    const OptimalField& f = fixtures::cached_run(nonlinear, 16).field;
    EXPECT_NEAR(weighted_norm_squared(f.a1, f.a2, f.gamma), 1.0, 1e-12);
    EXPECT_NEAR(objective_value(f), f.nu, 1e-8 * f.nu);
    EXPECT_GT(f.nu, 0.0);
    EXPECT_EQ(f.a1.hermitian_defect(), 0.0);
    EXPECT_EQ(f.a2.hermitian_defect(), 0.0);
  }
}

TEST(Response, ObjectiveResidueIsSmall) {
  for (int n : {16, 32}) {
    const OptimalField& f = fixtures::cached_run(true, n).field;
    const cplx j = objective_value_complex(f.a1, f.a2, f.raw1, f.raw2);
    EXPECT_EQ(j.real(), objective_value(f));
    EXPECT_LT(std::abs(j.imag()), 1e-3 * f.nu) << "n=" << n;
  }
  const OptimalField& c = fixtures::cached_run(false, 32).field;
  EXPECT_LT(std::abs(objective_value_complex(c.a1, c.a2, c.raw1, c.raw2).imag()), 1e-12 * c.nu);
}

TEST(Response, CatPreSymmetryDefectVanishes) {
  EXPECT_LT(fixtures::cached_run(false, 32).field.pre_symmetry_defect, 1e-12);
}

TEST(Response, ObservableSignAndScale) {
  const auto& run = fixtures::cached_run(true, 16);
  const RunConfig cfg = fixtures::case_config(true, 16);
  ObjectiveSpec neg = cfg.objective;
  neg.scale = -1.0;
  const OptimalField fn = rerun(run, neg, cfg);
  ObjectiveSpec big = cfg.objective;
  big.scale = 3.0;
  const OptimalField fb = rerun(run, big, cfg);
  const OptimalField& f = run.field;
  EXPECT_NEAR(fn.nu, f.nu, 1e-12 * f.nu);
  EXPECT_NEAR(fb.nu, 3.0 * f.nu, 1e-11 * f.nu);
  SpectralField sum = fn.a1;
  sum += f.a1;
  EXPECT_LT(sum.max_abs(), 1e-12);
  EXPECT_LT(max_diff(fb.a2, f.a2), 1e-12);
}

TEST(Response, ObjectiveValueEdgeCases) {
  const OptimalField& f = fixtures::cached_run(true, 16).field;
  const SpectralField z(16);
  EXPECT_EQ(objective_value(z, z, f.raw1, f.raw2), 0.0);
  const std::vector<FieldEntry> outside{{1, {9, 0}, 1.0}};
  EXPECT_THROW(objective_value(outside, f.raw1, f.raw2), MissingNumerator);
  const std::vector<FieldEntry> bad_component{{3, {1, 0}, 1.0}};
  EXPECT_THROW(objective_value(bad_component, f.raw1, f.raw2), MissingNumerator);
  const std::vector<FieldEntry> pair{{2, {1, 0}, 0.5}, {2, {-1, 0}, 0.5}};
  EXPECT_NEAR(objective_value(pair, f.raw1, f.raw2),
              0.5 * (f.raw2.at({1, 0}).real() + f.raw2.at({-1, 0}).real()), 1e-14);
  // Entries spanning the full table reproduce the dense objective.
  std::vector<FieldEntry> all;
  for (std::size_t i = 0; i < f.a1.size(); ++i) {
    all.push_back({1, f.a1.modes().mode(i), f.a1[i]});
    all.push_back({2, f.a1.modes().mode(i), f.a2[i]});
  }
  EXPECT_NEAR(objective_value(all, f.raw1, f.raw2), f.nu, 1e-9 * f.nu);
}

TEST(Response, RandomFieldsDoNotBeatOptimum) {
  const OptimalField& f = fixtures::cached_run(true, 16).field;
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto v = random_unit_field(16, f.gamma, 99, t);
    EXPECT_NEAR(weighted_norm_squared(v[0], v[1], f.gamma), 1.0, 1e-12);
    EXPECT_LE(objective_value(v[0], v[1], f.raw1, f.raw2), f.nu + 1e-8);
  }
}

TEST(Response, EvaluateFieldExamples) {
  SpectralField a1(8), a2(8);
  a1.at({1, 0}) = 0.5;
  a1.at({-1, 0}) = 0.5;
  a2.at({0, 2}) = cplx(0.0, -0.5);
  a2.at({0, -2}) = cplx(0.0, 0.5);  // sin(4 pi x2)
  const std::vector<TorusPoint> pts{{0.0, 0.0}, {0.25, 0.125}, {0.5, 0.3}};
  const auto v = evaluate_field(a1, a2, pts);
  EXPECT_NEAR(v[0][0], 1.0, 1e-14);
  EXPECT_NEAR(v[0][1], 0.0, 1e-14);
  EXPECT_NEAR(v[1][0], 0.0, 1e-14);
  EXPECT_NEAR(v[1][1], 1.0, 1e-14);
  EXPECT_NEAR(v[2][0], -1.0, 1e-14);
  EXPECT_NEAR(v[2][1], std::sin(4 * kPi * 0.3), 1e-14);
  a1.at({1, 0}) = cplx(0.5, 0.2);
  EXPECT_THROW(evaluate_field(a1, a2, pts), Error);
}

TEST(Response, MeanFieldNormOfRotationField) {
  // V = (cos 2 pi x2, sin 2 pi x2) has |V| = 1 everywhere.
  SpectralField a1(8), a2(8);
  a1.at({0, 1}) = 0.5;
  a1.at({0, -1}) = 0.5;
  a2.at({0, 1}) = cplx(0.0, -0.5);
  a2.at({0, -1}) = cplx(0.0, 0.5);
  EXPECT_NEAR(mean_field_norm(a1, a2, 32), 1.0, 1e-14);
}

TEST(Response, ObjectiveCoefficients) {
  const auto cfg = SpectralConfig::for_order(16);
  const Objective c(ObjectiveSpec::cosine_sum(), cfg);
  for (std::size_t i = 0; i < c.coeffs().size(); ++i) {
    const ModeIndex k = c.coeffs().modes().mode(i);
    const bool unit = std::abs(k.k1) + std::abs(k.k2) == 1;
    EXPECT_NEAR(std::abs(c.coeffs()[i] - (unit ? 0.5 : 0.0)), 0.0, 1e-14);
  }
  SpectralField one(16);
  one.at({0, 0}) = 1.0;
  EXPECT_NEAR(c.expectation(one), 0.0, 1e-14);

  // Gaussian pair: the mean is 2 * pi sigma^2 up to a negligible periodisation tail.
  const Objective g(ObjectiveSpec::gaussian_pair({0.1796, 0.4023}, {0.7877, 0.5852}, 0.1), cfg);
  EXPECT_NEAR(g.expectation(one), 2 * kPi * 0.01, 1e-12);
  EXPECT_EQ(g.mean_zero_coeffs().at({0, 0}), cplx(0.0));
}

TEST(Response, GridFileObservable) {
  const auto cfg = SpectralConfig::for_order(8);
  const auto path = (std::filesystem::temp_directory_path() / "anrsp_obs.csv").string();
  std::string csv = "x1,x2,value\n";
  for (int i = 0; i < cfg.N; ++i) {
    for (int j = 0; j < cfg.N; ++j) {
      const double x1 = double(i) / cfg.N, x2 = double(j) / cfg.N;
      csv += io::format_double(x1) + "," + io::format_double(x2) + "," +
             io::format_double(std::cos(2 * kPi * x1) + std::cos(2 * kPi * x2)) + "\n";
    }
  }
  io::write_file(path, csv);
  ObjectiveSpec s;
  s.kind = ObjectiveKind::GridFile;
  s.path = path;
  const Objective from_file(s, cfg), direct(ObjectiveSpec::cosine_sum(), cfg);
  EXPECT_LT(max_diff(from_file.coeffs(), direct.coeffs()), 1e-14);
  io::write_file(path, "x1,x2,value\n0,0,1\n");
  EXPECT_THROW(Objective(s, cfg), IoError);
  std::filesystem::remove(path);
}

TEST(Response, FieldCsvRoundTrip) {
  const OptimalField& f = fixtures::cached_run(true, 16).field;
  const auto path = (std::filesystem::temp_directory_path() / "anrsp_field.csv").string();
  io::write_file(path, optimal_field_csv(f));
  const auto back = read_optimal_field_csv(path);
  EXPECT_EQ(back[0].data(), f.a1.data());
  EXPECT_EQ(back[1].data(), f.a2.data());
  std::filesystem::remove(path);
}
