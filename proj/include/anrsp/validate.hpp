#ifndef ANRSP_VALIDATE_HPP
#define ANRSP_VALIDATE_HPP

#include <cmath>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anrsp/errors.hpp"
#include "anrsp/perturbed.hpp"
#include "anrsp/response.hpp"
#include "anrsp/transfer.hpp"

namespace anrsp {

/// SRB estimate of T_0 + delta V with the same n, N as the base run.
inline SRBEstimate srb_of_perturbed(const TorusMapSpec& map, const SpectralField& v1,
                                    const SpectralField& v2, double delta,
                                    const SpectralConfig& config, const EigenOptions& opt = {}) {
  PerturbedMap pm(map, v1, v2, delta);
  check_det_sign(pm, config.N);
  return leading_eigenpair(build_transfer_matrix(pm, config), opt);
}

inline SRBEstimate srb_of_perturbed(const TorusMapSpec& map, const OptimalField& field, double delta,
                                    const SpectralConfig& config, const EigenOptions& opt = {}) {
  return srb_of_perturbed(map, field.a1, field.a2, delta, config, opt);
}

struct ResponseProbe {
  std::vector<double> deltas;        // excludes the base point delta = 0
  std::vector<double> expectations;  // int c f_delta per delta
  double base_expectation = 0.0;     // int c f_0
  double slope = 0.0;          // linear coefficient of the quadratic fit
  double slope_stderr = 0.0;
  double curvature = 0.0;      // quadratic coefficient
  double secant_slope = 0.0;   // slope of a straight-line fit, for comparison
};

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

/// Unweighted least squares y = a + b x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(m);
  my /= double(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  if (m > 2 && sxx > 0.0) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ssr += r * r;
    }
    f.slope_stderr = std::sqrt(ssr / double(m - 2) / sxx);
  }
  return f;
}

struct QuadraticFit {
  double intercept = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
  double slope_stderr = 0.0;  // zero when the fit interpolates
};

/// Unweighted least squares y = a + b x + c x^2, via QR on the design matrix.
inline QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
  const auto m = static_cast<Eigen::Index>(x.size());
  if (m < 3) throw ConfigError("quadratic fit needs at least three points");
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = x[std::size_t(i)];
    a(i, 2) = x[std::size_t(i)] * x[std::size_t(i)];
    b(i) = y[std::size_t(i)];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::VectorXd coef = qr.solve(b);
  QuadraticFit f{coef(0), coef(1), coef(2), 0.0};
  if (m > 3) {
    const double ssr = (a * coef - b).squaredNorm();
    const Eigen::Matrix3d cov = (a.transpose() * a).inverse() * (ssr / double(m - 3));
    f.slope_stderr = std::sqrt(std::max(cov(1, 1), 0.0));
  }
  return f;
}

inline std::vector<double> default_delta_sweep() { return {1e-3, 2e-3, 4e-3}; }

/// d/d delta of int c f_delta at 0. The points (0, E_0), (delta_i, E_i) are
/// fitted with a quadratic so that the O(delta^2) term does not leak into the
/// slope. With two deltas the fit interpolates.
inline ResponseProbe finite_difference_response(const TorusMapSpec& map, const SpectralField& v1,
                                                const SpectralField& v2, const Objective& c,
                                                const SpectralConfig& config,
                                                std::span<const double> deltas,
                                                const EigenOptions& opt = {}) {
  if (deltas.empty()) throw ConfigError("delta sweep is empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || (i > 0 && !(deltas[i] > deltas[i - 1]))) {
      throw ConfigError("delta sweep must be positive and strictly increasing");
    }
  }
  ResponseProbe probe;
  probe.deltas.assign(deltas.begin(), deltas.end());
  probe.base_expectation = c.expectation(srb_of_perturbed(map, v1, v2, 0.0, config, opt).density);
  for (double d : deltas) {
    probe.expectations.push_back(c.expectation(srb_of_perturbed(map, v1, v2, d, config, opt).density));
  }
  std::vector<double> xs{0.0}, ys{probe.base_expectation};
  xs.insert(xs.end(), probe.deltas.begin(), probe.deltas.end());
  ys.insert(ys.end(), probe.expectations.begin(), probe.expectations.end());
  if (xs.size() >= 3) {
    const QuadraticFit fit = fit_quadratic(xs, ys);
    probe.slope = fit.slope;
    probe.slope_stderr = fit.slope_stderr;
    probe.curvature = fit.curvature;
  } else {
    const LineFit fit = fit_line(xs, ys);
    probe.slope = fit.slope;
    probe.slope_stderr = fit.slope_stderr;
  }
  probe.secant_slope = fit_line(xs, ys).slope;
  return probe;
}

inline ResponseProbe finite_difference_response(const TorusMapSpec& map, const OptimalField& field,
                                                const Objective& c, const SpectralConfig& config,
                                                std::span<const double> deltas,
                                                const EigenOptions& opt = {}) {
  return finite_difference_response(map, field.a1, field.a2, c, config, deltas, opt);
}

inline std::string probe_csv(const ResponseProbe& probe) {
  std::ostringstream os;
  os << "delta,expectation\n";
  os << io::format_double(0.0) << ',' << io::format_double(probe.base_expectation) << '\n';
  for (std::size_t i = 0; i < probe.deltas.size(); ++i) {
    os << io::format_double(probe.deltas[i]) << ',' << io::format_double(probe.expectations[i]) << '\n';
  }
  return os.str();
}

inline std::string probe_summary_line(const ResponseProbe& probe, double j) {
  const double rel = j != 0.0 ? std::abs(probe.slope - j) / std::abs(j) : std::abs(probe.slope);
  return "slope=" + io::format_double(probe.slope) + ",stderr=" + io::format_double(probe.slope_stderr) +
         ",J=" + io::format_double(j) + ",rel_err=" + io::format_double(rel);
}

inline constexpr double kNewtonTolerance = 1e-12;
inline constexpr int kNewtonMaxIterations = 100;

/// Periodic orbit through Newton iteration on T^p(x) - x in the lift,
/// residual taken modulo integer translations.
template <class Map>
std::vector<TorusPoint> find_periodic_orbit(const Map& map, int period, TorusPoint seed) {
  if (period < 1) throw ConfigError("period must be >= 1");
  auto lift = [&](const TorusPoint& x) -> Vec2 {
    if constexpr (requires { map.lift(x); }) {
      return map.lift(x);
    } else {
      return lift_map(map, x);
    }
  };
  auto jac = [&](const TorusPoint& x) -> Jacobian2 {
    if constexpr (requires { map.jacobian(x); }) {
      return map.jacobian(x);
    } else {
      return jacobian(map, x);
    }
  };
  Vec2 x{seed.x1, seed.x2};
  for (int it = 0; it <= kNewtonMaxIterations; ++it) {
    Vec2 y = x;
    Jacobian2 d = Jacobian2::identity();
    for (int s = 0; s < period; ++s) {
      const TorusPoint p{y[0], y[1]};
      d = jac(p) * d;
      y = lift(p);
    }
    double r1 = y[0] - x[0];
    double r2 = y[1] - x[1];
    r1 -= std::round(r1);
    r2 -= std::round(r2);
    if (std::hypot(r1, r2) < kNewtonTolerance) {
      std::vector<TorusPoint> orbit;
      TorusPoint p = TorusPoint::wrapped(x[0], x[1]);
      for (int s = 0; s < period; ++s) {
        orbit.push_back(p);
        const Vec2 q = lift(p);
        p = TorusPoint::wrapped(q[0], q[1]);
      }
      return orbit;
    }
    if (it == kNewtonMaxIterations) break;
    const Jacobian2 a{d.a11 - 1.0, d.a12, d.a21, d.a22 - 1.0};
    const double det = a.det();
    if (std::abs(det) < 1e-300) throw NewtonDiverged("singular Newton matrix");
    x[0] -= (a.a22 * r1 - a.a12 * r2) / det;
    x[1] -= (-a.a21 * r1 + a.a11 * r2) / det;
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) throw NewtonDiverged("iterate is not finite");
  }
  throw NewtonDiverged("no convergence in " + std::to_string(kNewtonMaxIterations) + " iterations");
}

struct SpotCheckReport {
  int trials = 0;
  double optimal_value = 0.0;
  double max_ratio = 0.0;  // max J(random)/J(optimal); 0 when trials == 0
  std::vector<double> values;
};

inline constexpr double kOptimalitySlack = 1e-8;

/// A real field drawn uniformly on the gamma-weighted unit sphere.
inline std::array<SpectralField, 2> random_unit_field(int n, double gamma, std::uint64_t seed,
                                                      std::uint64_t trial) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(trial),
                    std::uint32_t(trial >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<SpectralField, 2> a{SpectralField(n), SpectralField(n)};
  const ModeSet& modes = a[0].modes();
  for (auto& comp : a) {
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const ModeIndex k = modes.mode(i);
      if (modes.unpaired(k)) continue;
      const ModeIndex mk = -k;
      // Draw once per +/- pair: take the lexicographically larger member.
      if (k.k1 < mk.k1 || (k.k1 == mk.k1 && k.k2 < mk.k2)) continue;
      const double s = 1.0 / std::sqrt(sobolev_weight(k, gamma));
      if (k == mk) {
        comp[i] = cplx(s * normal(rng), 0.0);
      } else {
        const cplx z(s * normal(rng), s * normal(rng));
        comp[i] = z;
        comp.at(mk) = std::conj(z);
      }
    }
  }
  const double norm = std::sqrt(weighted_norm_squared(a[0], a[1], gamma));
  a[0] *= 1.0 / norm;
  a[1] *= 1.0 / norm;
  a[0].make_real();
  a[1].make_real();
  return a;
}

/// Random unit-norm real fields never beat the optimal one.
inline SpotCheckReport optimality_spot_check(const OptimalField& field, int trials, std::uint64_t seed) {
  SpotCheckReport report;
  report.trials = trials;
  report.optimal_value = objective_value(field);
  const int n = field.order();
  report.values.resize(std::size_t(std::max(trials, 0)));
  parallel_for(report.values.size(), [&](std::size_t t, std::size_t) {
    const auto v = random_unit_field(n, field.gamma, seed, t);
    report.values[t] = objective_value(v[0], v[1], field.raw1, field.raw2);
  });
  for (std::size_t t = 0; t < report.values.size(); ++t) {
    const double jv = report.values[t];
    if (jv > report.optimal_value + kOptimalitySlack) {
      throw OptimalityViolated("trial " + std::to_string(t) + " reached J=" + io::format_double(jv) +
                               " above optimum " + io::format_double(report.optimal_value));
    }
    report.max_ratio = t == 0 ? jv / report.optimal_value
                              : std::max(report.max_ratio, jv / report.optimal_value);
  }
  return report;
}

}  // namespace anrsp

#endif  // ANRSP_VALIDATE_HPP
