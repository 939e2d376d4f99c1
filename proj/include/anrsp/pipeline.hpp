#ifndef ANRSP_PIPELINE_HPP
#define ANRSP_PIPELINE_HPP

#include <chrono>
#include <sstream>
#include <string>

#include "anrsp/config.hpp"
#include "anrsp/perturbed.hpp"
#include "anrsp/response.hpp"
#include "anrsp/transfer.hpp"
#include "anrsp/validate.hpp"

namespace anrsp {

/// The two built-in case studies with their default observables.
inline RunConfig cat_case_study() {
  RunConfig cfg;
  cfg.map = cat_map();
  cfg.objective = ObjectiveSpec::cosine_sum();
  cfg.mean_perturbation = 0.0202;
  return cfg;
}

inline RunConfig nonlinear_case_study() {
  RunConfig cfg;
  cfg.map = nonlinear_cat_map(0.01);
  cfg.objective = ObjectiveSpec::gaussian_pair({0.1796, 0.4023}, {0.7877, 0.5852}, 0.1);
  cfg.mean_perturbation = 0.0122;
  return cfg;
}

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

struct SrbRun {
  TransferMatrix matrix;
  SRBEstimate srb;
  double build_seconds = 0.0;
  double eigen_seconds = 0.0;
};

inline SrbRun run_srb(const TorusMapSpec& map, const SpectralConfig& config, const EigenOptions& opt = {}) {
  auto t0 = std::chrono::steady_clock::now();
  TransferMatrix m = build_transfer_matrix(map, config);
  const double build = detail::seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  SRBEstimate srb = leading_eigenpair(m, opt);
  return {std::move(m), std::move(srb), build, detail::seconds_since(t0)};
}

struct OptimalRun {
  SrbRun base;
  ResolventSolver solver;
  Objective objective;
  OptimalField field;
  double resolvent_seconds = 0.0;
};

inline OptimalRun run_optimal(const RunConfig& cfg) {
  SrbRun base = run_srb(cfg.map, cfg.spectral);
  auto t0 = std::chrono::steady_clock::now();
  ResolventSolver solver(base.matrix);
  const double lu = detail::seconds_since(t0);
  Objective c(cfg.objective, cfg.spectral);
  OptimalField field = optimal_field(c, base.matrix, solver, base.srb, cfg.map, cfg.spectral);
  return {std::move(base), std::move(solver), std::move(c), std::move(field), lu};
}

/// delta giving delta * mean|V| = target.
inline double delta_for_mean_perturbation(const OptimalField& field, int N, double target) {
  const double mean = mean_field_norm(field, N);
  if (!(mean > 0.0)) throw DegenerateObjective("field has zero mean norm");
  return target / mean;
}

// Grid CSVs, row-major over the fine grid.

inline std::string density_grid_csv(const SpectralField& density, int N) {
  const Grid g = synthesize(density, N);
  std::ostringstream os;
  os << "x1,x2,value\n";
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      os << io::format_double(double(i) / N) << ',' << io::format_double(double(j) / N) << ','
         << io::format_double(g(i, j).real()) << '\n';
    }
  }
  return os.str();
}

struct Undershoot {
  double positive_fraction = 1.0;
  double min_value = 0.0;
  double max_imag = 0.0;
};

inline Undershoot density_undershoot(const SpectralField& density, int N) {
  const Grid g = synthesize(density, N);
  Undershoot u;
  std::size_t positive = 0;
  u.min_value = g[0].real();
  for (const auto& v : g.data()) {
    if (v.real() > 0.0) ++positive;
    u.min_value = std::min(u.min_value, v.real());
    u.max_imag = std::max(u.max_imag, std::abs(v.imag()));
  }
  u.positive_fraction = double(positive) / double(g.size());
  return u;
}

inline std::string quiver_csv(const OptimalField& field, int q) {
  std::vector<TorusPoint> pts;
  pts.reserve(std::size_t(q) * q);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) pts.push_back({double(i) / q, double(j) / q});
  }
  const auto v = evaluate_field(field, pts);
  std::ostringstream os;
  os << "x1,x2,v1,v2\n";
  for (std::size_t p = 0; p < pts.size(); ++p) {
    os << io::format_double(pts[p].x1) << ',' << io::format_double(pts[p].x2) << ','
       << io::format_double(v[p][0]) << ',' << io::format_double(v[p][1]) << '\n';
  }
  return os.str();
}

}  // namespace anrsp

#endif  // ANRSP_PIPELINE_HPP
