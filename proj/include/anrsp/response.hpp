#ifndef ANRSP_RESPONSE_HPP
#define ANRSP_RESPONSE_HPP

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "anrsp/errors.hpp"
#include "anrsp/io.hpp"
#include "anrsp/maps.hpp"
#include "anrsp/parallel.hpp"
#include "anrsp/spectral.hpp"
#include "anrsp/transfer.hpp"

namespace anrsp {

// ---------------------------------------------------------------------------
// Observables

enum class ObjectiveKind { CosineSum, GaussianPair, GridFile, Function };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::CosineSum;
  TorusPoint p1{0.1796, 0.4023};
  TorusPoint p2{0.7877, 0.5852};
  double sigma = 0.1;
  std::string path;                              // GridFile: CSV x1,x2,value on the fine grid
  std::function<double(const TorusPoint&)> fn;   // Function
  double scale = 1.0;
  std::string label;

  static ObjectiveSpec cosine_sum() {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::CosineSum;
    s.label = "cosine_sum";
    return s;
  }
  static ObjectiveSpec gaussian_pair(TorusPoint a, TorusPoint b, double width) {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::GaussianPair;
    s.p1 = a;
    s.p2 = b;
    s.sigma = width;
    s.label = "gaussian_pair";
    return s;
  }
  static ObjectiveSpec function(std::function<double(const TorusPoint&)> f, std::string name) {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::Function;
    s.fn = std::move(f);
    s.label = std::move(name);
    return s;
  }
};

namespace detail {

/// Periodised Gaussian exp(-|x - p - m|^2 / sigma^2) summed over the 3x3
/// neighbouring lattice translates; farther translates are below 1e-43 for
/// sigma = 0.1.
inline double periodic_gaussian(const TorusPoint& x, const TorusPoint& p, double sigma) {
  double s = 0.0;
  for (int m1 = -1; m1 <= 1; ++m1) {
    for (int m2 = -1; m2 <= 1; ++m2) {
      const double d1 = x.x1 - p.x1 - m1;
      const double d2 = x.x2 - p.x2 - m2;
      s += std::exp(-(d1 * d1 + d2 * d2) / (sigma * sigma));
    }
  }
  return s;
}

inline Grid read_grid_csv(const std::string& path, int N) {
  auto t = io::read_csv(path, {"x1", "x2", "value"});
  if (t.rows.size() != std::size_t(N) * N) {
    throw IoError(path + ": expected " + std::to_string(N * N) + " grid rows");
  }
  Grid g(N);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int i = int(r / std::size_t(N));
    const int j = int(r % std::size_t(N));
    if (std::abs(t.rows[r][0] - double(i) / N) > 1e-12 ||
        std::abs(t.rows[r][1] - double(j) / N) > 1e-12) {
      throw IoError(path + ": row " + std::to_string(r + 2) + " is not on the fine grid");
    }
    g(i, j) = t.rows[r][2];
  }
  return g;
}

}  // namespace detail

inline Grid sample_objective(const ObjectiveSpec& spec, int N) {
  Grid g;
  switch (spec.kind) {
    case ObjectiveKind::CosineSum:
      g = sample_on_grid(N, [](const TorusPoint& x) {
        return cplx(std::cos(kTwoPi * x.x1) + std::cos(kTwoPi * x.x2));
      });
      break;
    case ObjectiveKind::GaussianPair:
      g = sample_on_grid(N, [&](const TorusPoint& x) {
        return cplx(detail::periodic_gaussian(x, spec.p1, spec.sigma) +
                    detail::periodic_gaussian(x, spec.p2, spec.sigma));
      });
      break;
    case ObjectiveKind::GridFile:
      g = detail::read_grid_csv(spec.path, N);
      break;
    case ObjectiveKind::Function:
      g = sample_on_grid(N, [&](const TorusPoint& x) { return cplx(spec.fn(x)); });
      break;
  }
  for (auto& v : g.data()) v *= spec.scale;
  return g;
}

/// An observable together with its Fourier coefficients on F_n.
class Objective {
 public:
  Objective(ObjectiveSpec spec, const SpectralConfig& config)
      : spec_(std::move(spec)), coeffs_(analyze(sample_objective(spec_, config.N), config.n)) {
    coeffs_.make_real();
    mean_zero_ = coeffs_;
    mean_zero_[mean_zero_.modes().zero_index()] = 0.0;
  }

  const ObjectiveSpec& spec() const { return spec_; }
  const std::string& label() const { return spec_.label; }
  const SpectralField& coeffs() const { return coeffs_; }
  /// Coefficients with the (0,0) entry removed, used for pairing with mean-zero responses.
  const SpectralField& mean_zero_coeffs() const { return mean_zero_; }

  /// int c f for a real density f given by its coefficients.
  double expectation(const SpectralField& density) const {
    return spectral_inner(coeffs_, density).real();
  }

 private:
  ObjectiveSpec spec_;
  SpectralField coeffs_;
  SpectralField mean_zero_;
};

// ---------------------------------------------------------------------------
// Divergence terms of the derivative operator

/// Per-point quantities shared by every elementary vector field: f0, grad f0,
/// (DT)^{-1} and its divergence on the fine grid.
class DivergenceOperator {
 public:
  DivergenceOperator(const TorusMapSpec& map, const SRBEstimate& f0, const SpectralConfig& config)
      : config_(config), modes_(config.n) {
    config.validate();
    const int N = config.N;
    const Grid f = synthesize(f0.density, N);
    const Grid fx1 = synthesize(spectral_derivative(f0.density, 0), N);
    const Grid fx2 = synthesize(spectral_derivative(f0.density, 1), N);
    f_.assign(f.size(), 0.0);
    grad_.assign(f.size(), {0.0, 0.0});
    inv_.resize(f.size());
    div_.resize(f.size());
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const std::size_t p = std::size_t(i) * N + j;
        const auto s = inverse_jacobian_sample(map, {double(i) / N, double(j) / N});
        f_[p] = f[p].real();
        grad_[p] = {fx1[p].real(), fx2[p].real()};
        inv_[p] = s.inverse;
        div_[p] = s.divergence;
      }
    }
    // For V = e_k u_c the divergence is e_k (P_c + 2 pi i (k1 Q_1c + k2 Q_2c)) with
    //   P_c  = sum_i d_i f0 B_ic + f0 (div B)_c,   Q_ic = f0 B_ic.
    // Multiplying by e_k shifts the spectrum by k, so these six spectra are
    // computed once.
    for (int c = 0; c < 2; ++c) {
      Grid pc(N), q1(N), q2(N);
      for (std::size_t p = 0; p < f_.size(); ++p) {
        const Jacobian2& b = inv_[p];
        pc[p] = grad_[p][0] * b(0, c) + grad_[p][1] * b(1, c) + f_[p] * div_[p][c];
        q1[p] = f_[p] * b(0, c);
        q2[p] = f_[p] * b(1, c);
      }
      p_spec_[c] = spectrum(std::move(pc));
      q_spec_[c][0] = spectrum(std::move(q1));
      q_spec_[c][1] = spectrum(std::move(q2));
    }
  }

  const SpectralConfig& config() const { return config_; }

  /// The three summands on the fine grid, in order: grad f0 . B V,
  /// f0 (div B) . V, f0 Tr(B DV).
  std::array<Grid, 3> terms(ModeIndex k, int component) const {
    const int N = config_.N;
    const int c = component - 1;
    std::array<Grid, 3> out{Grid(N), Grid(N), Grid(N)};
    const cplx ik1(0.0, kTwoPi * k.k1), ik2(0.0, kTwoPi * k.k2);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const std::size_t p = std::size_t(i) * N + j;
        const cplx ek = std::polar(1.0, kTwoPi * (double(k.k1) * i + double(k.k2) * j) / N);
        const Jacobian2& b = inv_[p];
        out[0][p] = (grad_[p][0] * b(0, c) + grad_[p][1] * b(1, c)) * ek;
        out[1][p] = f_[p] * div_[p][c] * ek;
        // D(e_k u_c) has row c equal to 2 pi i e_k k^T, so Tr(B DV) = sum_i B_ic d_i e_k.
        out[2][p] = f_[p] * (b(0, c) * ik1 + b(1, c) * ik2) * ek;
      }
    }
    return out;
  }

  /// Grid route: sums the three terms and analyzes. `raw_mean` receives the
  /// (0,0) coefficient before it is zeroed.
  SpectralField evaluate(ModeIndex k, int component, cplx* raw_mean = nullptr) const {
    auto t = terms(k, component);
    Grid sum(config_.N);
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] = t[0][p] + t[1][p] + t[2][p];
    SpectralField g = analyze(sum, config_.n);
    const std::size_t zero = modes_.zero_index();
    if (raw_mean) *raw_mean = g[zero];
    g[zero] = 0.0;
    return g;
  }

  /// Spectral route: same coefficients by shifting the precomputed spectra.
  SpectralField evaluate_shifted(ModeIndex k, int component, cplx* raw_mean = nullptr) const {
    SpectralField g(config_.n);
    fill_shifted(k, component, g.data());
    const std::size_t zero = modes_.zero_index();
    if (raw_mean) *raw_mean = g[zero];
    g[zero] = 0.0;
    return g;
  }

  void fill_shifted(ModeIndex k, int component, std::vector<cplx>& out) const {
    const int c = component - 1;
    const Grid& ps = p_spec_[c];
    const Grid& q1 = q_spec_[c][0];
    const Grid& q2 = q_spec_[c][1];
    const cplx ik1(0.0, kTwoPi * k.k1), ik2(0.0, kTwoPi * k.k2);
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      const ModeIndex m = modes_.mode(i);
      const std::size_t b = ps.bin(m.k1 - k.k1, m.k2 - k.k2);
      out[i] = ps[b] + ik1 * q1[b] + ik2 * q2[b];
    }
  }

 private:
  SpectralConfig config_;
  ModeSet modes_;
  std::vector<double> f_;
  std::vector<Vec2> grad_;
  std::vector<Jacobian2> inv_;
  std::vector<Vec2> div_;
  std::array<Grid, 2> p_spec_;
  std::array<std::array<Grid, 2>, 2> q_spec_;
};

/// div(f0 (DT)^{-1} V) for V = (e_k, 0) (component 1) or (0, e_k)
/// (component 2), on F_n with the (0,0) coefficient zeroed.
inline SpectralField divergence_term(const SRBEstimate& f0, const TorusMapSpec& map, ModeIndex mode,
                                     int component, const SpectralConfig& config,
                                     cplx* raw_mean = nullptr) {
  DivergenceOperator op(map, f0, config);
  return op.evaluate(mode, component, raw_mean);
}

/// -sum_{k != 0} c(k) conj(r(k)) with r = (I - L)^{-1} L g.
inline cplx pair_response(const Objective& c, const TransferMatrix& m, const ResolventSolver& solver,
                          const SpectralField& g) {
  const SpectralField h = m.apply(g);
  const SpectralField r = solver.apply(h);
  return -spectral_inner(c.mean_zero_coeffs(), r);
}

/// The integral in the optimal coefficient formula for one elementary field,
/// before division by nu and the Sobolev weight.
inline cplx raw_numerator(const Objective& c, const TransferMatrix& m, const ResolventSolver& solver,
                          const SRBEstimate& f0, const TorusMapSpec& map, ModeIndex mode,
                          int component) {
  const SpectralField g = divergence_term(f0, map, mode, component, m.config());
  return pair_response(c, m, solver, g);
}

// ---------------------------------------------------------------------------
// Optimal field

struct OptimalField {
  SpectralField a1;
  SpectralField a2;
  double nu = 0.0;
  double gamma = 0.02;
  SpectralField raw1;  // raw numerators, component 1
  SpectralField raw2;  // raw numerators, component 2
  double pre_symmetry_defect = 0.0;
  double loop_seconds = 0.0;  // coefficient loop including k-independent precomputation

  int order() const { return a1.order(); }
  const SpectralField& coefficients(int component) const { return component == 1 ? a1 : a2; }
  const SpectralField& numerators(int component) const { return component == 1 ? raw1 : raw2; }
  double seconds_per_coefficient() const {
    const double count = 2.0 * double(a1.size());
    return count > 0 ? loop_seconds / count : 0.0;
  }
};

inline constexpr double kDegenerateNumerator = 1e-14;

/// sum over both components of a(k) w_gamma(k) |.|^2
inline double weighted_norm_squared(const SpectralField& a1, const SpectralField& a2, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < a1.size(); ++i) {
    const double w = sobolev_weight(a1.modes().mode(i), gamma);
    s += w * (std::norm(a1[i]) + std::norm(a2[i]));
  }
  return s;
}

/// Raw numerators for every mode and both components via the adjoint vector
/// w = L^H (I - L)^{-H} c: each numerator is then -sum_{m != 0} w(m) conj(g(m)).
inline std::array<SpectralField, 2> all_raw_numerators(const Objective& c, const TransferMatrix& m,
                                                       const ResolventSolver& solver,
                                                       const DivergenceOperator& div) {
  const int n = m.config().n;
  const ModeSet& modes = m.modes();
  const SpectralField y = solver.apply_adjoint(c.mean_zero_coeffs());
  Eigen::Map<const ComplexVector> yv(y.data().data(), Eigen::Index(y.size()));
  const ComplexVector wv = m.entries().adjoint() * yv;
  const std::size_t zero = modes.zero_index();

  std::array<SpectralField, 2> raw{SpectralField(n), SpectralField(n)};
  std::vector<std::vector<cplx>> scratch(worker_count(), std::vector<cplx>(modes.size()));
  parallel_for(2 * modes.size(), [&](std::size_t slot, std::size_t worker) {
    const int component = slot < modes.size() ? 1 : 2;
    const std::size_t idx = slot % modes.size();
    auto& g = scratch[worker];
    div.fill_shifted(modes.mode(idx), component, g);
    cplx s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i != zero) s += wv(Eigen::Index(i)) * std::conj(g[i]);
    }
    raw[component - 1][idx] = -s;
  });
  return raw;
}

/// Normalizes raw numerators into the unit-norm maximizer.
inline OptimalField optimal_field_from_numerators(SpectralField raw1, SpectralField raw2,
                                                  double gamma) {
  double biggest = std::max(raw1.max_abs(), raw2.max_abs());
  if (!(biggest >= kDegenerateNumerator)) {
    throw DegenerateObjective("all response numerators vanish; the observable has no "
                              "first-order response (e.g. it is constant)");
  }
  const ModeSet& modes = raw1.modes();
  SpectralField a1(raw1.order()), a2(raw1.order());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double w = sobolev_weight(modes.mode(i), gamma);
    a1[i] = raw1[i] / w;
    a2[i] = raw2[i] / w;
  }
  const double defect_raw = std::max(a1.hermitian_defect(), a2.hermitian_defect());
  a1.make_real();
  a2.make_real();
  const double nu = std::sqrt(weighted_norm_squared(a1, a2, gamma));
  if (!(nu > 0.0)) throw DegenerateObjective("optimal field vanishes after symmetrization");
  a1 *= 1.0 / nu;
  a2 *= 1.0 / nu;

  OptimalField out;
  out.a1 = std::move(a1);
  out.a2 = std::move(a2);
  out.nu = nu;
  out.gamma = gamma;
  out.raw1 = std::move(raw1);
  out.raw2 = std::move(raw2);
  out.pre_symmetry_defect = defect_raw / nu;
  return out;
}

inline OptimalField optimal_field(const Objective& c, const TransferMatrix& m,
                                  const ResolventSolver& solver, const SRBEstimate& f0,
                                  const TorusMapSpec& map, const SpectralConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  DivergenceOperator div(map, f0, config);
  auto raw = all_raw_numerators(c, m, solver, div);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  OptimalField out = optimal_field_from_numerators(std::move(raw[0]), std::move(raw[1]), config.gamma);
  out.loop_seconds = seconds;
  return out;
}

// ---------------------------------------------------------------------------
// Objective value and field evaluation

/// J(V) = sum_{component, k} a(k) conj(raw(k)), complex in general.
inline cplx objective_value_complex(const SpectralField& a1, const SpectralField& a2,
                                    const SpectralField& raw1, const SpectralField& raw2) {
  return spectral_inner(a1, raw1) + spectral_inner(a2, raw2);
}

/// J of a real field. The numerators are not exactly Hermitian (the unpaired
/// modes break the pairing), so J carries a small imaginary residue that is
/// dropped here; objective_value_complex exposes it.
inline double objective_value(const SpectralField& a1, const SpectralField& a2,
                              const SpectralField& raw1, const SpectralField& raw2) {
  return objective_value_complex(a1, a2, raw1, raw2).real();
}

inline double objective_value(const OptimalField& field) {
  return objective_value(field.a1, field.a2, field.raw1, field.raw2);
}

/// One coefficient of an arbitrary sparse field table.
struct FieldEntry {
  int component = 1;
  ModeIndex mode;
  cplx value;
};

inline double objective_value(std::span<const FieldEntry> entries, const SpectralField& raw1,
                              const SpectralField& raw2) {
  const ModeSet& modes = raw1.modes();
  cplx j = 0.0;
  for (const auto& e : entries) {
    if ((e.component != 1 && e.component != 2) || !modes.contains(e.mode)) {
      throw MissingNumerator("no numerator for component " + std::to_string(e.component) +
                             " mode (" + std::to_string(e.mode.k1) + "," +
                             std::to_string(e.mode.k2) + ")");
    }
    const SpectralField& raw = e.component == 1 ? raw1 : raw2;
    j += e.value * std::conj(raw.at(e.mode));
  }
  return j.real();
}

inline constexpr double kFieldImagTolerance = 1e-9;

/// Real vector values of the field at arbitrary points.
inline std::vector<Vec2> evaluate_field(const SpectralField& a1, const SpectralField& a2,
                                        std::span<const TorusPoint> points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    const cplx v1 = evaluate_series(a1, x);
    const cplx v2 = evaluate_series(a2, x);
    const double scale = std::max(1.0, std::max(std::abs(v1), std::abs(v2)));
    if (std::abs(v1.imag()) > kFieldImagTolerance * scale ||
        std::abs(v2.imag()) > kFieldImagTolerance * scale) {
      throw Error(ErrorKind::Numerical, "vector field has a non-negligible imaginary part");
    }
    out.push_back({v1.real(), v2.real()});
  }
  return out;
}

inline std::vector<Vec2> evaluate_field(const OptimalField& field, std::span<const TorusPoint> points) {
  return evaluate_field(field.a1, field.a2, points);
}

/// Both components sampled on the N x N grid (real parts).
inline std::array<Grid, 2> field_on_grid(const SpectralField& a1, const SpectralField& a2, int N) {
  return {synthesize(a1, N), synthesize(a2, N)};
}

/// (1/N^2) sum_i |V(x_i)|_2 on the fine grid.
inline double mean_field_norm(const SpectralField& a1, const SpectralField& a2, int N) {
  const auto g = field_on_grid(a1, a2, N);
  double s = 0.0;
  for (std::size_t p = 0; p < g[0].size(); ++p) s += std::hypot(g[0][p].real(), g[1][p].real());
  return s / double(g[0].size());
}

inline double mean_field_norm(const OptimalField& field, int N) {
  return mean_field_norm(field.a1, field.a2, N);
}

// CSV: component,k1,k2,re,im; component 1 modes first, then component 2.
inline std::string optimal_field_csv(const OptimalField& field) {
  std::ostringstream os;
  os << "component,k1,k2,re,im\n";
  for (int c = 1; c <= 2; ++c) {
    const SpectralField& a = field.coefficients(c);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const ModeIndex k = a.modes().mode(i);
      os << c << ',' << k.k1 << ',' << k.k2 << ',' << io::format_double(a[i].real()) << ','
         << io::format_double(a[i].imag()) << '\n';
    }
  }
  return os.str();
}

/// Reads the coefficient table back; numerators and nu are not part of the CSV.
inline std::array<SpectralField, 2> read_optimal_field_csv(const std::string& path) {
  auto t = io::read_csv(path, {"component", "k1", "k2", "re", "im"});
  if (t.rows.size() % 2 != 0) throw IoError(path + ": odd row count");
  const std::size_t per = t.rows.size() / 2;
  const int n = int(std::lround(std::sqrt(double(per))));
  if (std::size_t(n) * n != per) throw IoError(path + ": row count is not 2 n^2");
  std::array<SpectralField, 2> out{SpectralField(n), SpectralField(n)};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int c = int(t.rows[r][0]);
    const ModeIndex k{int(t.rows[r][1]), int(t.rows[r][2])};
    const std::size_t expect = r % per;
    if (c != int(r / per) + 1 || !out[0].modes().contains(k) || out[0].modes().index(k) != expect) {
      throw IoError(path + ": rows not in canonical order at line " + std::to_string(r + 2));
    }
    out[c - 1][expect] = cplx(t.rows[r][3], t.rows[r][4]);
  }
  return out;
}

}  // namespace anrsp

#endif  // ANRSP_RESPONSE_HPP
