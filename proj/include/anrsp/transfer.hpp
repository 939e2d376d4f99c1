#ifndef ANRSP_TRANSFER_HPP
#define ANRSP_TRANSFER_HPP

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "anrsp/errors.hpp"
#include "anrsp/maps.hpp"
#include "anrsp/parallel.hpp"
#include "anrsp/spectral.hpp"

namespace anrsp {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Fejer-mollified transfer operator on F_n. entries()(p, q) maps the
/// coefficient of input mode q to the coefficient of output mode p.
class TransferMatrix {
 public:
  TransferMatrix(ComplexMatrix entries, SpectralConfig config, std::string map_label)
      : entries_(std::move(entries)), config_(config), modes_(config.n),
        map_label_(std::move(map_label)) {
    if (entries_.rows() != Eigen::Index(modes_.size()) ||
        entries_.cols() != Eigen::Index(modes_.size())) {
      throw ConfigError("TransferMatrix: entries must be n^2 x n^2");
    }
  }

  const ComplexMatrix& entries() const { return entries_; }
  const SpectralConfig& config() const { return config_; }
  const ModeSet& modes() const { return modes_; }
  const std::string& map_label() const { return map_label_; }

  cplx entry(ModeIndex out, ModeIndex in) const {
    return entries_(Eigen::Index(modes_.index(out)), Eigen::Index(modes_.index(in)));
  }

  SpectralField apply(const SpectralField& f) const {
    Eigen::Map<const ComplexVector> x(f.data().data(), Eigen::Index(f.size()));
    ComplexVector y = entries_ * x;
    return SpectralField(config_.n, std::vector<cplx>(y.data(), y.data() + y.size()));
  }

 private:
  ComplexMatrix entries_;
  SpectralConfig config_;
  ModeSet modes_;
  std::string map_label_;
};

/// Lifted images T(x) at the fine-grid points, row-major.
inline std::vector<Vec2> sample_lifted_images(const TorusMapSpec& map, int N) {
  std::vector<Vec2> out;
  out.reserve(std::size_t(N) * N);
  for (const auto& x : fine_grid(N)) out.push_back(lift_map(map, x));
  return out;
}

/// Matrix from sampled images: row p is fejer(p) times the coefficients of
/// e_{-p} o T at frequencies -q.
inline TransferMatrix build_transfer_matrix_from_images(const std::vector<Vec2>& images,
                                                        const SpectralConfig& config,
                                                        const std::string& label) {
  config.validate();
  const int N = config.N;
  if (images.size() != std::size_t(N) * N) throw ConfigError("image grid size mismatch");
  const ModeSet modes(config.n);
  const std::size_t dim = modes.size();

  std::vector<Vec2> wrapped(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    wrapped[i] = {wrap_unit(images[i][0]), wrap_unit(images[i][1])};
  }

  const auto edim = static_cast<Eigen::Index>(dim);
  ComplexMatrix m(edim, edim);
  std::vector<Grid> scratch(worker_count(), Grid(N));
  parallel_for(dim, [&](std::size_t row, std::size_t worker) {
    const ModeIndex p = modes.mode(row);
    Grid& g = scratch[worker];
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
      const double phase = -kTwoPi * (p.k1 * wrapped[i][0] + p.k2 * wrapped[i][1]);
      g[i] = std::polar(1.0, phase);
    }
    g = spectrum(std::move(g));
    const double w = fejer_weight(p, config.n);
    for (std::size_t col = 0; col < dim; ++col) {
      const ModeIndex q = modes.mode(col);
      m(Eigen::Index(row), Eigen::Index(col)) = w * g[g.bin(-q.k1, -q.k2)];
    }
  });
  return TransferMatrix(std::move(m), config, label);
}

template <class Map>
TransferMatrix build_transfer_matrix(const Map& map, const SpectralConfig& config) {
  config.validate();
  return build_transfer_matrix_from_images(sample_lifted_images(map, config.N), config,
                                           map.name);
}

struct SRBEstimate {
  SpectralField density;
  cplx eigenvalue = 1.0;
  int iterations = 0;
  double second_modulus = 0.0;    // deflated power-iteration estimate of |lambda_2|
  double hermitian_defect = 0.0;  // before projection onto real fields
  double residual = 0.0;          // max |(M f - lambda f)(k)|
};

struct EigenOptions {
  double tolerance = 1e-13;
  int max_iterations = 5000;
  double degeneracy_tolerance = 1e-8;
  int deflation_iterations = 100;
};

namespace detail {

struct PowerResult {
  ComplexVector vector;
  cplx value;
  int iterations;
};

template <class Apply>
PowerResult power_iteration(Apply&& apply, ComplexVector v, const EigenOptions& opt) {
  v /= v.norm();
  cplx previous = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    ComplexVector w = apply(v);
    const cplx rayleigh = v.dot(w);  // v^H w, v has unit norm
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NoConvergence("power iteration collapsed to the zero vector");
    }
    v = w / norm;
    if (std::abs(rayleigh - previous) < opt.tolerance) return {v, rayleigh, it};
    previous = rayleigh;
  }
  throw NoConvergence("power iteration did not converge in " +
                      std::to_string(opt.max_iterations) + " iterations");
}

inline ComplexVector start_vector(std::size_t dim) {
  // Deterministic, non-symmetric start so that no mode is missed by accident.
  ComplexVector v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    v(Eigen::Index(i)) = cplx(1.0 + 0.5 * std::cos(0.7 * double(i)), 0.25 * std::sin(1.3 * double(i)));
  }
  return v;
}

}  // namespace detail

/// Leading eigenpair by power iteration, phase-fixed so that coeff(0,0) is
/// real positive and then scaled to coeff(0,0) = 1.
inline SRBEstimate leading_eigenpair(const TransferMatrix& tm, const EigenOptions& opt = {}) {
  const ComplexMatrix& m = tm.entries();
  const std::size_t dim = tm.modes().size();
  const std::size_t zero = tm.modes().zero_index();

  auto right = detail::power_iteration([&](const ComplexVector& v) { return ComplexVector(m * v); },
                                       detail::start_vector(dim), opt);
  auto left = detail::power_iteration(
      [&](const ComplexVector& v) { return ComplexVector(m.adjoint() * v); },
      detail::start_vector(dim), opt);

  // Deflate the leading pair and estimate the next modulus.
  const cplx overlap = left.vector.dot(right.vector);
  double second = 0.0;
  if (std::abs(overlap) > 1e-300) {
    ComplexVector w = detail::start_vector(dim).reverse();
    w /= w.norm();
    double log_sum = 0.0;
    int counted = 0;
    for (int it = 0; it < opt.deflation_iterations; ++it) {
      ComplexVector y = m * w;
      y -= right.value * right.vector * (left.vector.dot(w) / overlap);
      const double r = y.norm();
      if (!(r > 0.0)) {
        log_sum = -std::numeric_limits<double>::infinity();
        counted = 1;
        break;
      }
      if (it >= opt.deflation_iterations / 2) {
        log_sum += std::log(r);
        ++counted;
      }
      w = y / r;
    }
    second = counted > 0 ? std::exp(log_sum / counted) : 0.0;
  }
  if (std::abs(second - std::abs(right.value)) < opt.degeneracy_tolerance) {
    throw NonUniqueLeading("second eigenvalue modulus " + std::to_string(second) +
                           " matches the leading one");
  }

  ComplexVector v = right.vector;
  const cplx c0 = v(Eigen::Index(zero));
  if (std::abs(c0) < 1e-300) throw NoConvergence("leading eigenvector has zero mass");
  v /= c0;  // phase fix and mass normalization in one step

  SRBEstimate est;
  est.eigenvalue = right.value;
  est.iterations = right.iterations;
  est.second_modulus = second;
  est.density = SpectralField(tm.config().n, std::vector<cplx>(v.data(), v.data() + v.size()));
  est.hermitian_defect = est.density.hermitian_defect();
  // The unpaired modes stay as computed: zeroing them would break M f = f.
  est.density.symmetrize_pairs();
  est.density[zero] = 1.0;
  const SpectralField image = tm.apply(est.density);
  double res = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    res = std::max(res, std::abs(image[i] - est.eigenvalue * est.density[i]));
  }
  est.residual = res;
  return est;
}

inline constexpr double kPivotFloor = 1e-14;
inline constexpr double kMeanZeroTolerance = 1e-10;

/// LU factorization of I - L restricted to the mean-zero modes.
class ResolventSolver {
 public:
  explicit ResolventSolver(const TransferMatrix& tm) : modes_(tm.config().n) {
    const std::size_t dim = modes_.size();
    const std::size_t zero = modes_.zero_index();
    const Eigen::Index r = Eigen::Index(dim - 1);
    ComplexMatrix a(r, r);
    const ComplexMatrix& m = tm.entries();
    for (std::size_t j = 0; j < dim; ++j) {
      if (j == zero) continue;
      const Eigen::Index jj = Eigen::Index(reduced(j));
      for (std::size_t i = 0; i < dim; ++i) {
        if (i == zero) continue;
        a(Eigen::Index(reduced(i)), jj) =
            (i == j ? cplx(1.0) : cplx(0.0)) - m(Eigen::Index(i), Eigen::Index(j));
      }
    }
    lu_.compute(a);
    min_pivot_ = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot_ >= kPivotFloor)) {
      throw SingularResolvent("pivot magnitude " + std::to_string(min_pivot_) +
                              " below floor; the truncated operator has an eigenvalue near 1 "
                              "on mean-zero fields");
    }
  }

  int order() const { return modes_.order(); }
  double min_pivot() const { return min_pivot_; }

  /// Solves (I - L) x = b on mean-zero fields.
  SpectralField apply(const SpectralField& b) const { return solve(b, false); }

  /// Solves (I - L)^H x = b on mean-zero fields.
  SpectralField apply_adjoint(const SpectralField& b) const { return solve(b, true); }

 private:
  std::size_t reduced(std::size_t i) const { return i < modes_.zero_index() ? i : i - 1; }

  SpectralField solve(const SpectralField& b, bool adjoint) const {
    const std::size_t zero = modes_.zero_index();
    if (b.order() != modes_.order()) throw ConfigError("resolvent: order mismatch");
    if (std::abs(b[zero]) > kMeanZeroTolerance) {
      throw NotMeanZero("right-hand side has mean " + std::to_string(std::abs(b[zero])));
    }
    ComplexVector rhs(Eigen::Index(b.size() - 1));
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i != zero) rhs(Eigen::Index(reduced(i))) = b[i];
    }
    ComplexVector x = adjoint ? ComplexVector(lu_.adjoint().solve(rhs)) : ComplexVector(lu_.solve(rhs));
    SpectralField out(modes_.order());
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i != zero) out[i] = x(Eigen::Index(reduced(i)));
    }
    return out;
  }

  ModeSet modes_;
  Eigen::PartialPivLU<ComplexMatrix> lu_;
  double min_pivot_ = 0.0;
};

inline ResolventSolver build_resolvent(const TransferMatrix& tm) { return ResolventSolver(tm); }

inline SpectralField apply_resolvent(const ResolventSolver& solver, const SpectralField& b) {
  return solver.apply(b);
}

// Binary dump: "ANRSPMAT", u32 n, u32 reserved, then column-major
// little-endian complex doubles.
inline void write_matrix_dump(const std::string& path, const TransferMatrix& tm) {
  static_assert(std::endian::native == std::endian::little, "dump format assumes little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const char magic[8] = {'A', 'N', 'R', 'S', 'P', 'M', 'A', 'T'};
  const std::uint32_t n = std::uint32_t(tm.config().n);
  const std::uint32_t reserved = 0;
  out.write(magic, 8);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  const ComplexMatrix& m = tm.entries();
  out.write(reinterpret_cast<const char*>(m.data()),
            std::streamsize(sizeof(cplx) * std::size_t(m.size())));
  if (!out) throw IoError("write failed for " + path);
}

inline TransferMatrix read_matrix_dump(const std::string& path, SpectralConfig config,
                                       const std::string& label = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  std::uint32_t n = 0, reserved = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::memcmp(magic, "ANRSPMAT", 8) != 0) throw IoError(path + ": bad header");
  config.n = int(n);
  const Eigen::Index dim = Eigen::Index(n) * Eigen::Index(n);
  ComplexMatrix m(dim, dim);
  in.read(reinterpret_cast<char*>(m.data()), std::streamsize(sizeof(cplx) * std::size_t(m.size())));
  if (!in) throw IoError(path + ": truncated matrix data");
  return TransferMatrix(std::move(m), config, label);
}

}  // namespace anrsp

#endif  // ANRSP_TRANSFER_HPP
