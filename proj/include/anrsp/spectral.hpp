#ifndef ANRSP_SPECTRAL_HPP
#define ANRSP_SPECTRAL_HPP

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "anrsp/errors.hpp"
#include "anrsp/io.hpp"
#include "anrsp/maps.hpp"

namespace anrsp {

using cplx = std::complex<double>;

inline constexpr int kSobolevOrder = 7;

struct SpectralConfig {
  int n = 32;           // Fourier modes per axis
  int N = 128;          // fine grid points per axis
  double gamma = 0.02;  // Sobolev scale
  int sobolev_order = kSobolevOrder;

  /// Config with the default fine grid N = 4n.
  static SpectralConfig for_order(int n, double gamma = 0.02) {
    return {n, 4 * n, gamma, kSobolevOrder};
  }

  void validate() const {
    if (n < 4 || n % 2 != 0) {
      throw BadOrder("n must be even and >= 4 (got " + std::to_string(n) + ")");
    }
    if (N < 4 * n) {
      throw GridTooCoarse("fine grid must satisfy N >= 4n (got N=" + std::to_string(N) +
                          ", n=" + std::to_string(n) + ")");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw ConfigError("gamma must lie in (0,1]");
    }
    if (sobolev_order != kSobolevOrder) {
      throw ConfigError("Sobolev order is fixed at 7");
    }
  }
};

struct ModeIndex {
  int k1 = 0;
  int k2 = 0;

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
  ModeIndex operator-() const { return {-k1, -k2}; }
};

/// F_n = {-n/2+1, ..., n/2}^2 enumerated row-major by k1 then k2. The
/// position in this enumeration is the global vector/matrix index.
class ModeSet {
 public:
  explicit ModeSet(int n) : n_(n) {
    if (n < 4 || n % 2 != 0) {
      throw BadOrder("n must be even and >= 4 (got " + std::to_string(n) + ")");
    }
  }

  int order() const { return n_; }
  int lo() const { return -n_ / 2 + 1; }
  int hi() const { return n_ / 2; }
  std::size_t size() const { return std::size_t(n_) * std::size_t(n_); }

  bool contains(ModeIndex k) const {
    return k.k1 >= lo() && k.k1 <= hi() && k.k2 >= lo() && k.k2 <= hi();
  }
  std::size_t index(ModeIndex k) const {
    return std::size_t(k.k1 - lo()) * std::size_t(n_) + std::size_t(k.k2 - lo());
  }
  ModeIndex mode(std::size_t i) const {
    return {int(i / std::size_t(n_)) + lo(), int(i % std::size_t(n_)) + lo()};
  }
  std::size_t zero_index() const { return index({0, 0}); }

  /// Modes whose negative lies outside F_n (k1 = n/2 or k2 = n/2).
  bool unpaired(ModeIndex k) const { return k.k1 == hi() || k.k2 == hi(); }

 private:
  int n_;
};

inline std::vector<ModeIndex> mode_set(int n) {
  ModeSet ms(n);
  std::vector<ModeIndex> out;
  out.reserve(ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) out.push_back(ms.mode(i));
  return out;
}

/// Fourier multiplier of the 2-d Fejer kernel of order n.
inline double fejer_weight(ModeIndex k, int n) {
  const double w1 = std::max(0.0, 1.0 - std::abs(k.k1) / double(n + 1));
  const double w2 = std::max(0.0, 1.0 - std::abs(k.k2) / double(n + 1));
  return w1 * w2;
}

/// ||e_k||^2 in the gamma-scaled H^order norm: sum_{m=0}^{order} ((2 pi gamma)^2 |k|^2)^m.
inline double sobolev_weight(ModeIndex k, double gamma, int order = kSobolevOrder) {
  const double r = std::pow(kTwoPi * gamma, 2) * (double(k.k1) * k.k1 + double(k.k2) * k.k2);
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m <= order; ++m) {
    term *= r;
    sum += term;
  }
  return sum;
}

/// Fourier coefficients on F_n. A field flagged real is Hermitian-symmetric
/// with its unpaired modes zeroed.
class SpectralField {
 public:
  SpectralField() : modes_(4) {}
  explicit SpectralField(int n) : modes_(n), coeffs_(modes_.size(), cplx(0.0)) {}
  SpectralField(int n, std::vector<cplx> coeffs) : modes_(n), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != modes_.size()) throw ConfigError("SpectralField: wrong coefficient count");
  }

  int order() const { return modes_.order(); }
  const ModeSet& modes() const { return modes_; }
  std::size_t size() const { return coeffs_.size(); }

  cplx& operator[](std::size_t i) { return coeffs_[i]; }
  const cplx& operator[](std::size_t i) const { return coeffs_[i]; }
  cplx& at(ModeIndex k) { return coeffs_[modes_.index(k)]; }
  const cplx& at(ModeIndex k) const { return coeffs_[modes_.index(k)]; }

  std::vector<cplx>& data() { return coeffs_; }
  const std::vector<cplx>& data() const { return coeffs_; }

  bool is_real() const { return real_; }

  cplx mean() const { return coeffs_[modes_.zero_index()]; }

  /// max |c(k) - conj(c(-k))| over paired modes.
  double hermitian_defect() const {
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      ModeIndex k = modes_.mode(i);
      if (modes_.unpaired(k)) continue;
      d = std::max(d, std::abs(coeffs_[i] - std::conj(at(-k))));
    }
    return d;
  }

  /// Projects onto real-valued fields: averages each pair and zeroes the
  /// unpaired modes.
  SpectralField& make_real() {
    std::vector<cplx> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      ModeIndex k = modes_.mode(i);
      if (modes_.unpaired(k)) continue;
      out[i] = 0.5 * (coeffs_[i] + std::conj(at(-k)));
    }
    coeffs_ = std::move(out);
    real_ = true;
    return *this;
  }

  /// Averages each +/- pair and leaves the unpaired modes untouched.
  SpectralField& symmetrize_pairs() {
    std::vector<cplx> out(coeffs_);
    for (std::size_t i = 0; i < size(); ++i) {
      ModeIndex k = modes_.mode(i);
      if (!modes_.unpaired(k)) out[i] = 0.5 * (coeffs_[i] + std::conj(at(-k)));
    }
    coeffs_ = std::move(out);
    return *this;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  SpectralField& operator+=(const SpectralField& o) {
    for (std::size_t i = 0; i < size(); ++i) coeffs_[i] += o.coeffs_[i];
    real_ = real_ && o.real_;
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    for (std::size_t i = 0; i < size(); ++i) coeffs_[i] -= o.coeffs_[i];
    real_ = real_ && o.real_;
    return *this;
  }
  SpectralField& operator*=(cplx s) {
    for (auto& c : coeffs_) c *= s;
    if (s.imag() != 0.0) real_ = false;
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(cplx s, SpectralField a) { return a *= s; }

 private:
  ModeSet modes_;
  std::vector<cplx> coeffs_;
  bool real_ = false;
};

/// sum_k a(k) conj(b(k)), i.e. the L^2 pairing of the two series.
inline cplx spectral_inner(const SpectralField& a, const SpectralField& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

/// N x N samples, row-major with the first index along x1.
class Grid {
 public:
  Grid() = default;
  explicit Grid(int N) : N_(N), v_(std::size_t(N) * std::size_t(N), cplx(0.0)) {}

  int size_per_axis() const { return N_; }
  std::size_t size() const { return v_.size(); }
  cplx& operator()(int i, int j) { return v_[std::size_t(i) * N_ + j]; }
  const cplx& operator()(int i, int j) const { return v_[std::size_t(i) * N_ + j]; }
  cplx& operator[](std::size_t p) { return v_[p]; }
  const cplx& operator[](std::size_t p) const { return v_[p]; }
  std::vector<cplx>& data() { return v_; }
  const std::vector<cplx>& data() const { return v_; }

  /// Frequency bin for signed frequency m (wraparound).
  std::size_t bin(int m1, int m2) const {
    const int b1 = ((m1 % N_) + N_) % N_;
    const int b2 = ((m2 % N_) + N_) % N_;
    return std::size_t(b1) * N_ + b2;
  }

 private:
  int N_ = 0;
  std::vector<cplx> v_;
};

/// The N^2 points (i/N, j/N), row-major.
inline std::vector<TorusPoint> fine_grid(int N) {
  if (N < 1) throw ConfigError("fine grid size must be positive");
  std::vector<TorusPoint> pts;
  pts.reserve(std::size_t(N) * N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) pts.push_back({double(i) / N, double(j) / N});
  }
  return pts;
}

namespace detail {

/// In-place 2-d FFTW plans, one pair per size, created once under a lock.
/// fftw_execute_dft on distinct arrays is safe to call concurrently.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  std::pair<fftw_plan, fftw_plan> get(int N) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(N);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(std::size_t(N) * N);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan fwd = fftw_plan_dft_2d(N, N, p, p, FFTW_FORWARD, flags);
    fftw_plan bwd = fftw_plan_dft_2d(N, N, p, p, FFTW_BACKWARD, flags);
    plans_.emplace(N, std::make_pair(fwd, bwd));
    return {fwd, bwd};
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [n, pr] : plans_) {
      fftw_destroy_plan(pr.first);
      fftw_destroy_plan(pr.second);
    }
  }

  std::mutex mu_;
  std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

inline void fft_inplace(Grid& g, bool forward) {
  auto [fwd, bwd] = FftPlans::instance().get(g.size_per_axis());
  auto* p = reinterpret_cast<fftw_complex*>(g.data().data());
  fftw_execute_dft(forward ? fwd : bwd, p, p);
}

}  // namespace detail

/// Full normalized spectrum: bin m holds (1/N^2) sum_x f(x) e^{-2 pi i m.x}.
inline Grid spectrum(Grid g) {
  detail::fft_inplace(g, true);
  const double scale = 1.0 / double(g.size());
  for (auto& v : g.data()) v *= scale;
  return g;
}

/// Fourier coefficients on F_n of the sampled function.
inline SpectralField analyze(const Grid& samples, int n) {
  const int N = samples.size_per_axis();
  if (N < 4 * n) {
    throw GridTooCoarse("fine grid must satisfy N >= 4n (got N=" + std::to_string(N) +
                        ", n=" + std::to_string(n) + ")");
  }
  Grid spec = spectrum(samples);
  SpectralField f(n);
  const ModeSet& ms = f.modes();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    ModeIndex k = ms.mode(i);
    f[i] = spec[spec.bin(k.k1, k.k2)];
  }
  return f;
}

/// sum_{k in F_n} coeff(k) e^{2 pi i k.x} at the N x N grid points.
inline Grid synthesize(const SpectralField& field, int N) {
  Grid g(N);
  const ModeSet& ms = field.modes();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    ModeIndex k = ms.mode(i);
    g[g.bin(k.k1, k.k2)] += field[i];
  }
  detail::fft_inplace(g, false);
  return g;
}

/// Samples a function of a torus point on the fine grid.
template <class F>
Grid sample_on_grid(int N, F&& f) {
  Grid g(N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) g(i, j) = f(TorusPoint{double(i) / N, double(j) / N});
  }
  return g;
}

/// Spectral partial derivative d/dx_axis (axis 0 or 1): k -> 2 pi i k_axis f(k).
inline SpectralField spectral_derivative(const SpectralField& f, int axis) {
  SpectralField d(f.order());
  const ModeSet& ms = f.modes();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    ModeIndex k = ms.mode(i);
    d[i] = cplx(0.0, kTwoPi * (axis == 0 ? k.k1 : k.k2)) * f[i];
  }
  return d;
}

/// Evaluates the series at an arbitrary point.
inline cplx evaluate_series(const SpectralField& f, const TorusPoint& x) {
  const ModeSet& ms = f.modes();
  const int n = ms.order();
  // e^{2 pi i k x} for k in [lo, hi] built by recurrence per axis.
  std::vector<cplx> e1(n), e2(n);
  const cplx w1 = std::polar(1.0, kTwoPi * x.x1);
  const cplx w2 = std::polar(1.0, kTwoPi * x.x2);
  cplx s1 = std::polar(1.0, kTwoPi * ms.lo() * x.x1);
  cplx s2 = std::polar(1.0, kTwoPi * ms.lo() * x.x2);
  for (int a = 0; a < n; ++a) {
    e1[a] = s1;
    e2[a] = s2;
    s1 *= w1;
    s2 *= w2;
  }
  cplx sum = 0.0;
  for (int a = 0; a < n; ++a) {
    cplx row = 0.0;
    for (int b = 0; b < n; ++b) row += f[std::size_t(a) * n + b] * e2[b];
    sum += e1[a] * row;
  }
  return sum;
}

// CSV: k1,k2,re,im in canonical mode order.
inline std::string spectral_field_csv(const SpectralField& f) {
  std::ostringstream os;
  os << "k1,k2,re,im\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    ModeIndex k = f.modes().mode(i);
    os << k.k1 << ',' << k.k2 << ',' << io::format_double(f[i].real()) << ','
       << io::format_double(f[i].imag()) << '\n';
  }
  return os.str();
}

inline SpectralField read_spectral_field_csv(const std::string& path) {
  auto t = io::read_csv(path, {"k1", "k2", "re", "im"});
  const auto count = t.rows.size();
  int n = int(std::lround(std::sqrt(double(count))));
  if (std::size_t(n) * n != count) throw IoError(path + ": row count is not a square");
  SpectralField f(n);
  for (std::size_t r = 0; r < count; ++r) {
    ModeIndex k{int(t.rows[r][0]), int(t.rows[r][1])};
    if (!f.modes().contains(k) || f.modes().index(k) != r) {
      throw IoError(path + ": modes not in canonical order at row " + std::to_string(r + 2));
    }
    f[r] = cplx(t.rows[r][2], t.rows[r][3]);
  }
  return f;
}

}  // namespace anrsp

#endif  // ANRSP_SPECTRAL_HPP
