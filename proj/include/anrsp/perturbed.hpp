#ifndef ANRSP_PERTURBED_HPP
#define ANRSP_PERTURBED_HPP

#include <string>
#include <vector>

#include "anrsp/maps.hpp"
#include "anrsp/response.hpp"
#include "anrsp/spectral.hpp"

namespace anrsp {

/// T_delta = T_0 + delta V for a real field V given by Fourier coefficients.
class PerturbedMap {
 public:
  PerturbedMap(TorusMapSpec base, SpectralField v1, SpectralField v2, double delta)
      : base_(std::move(base)), v1_(std::move(v1)), v2_(std::move(v2)), delta_(delta),
        name(base_.name + "+perturbation") {}

  const TorusMapSpec& base() const { return base_; }
  double delta() const { return delta_; }

  Vec2 lift(const TorusPoint& x) const {
    Vec2 y = lift_map(base_, x);
    if (delta_ != 0.0) {
      y[0] += delta_ * evaluate_series(v1_, x).real();
      y[1] += delta_ * evaluate_series(v2_, x).real();
    }
    return y;
  }

  TorusPoint eval(const TorusPoint& x) const {
    const Vec2 y = lift(x);
    return TorusPoint::wrapped(y[0], y[1]);
  }

  Jacobian2 jacobian(const TorusPoint& x) const {
    Jacobian2 j = anrsp::jacobian(base_, x);
    if (delta_ != 0.0) {
      j.a11 += delta_ * evaluate_series(spectral_derivative(v1_, 0), x).real();
      j.a12 += delta_ * evaluate_series(spectral_derivative(v1_, 1), x).real();
      j.a21 += delta_ * evaluate_series(spectral_derivative(v2_, 0), x).real();
      j.a22 += delta_ * evaluate_series(spectral_derivative(v2_, 1), x).real();
    }
    return j;
  }

  /// Lifted images on the fine grid, with the field synthesized by FFT.
  std::vector<Vec2> images_on_grid(int N) const {
    std::vector<Vec2> out = sample_lifted_images(base_, N);
    if (delta_ != 0.0) {
      const Grid g1 = synthesize(v1_, N);
      const Grid g2 = synthesize(v2_, N);
      for (std::size_t p = 0; p < out.size(); ++p) {
        out[p][0] += delta_ * g1[p].real();
        out[p][1] += delta_ * g2[p].real();
      }
    }
    return out;
  }

  /// det D T_delta on the fine grid.
  std::vector<double> determinants_on_grid(int N) const {
    std::vector<double> det;
    det.reserve(std::size_t(N) * N);
    std::array<Grid, 4> d;
    if (delta_ != 0.0) {
      d = {synthesize(spectral_derivative(v1_, 0), N), synthesize(spectral_derivative(v1_, 1), N),
           synthesize(spectral_derivative(v2_, 0), N), synthesize(spectral_derivative(v2_, 1), N)};
    }
    std::size_t p = 0;
    for (const auto& x : fine_grid(N)) {
      Jacobian2 j = anrsp::jacobian(base_, x);
      if (delta_ != 0.0) {
        j.a11 += delta_ * d[0][p].real();
        j.a12 += delta_ * d[1][p].real();
        j.a21 += delta_ * d[2][p].real();
        j.a22 += delta_ * d[3][p].real();
      }
      det.push_back(j.det());
      ++p;
    }
    return det;
  }

 private:
  TorusMapSpec base_;
  SpectralField v1_;
  SpectralField v2_;
  double delta_;

 public:
  std::string name;
};

inline PerturbedMap perturbed_map(const TorusMapSpec& map, const OptimalField& field, double delta) {
  return PerturbedMap(map, field.a1, field.a2, delta);
}

inline std::vector<Vec2> sample_lifted_images(const PerturbedMap& map, int N) {
  return map.images_on_grid(N);
}

inline std::vector<double> determinants_on_grid(const TorusMapSpec& map, int N) {
  std::vector<double> det;
  det.reserve(std::size_t(N) * N);
  for (const auto& x : fine_grid(N)) det.push_back(jacobian(map, x).det());
  return det;
}

inline std::vector<double> determinants_on_grid(const PerturbedMap& map, int N) {
  return map.determinants_on_grid(N);
}

/// Smoke test for local invertibility: det DT keeps one sign on the fine grid.
template <class Map>
void check_det_sign(const Map& map, int N) {
  const auto det = determinants_on_grid(map, N);
  bool pos = false, neg = false;
  for (double d : det) {
    pos = pos || d > 0.0;
    neg = neg || d <= 0.0;
  }
  if (pos && neg) {
    throw DetSignFlip("det DT changes sign on the fine grid; the perturbation is too large");
  }
}

}  // namespace anrsp

#endif  // ANRSP_PERTURBED_HPP
