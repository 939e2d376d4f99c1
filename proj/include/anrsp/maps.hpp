#ifndef ANRSP_MAPS_HPP
#define ANRSP_MAPS_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "anrsp/dual.hpp"
#include "anrsp/errors.hpp"

namespace anrsp {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces a real coordinate into [0,1).
inline double wrap_unit(double v) {
  double r = v - std::floor(v);
  // floor can round r up to exactly 1 for tiny negative v
  return r >= 1.0 ? 0.0 : r;
}

struct TorusPoint {
  double x1 = 0.0;
  double x2 = 0.0;

  static TorusPoint wrapped(double a, double b) { return {wrap_unit(a), wrap_unit(b)}; }
};

/// Lifted point in R^2 (no reduction).
using Vec2 = std::array<double, 2>;

template <class S>
struct Mat2 {
  S a11{}, a12{}, a21{}, a22{};

  S det() const { return a11 * a22 - a12 * a21; }

  Mat2 operator*(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }

  const S& operator()(int i, int j) const {
    return i == 0 ? (j == 0 ? a11 : a12) : (j == 0 ? a21 : a22);
  }

  static Mat2 identity() { return {S(1.0), S(0.0), S(0.0), S(1.0)}; }
};

/// D_x T, row-major.
using Jacobian2 = Mat2<double>;

enum class TrigKind { Sin, Cos };

/// amplitude * kind(2 pi (j1 x1 + j2 x2) + phase), added to `component` (1 or 2).
struct TrigTerm {
  int component = 1;
  double amplitude = 0.0;
  int j1 = 0;
  int j2 = 0;
  double phase = 0.0;
  TrigKind kind = TrigKind::Sin;
};

/// T(x) = A x + sum of trig terms (mod 1).
struct TorusMapSpec {
  std::array<std::array<long, 2>, 2> linear{{{1, 0}, {0, 1}}};
  std::vector<TrigTerm> trig;
  std::string name;

  long linear_det() const {
    return linear[0][0] * linear[1][1] - linear[0][1] * linear[1][0];
  }
};

/// Throws ConfigError for malformed map specifications.
inline void validate_map(const TorusMapSpec& map) {
  if (std::labs(map.linear_det()) < 1) {
    throw ConfigError("map '" + map.name + "': |det A| must be >= 1");
  }
  for (const auto& t : map.trig) {
    if (t.component != 1 && t.component != 2) {
      throw ConfigError("map '" + map.name + "': trig component must be 1 or 2");
    }
  }
}

inline TorusMapSpec cat_map() {
  TorusMapSpec m;
  m.linear = {{{2, 1}, {1, 1}}};
  m.name = "cat";
  return m;
}

/// (2x1 + x2 + 2 Delta cos(2 pi x1), x1 + x2 + Delta sin(4 pi x2 + 1)).
inline TorusMapSpec nonlinear_cat_map(double delta = 0.01) {
  TorusMapSpec m = cat_map();
  m.trig.push_back({1, 2.0 * delta, 1, 0, 0.0, TrigKind::Cos});
  m.trig.push_back({2, delta, 0, 2, 1.0, TrigKind::Sin});
  m.name = "nonlinear_cat";
  return m;
}

/// Lifted map R^2 -> R^2, generic over double and DualScalar.
template <class S>
std::array<S, 2> lift_map(const TorusMapSpec& map, const S& x1, const S& x2) {
  std::array<S, 2> y{S(double(map.linear[0][0])) * x1 + S(double(map.linear[0][1])) * x2,
                     S(double(map.linear[1][0])) * x1 + S(double(map.linear[1][1])) * x2};
  using std::cos;
  using std::sin;
  for (const auto& t : map.trig) {
    S arg = S(kTwoPi * t.j1) * x1 + S(kTwoPi * t.j2) * x2 + S(t.phase);
    S v = t.kind == TrigKind::Sin ? sin(arg) : cos(arg);
    y[t.component - 1] += S(t.amplitude) * v;
  }
  return y;
}

/// Closed-form D_xT, generic over the scalar so that it can itself be
/// differentiated with DualScalar.
template <class S>
Mat2<S> jacobian_of(const TorusMapSpec& map, const S& x1, const S& x2) {
  Mat2<S> j{S(double(map.linear[0][0])), S(double(map.linear[0][1])),
            S(double(map.linear[1][0])), S(double(map.linear[1][1]))};
  using std::cos;
  using std::sin;
  for (const auto& t : map.trig) {
    S arg = S(kTwoPi * t.j1) * x1 + S(kTwoPi * t.j2) * x2 + S(t.phase);
    // d/dx_i of amp*sin(arg) = amp*2pi*j_i*cos(arg); of amp*cos(arg) = -amp*2pi*j_i*sin(arg)
    S slope = t.kind == TrigKind::Sin ? S(t.amplitude * kTwoPi) * cos(arg)
                                      : S(-t.amplitude * kTwoPi) * sin(arg);
    if (t.component == 1) {
      j.a11 += slope * S(double(t.j1));
      j.a12 += slope * S(double(t.j2));
    } else {
      j.a21 += slope * S(double(t.j1));
      j.a22 += slope * S(double(t.j2));
    }
  }
  return j;
}

inline Vec2 lift_map(const TorusMapSpec& map, const TorusPoint& x) {
  return lift_map<double>(map, x.x1, x.x2);
}

inline TorusPoint eval_map(const TorusMapSpec& map, const TorusPoint& x) {
  auto y = lift_map(map, x);
  return TorusPoint::wrapped(y[0], y[1]);
}

inline Jacobian2 jacobian(const TorusMapSpec& map, const TorusPoint& x) {
  return jacobian_of<double>(map, x.x1, x.x2);
}

inline constexpr double kSingularDetFloor = 1e-12;

template <class S>
Mat2<S> inverse_of(const Mat2<S>& j, double det_floor = kSingularDetFloor) {
  const S det = j.det();
  if (std::abs(value_of(det)) < det_floor) {
    throw SingularJacobian("|det DT| = " + std::to_string(std::abs(value_of(det))) +
                           " below floor");
  }
  return {j.a22 / det, -j.a12 / det, -j.a21 / det, j.a11 / det};
}

/// Adjugate over determinant.
inline Jacobian2 inverse_jacobian(const Jacobian2& j, double det_floor = kSingularDetFloor) {
  return inverse_of<double>(j, det_floor);
}

/// Tensor divergence of x -> (D_xT)^{-1}: component j is sum_i d/dx_i B_ij,
/// so that (div B) . a = div(B a) for constant a.
inline Vec2 div_inverse_jacobian(const TorusMapSpec& map, const TorusPoint& x,
                                 double det_floor = kSingularDetFloor) {
  const auto x1 = DualScalar::variable_x1(x.x1);
  const auto x2 = DualScalar::variable_x2(x.x2);
  const Mat2<DualScalar> b = inverse_of(jacobian_of(map, x1, x2), det_floor);
  return {b.a11.d1 + b.a21.d2, b.a12.d1 + b.a22.d2};
}

/// Inverse Jacobian together with its divergence, from a single dual evaluation.
struct InverseJacobianSample {
  Jacobian2 inverse;
  Vec2 divergence;
};

inline InverseJacobianSample inverse_jacobian_sample(const TorusMapSpec& map, const TorusPoint& x,
                                                     double det_floor = kSingularDetFloor) {
  const auto x1 = DualScalar::variable_x1(x.x1);
  const auto x2 = DualScalar::variable_x2(x.x2);
  const Mat2<DualScalar> b = inverse_of(jacobian_of(map, x1, x2), det_floor);
  return {{b.a11.value, b.a12.value, b.a21.value, b.a22.value},
          {b.a11.d1 + b.a21.d2, b.a12.d1 + b.a22.d2}};
}

}  // namespace anrsp

#endif  // ANRSP_MAPS_HPP
