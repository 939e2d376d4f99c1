#ifndef ANRSP_DUAL_HPP
#define ANRSP_DUAL_HPP

#include <cmath>

namespace anrsp {

/// Forward-mode dual number carrying the value and both partials on the
/// torus, d/dx1 and d/dx2.
struct DualScalar {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr DualScalar() = default;
  constexpr DualScalar(double v) : value(v) {}  // NOLINT: implicit constant lift
  constexpr DualScalar(double v, double p1, double p2) : value(v), d1(p1), d2(p2) {}

  static constexpr DualScalar variable_x1(double v) { return {v, 1.0, 0.0}; }
  static constexpr DualScalar variable_x2(double v) { return {v, 0.0, 1.0}; }

  DualScalar& operator+=(const DualScalar& o) {
    value += o.value;
    d1 += o.d1;
    d2 += o.d2;
    return *this;
  }
  DualScalar& operator-=(const DualScalar& o) {
    value -= o.value;
    d1 -= o.d1;
    d2 -= o.d2;
    return *this;
  }
  DualScalar& operator*=(const DualScalar& o) {
    d1 = d1 * o.value + value * o.d1;
    d2 = d2 * o.value + value * o.d2;
    value *= o.value;
    return *this;
  }
  DualScalar& operator/=(const DualScalar& o) {
    const double inv = 1.0 / o.value;
    const double q = value * inv;
    d1 = (d1 - q * o.d1) * inv;
    d2 = (d2 - q * o.d2) * inv;
    value = q;
    return *this;
  }
};

inline DualScalar operator-(DualScalar a) { return {-a.value, -a.d1, -a.d2}; }
inline DualScalar operator+(DualScalar a, const DualScalar& b) { return a += b; }
inline DualScalar operator-(DualScalar a, const DualScalar& b) { return a -= b; }
inline DualScalar operator*(DualScalar a, const DualScalar& b) { return a *= b; }
inline DualScalar operator/(DualScalar a, const DualScalar& b) { return a /= b; }

inline DualScalar sin(const DualScalar& a) {
  const double c = std::cos(a.value);
  return {std::sin(a.value), c * a.d1, c * a.d2};
}
inline DualScalar cos(const DualScalar& a) {
  const double s = -std::sin(a.value);
  return {std::cos(a.value), s * a.d1, s * a.d2};
}
inline DualScalar exp(const DualScalar& a) {
  const double e = std::exp(a.value);
  return {e, e * a.d1, e * a.d2};
}

inline double value_of(double x) { return x; }
inline double value_of(const DualScalar& x) { return x.value; }

}  // namespace anrsp

#endif  // ANRSP_DUAL_HPP
