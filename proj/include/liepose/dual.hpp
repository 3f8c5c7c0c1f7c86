#pragma once

// Forward-mode derivative scalar. Dual<N> carries a value together with its
// gradient with respect to N seed variables; every arithmetic operation
// propagates both, so a function evaluated on seeded duals returns its exact
// derivative alongside the value. NumTraits below let Eigen matrices hold
// duals directly.

#include <Eigen/Core>

#include <cmath>

#include "liepose/scalar.hpp"

namespace liepose {

template <int N>
struct Dual {
  using Grad = Eigen::Matrix<double, N, 1>;

  double v = 0.0;
  Grad g = Grad::Zero();

  Dual() = default;
  Dual(double value) : v(value) {}  // constants promote implicitly
  Dual(double value, const Grad& grad) : v(value), g(grad) {}

  /// Independent variable occupying derivative slot `slot`.
  static Dual seeded(double value, int slot) {
    Dual d(value);
    d.g[slot] = 1.0;
    return d;
  }

  Dual operator-() const { return {-v, -g}; }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    g += o.g;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    g -= o.g;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    g = o.v * g + v * o.g;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    g = (g - (v / o.v) * o.g) / o.v;
    v /= o.v;
    return *this;
  }
};

template <int N>
double value_of(const Dual<N>& d) {
  return d.v;
}

template <int N>
Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  return {a.v + b.v, a.g + b.g};
}
template <int N>
Dual<N> operator+(const Dual<N>& a, double b) {
  return {a.v + b, a.g};
}
template <int N>
Dual<N> operator+(double a, const Dual<N>& b) {
  return {a + b.v, b.g};
}

template <int N>
Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  return {a.v - b.v, a.g - b.g};
}
template <int N>
Dual<N> operator-(const Dual<N>& a, double b) {
  return {a.v - b, a.g};
}
template <int N>
Dual<N> operator-(double a, const Dual<N>& b) {
  return {a - b.v, -b.g};
}

template <int N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  return {a.v * b.v, b.v * a.g + a.v * b.g};
}
template <int N>
Dual<N> operator*(const Dual<N>& a, double b) {
  return {a.v * b, b * a.g};
}
template <int N>
Dual<N> operator*(double a, const Dual<N>& b) {
  return {a * b.v, a * b.g};
}

template <int N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  const double q = a.v / b.v;
  return {q, (a.g - q * b.g) / b.v};
}
template <int N>
Dual<N> operator/(const Dual<N>& a, double b) {
  return {a.v / b, a.g / b};
}
template <int N>
Dual<N> operator/(double a, const Dual<N>& b) {
  const double q = a / b.v;
  return {q, (-q / b.v) * b.g};
}

template <int N>
bool operator<(const Dual<N>& a, const Dual<N>& b) {
  return a.v < b.v;
}
template <int N>
bool operator>(const Dual<N>& a, const Dual<N>& b) {
  return a.v > b.v;
}
template <int N>
bool operator<=(const Dual<N>& a, const Dual<N>& b) {
  return a.v <= b.v;
}
template <int N>
bool operator>=(const Dual<N>& a, const Dual<N>& b) {
  return a.v >= b.v;
}
template <int N>
bool operator==(const Dual<N>& a, const Dual<N>& b) {
  return a.v == b.v;
}
template <int N>
bool operator!=(const Dual<N>& a, const Dual<N>& b) {
  return a.v != b.v;
}

template <int N>
Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return {s, a.g / (2.0 * s)};
}

template <int N>
Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return {e, e * a.g};
}

template <int N>
Dual<N> log(const Dual<N>& a) {
  return {std::log(a.v), a.g / a.v};
}

template <int N>
Dual<N> sin(const Dual<N>& a) {
  return {std::sin(a.v), std::cos(a.v) * a.g};
}

template <int N>
Dual<N> cos(const Dual<N>& a) {
  return {std::cos(a.v), -std::sin(a.v) * a.g};
}

template <int N>
Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
  const double denom = x.v * x.v + y.v * y.v;
  return {std::atan2(y.v, x.v), (x.v * y.g - y.v * x.g) / denom};
}

template <int N>
Dual<N> abs(const Dual<N>& a) {
  return a.v < 0.0 ? -a : a;
}

}  // namespace liepose

namespace Eigen {

template <int N>
struct NumTraits<liepose::Dual<N>> : GenericNumTraits<liepose::Dual<N>> {
  using Real = liepose::Dual<N>;
  using NonInteger = liepose::Dual<N>;
  using Nested = liepose::Dual<N>;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = N + 1,
    MulCost = 2 * N + 1
  };
  static inline Real epsilon() { return Real(NumTraits<double>::epsilon()); }
  static inline Real dummy_precision() {
    return Real(NumTraits<double>::dummy_precision());
  }
  static inline Real highest() { return Real(NumTraits<double>::highest()); }
  static inline Real lowest() { return Real(NumTraits<double>::lowest()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<liepose::Dual<N>, double, BinaryOp> {
  using ReturnType = liepose::Dual<N>;
};
template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, liepose::Dual<N>, BinaryOp> {
  using ReturnType = liepose::Dual<N>;
};

}  // namespace Eigen
