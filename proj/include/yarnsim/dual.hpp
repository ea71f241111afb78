#pragma once
// Forward-mode dual numbers with a fixed number of tangent lanes. Used to
// differentiate the force kernels (including their analytic Jacobians) in the
// reverse sweep.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <ostream>

namespace yarnsim {

template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double x) : v(x) { d.fill(0.0); }  // NOLINT: implicit from constants

  static Dual variable(double x, int lane) {
    Dual r(x);
    r.d[lane] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
};

// Applies a scalar function with known derivative.
template <int N>
inline Dual<N> chain(const Dual<N>& a, double fv, double dfdx) {
  Dual<N> r(fv);
  for (int i = 0; i < N; ++i) r.d[i] = dfdx * a.d[i];
  return r;
}

template <int N> inline Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> inline Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> inline Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> inline Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> inline Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> inline Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <int N> inline Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> inline Dual<N> operator-(double b, const Dual<N>& a) {
  Dual<N> r(b - a.v);
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}
template <int N> inline Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <int N> inline Dual<N> operator*(double b, Dual<N> a) { return a * b; }
template <int N> inline Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> inline Dual<N> operator/(double b, const Dual<N>& a) {
  const double inv = 1.0 / a.v;
  return chain(a, b * inv, -b * inv * inv);
}
template <int N> inline Dual<N> operator-(const Dual<N>& a) { return 0.0 - a; }
template <int N> inline Dual<N> operator+(const Dual<N>& a) { return a; }

template <int N> inline bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <int N> inline bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <int N> inline bool operator<=(const Dual<N>& a, const Dual<N>& b) { return a.v <= b.v; }
template <int N> inline bool operator>=(const Dual<N>& a, const Dual<N>& b) { return a.v >= b.v; }
template <int N> inline bool operator==(const Dual<N>& a, const Dual<N>& b) { return a.v == b.v; }
template <int N> inline bool operator!=(const Dual<N>& a, const Dual<N>& b) { return a.v != b.v; }
template <int N> inline bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <int N> inline bool operator>(const Dual<N>& a, double b) { return a.v > b; }
template <int N> inline bool operator<=(const Dual<N>& a, double b) { return a.v <= b; }
template <int N> inline bool operator>=(const Dual<N>& a, double b) { return a.v >= b; }
template <int N> inline bool operator<(double a, const Dual<N>& b) { return a < b.v; }
template <int N> inline bool operator>(double a, const Dual<N>& b) { return a > b.v; }

template <int N> inline Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
template <int N> inline Dual<N> sin(const Dual<N>& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
template <int N> inline Dual<N> cos(const Dual<N>& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
template <int N> inline Dual<N> tanh(const Dual<N>& a) {
  const double t = std::tanh(a.v);
  return chain(a, t, 1.0 - t * t);
}
template <int N> inline Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
template <int N> inline Dual<N> log(const Dual<N>& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
template <int N> inline Dual<N> asin(const Dual<N>& a) {
  return chain(a, std::asin(a.v), 1.0 / std::sqrt(1.0 - a.v * a.v));
}
template <int N> inline Dual<N> acos(const Dual<N>& a) {
  return chain(a, std::acos(a.v), -1.0 / std::sqrt(1.0 - a.v * a.v));
}
template <int N> inline Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  Dual<N> r(std::atan2(y.v, x.v));
  for (int i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / r2;
  return r;
}
template <int N> inline Dual<N> abs(const Dual<N>& a) { return a.v < 0 ? -a : a; }
template <int N> inline Dual<N> pow(const Dual<N>& a, double p) {
  const double f = std::pow(a.v, p);
  return chain(a, f, p * std::pow(a.v, p - 1.0));
}
template <int N> inline Dual<N> abs2(const Dual<N>& a) { return a * a; }

template <int N>
std::ostream& operator<<(std::ostream& os, const Dual<N>& a) {
  return os << a.v;
}

inline double val(double x) { return x; }
template <int N> inline double val(const Dual<N>& x) { return x.v; }

using std::abs;
using std::acos;
using std::asin;
using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tanh;

}  // namespace yarnsim

namespace Eigen {

template <int N>
struct NumTraits<yarnsim::Dual<N>> : NumTraits<double> {
  using Real = yarnsim::Dual<N>;
  using NonInteger = yarnsim::Dual<N>;
  using Nested = yarnsim::Dual<N>;
  using Literal = yarnsim::Dual<N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = N + 1,
    MulCost = 2 * N + 1
  };
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<yarnsim::Dual<N>, double, BinaryOp> {
  using ReturnType = yarnsim::Dual<N>;
};
template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, yarnsim::Dual<N>, BinaryOp> {
  using ReturnType = yarnsim::Dual<N>;
};

}  // namespace Eigen
