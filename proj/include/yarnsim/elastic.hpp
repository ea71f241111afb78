#pragma once
// Stretch and bend kernels on local coordinates.
//
// Stretch acts on a segment s = (x0, x1, e0, e1).
// Bend acts on a triple b = (x_prev, x_center, x_next, e_prev, e_center, e_next)
// with the bend angle measured from the straight configuration.

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "yarnsim/mass.hpp"

namespace yarnsim {

template <class T> using Vec12 = Eigen::Matrix<T, 12, 1>;
template <class T> using Mat12 = Eigen::Matrix<T, 12, 12>;

template <class T>
struct StretchResult {
  T V;
  Vec8<T> F;
  Mat8<T> K;
};

// k = Y π R².
template <class T>
StretchResult<T> stretch_force(const Vec8<T>& s, const T& k) {
  const V3<T> r = s.template segment<3>(3) - s.template segment<3>(0);
  const T delta = s[7] - s[6];
  if (!(delta > 0.0)) throw NumericalError("stretch: degenerate segment (non-positive Eulerian length)");
  const T l = sqrt(r.squaredNorm());
  if (!(l > 0.0)) throw NumericalError("stretch: coincident segment end points");
  const V3<T> d = r / l;
  const T st = l / delta;
  StretchResult<T> out;
  out.V = 0.5 * k * delta * (st - 1.0) * (st - 1.0);

  const V3<T> fx1 = -k * (st - 1.0) * d;
  const T fe1 = 0.5 * k * (st * st - 1.0);
  out.F << -fx1, fx1, -fe1, fe1;

  const M3<T> P = M3<T>::Identity() - d * d.transpose();
  const M3<T> Kxx = k * (P / l - M3<T>::Identity() / delta);
  const V3<T> Kxe = k * st * d / delta;
  const T Kee = -k * st * st / delta;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double sg = (a == b) ? 1.0 : -1.0;
      out.K.template block<3, 3>(3 * a, 3 * b) = sg * Kxx;
      out.K.template block<3, 1>(3 * a, 6 + b) = sg * Kxe;
      out.K.template block<1, 3>(6 + a, 3 * b) = sg * Kxe.transpose();
      out.K(6 + a, 6 + b) = sg * Kee;
    }
  }
  return out;
}

namespace detail {

inline double lift(double, double v, double) { return v; }
template <int N>
Dual<N> lift(const Dual<N>& a, double v, double dv) {
  return chain(a, v, dv);
}

inline double value(double x) { return x; }
template <int N>
double value(const Dual<N>& x) {
  return x.v;
}

// Functions of c = cos θ that stay smooth through θ = 0:
// θ², A = θ/sinθ, B = (sinθ − θcosθ)/sin³θ, with dθ²/dc = −2A, dA/dc = −B.
struct BendScalars {
  double theta, th2, A, B, dB;
};

inline BendScalars bend_scalars(double theta) {
  BendScalars s;
  s.theta = theta;
  s.th2 = theta * theta;
  const double t2 = s.th2, t4 = t2 * t2;
  if (theta < 1e-2) {
    s.A = 1.0 + t2 / 6.0 + 7.0 * t4 / 360.0;
    s.B = 1.0 / 3.0 + 2.0 * t2 / 15.0 + 2.0 * t4 / 63.0;
    s.dB = -4.0 / 15.0 - 6.0 * t2 / 35.0 - 13.0 * t4 / 210.0;
  } else {
    const double sn = std::sin(theta), cs = std::cos(theta);
    s.A = theta / sn;
    s.B = (sn - theta * cs) / (sn * sn * sn);
    s.dB = -(theta * sn * sn - 3.0 * cs * (sn - theta * cs)) / std::pow(sn, 5);
  }
  return s;
}

}  // namespace detail

template <class T>
struct BendResult {
  T V;
  double theta;
  Vec12<T> F;
  Mat12<T> K;
};

inline constexpr double kMaxBendAngle = std::numbers::pi - 1e-6;

// kb = B π R².
template <class T>
BendResult<T> bend_force(const Vec12<T>& b, const T& kb) {
  const V3<T> xp = b.template segment<3>(0), xc = b.template segment<3>(3), xn = b.template segment<3>(6);
  const T span = b[11] - b[9];
  if (!(span > 0.0)) throw NumericalError("bend: zero Eulerian span");
  const V3<T> r1 = xn - xc, r2 = xp - xc;
  const T l1 = sqrt(r1.squaredNorm()), l2 = sqrt(r2.squaredNorm());
  if (!(l1 > 0.0) || !(l2 > 0.0)) throw NumericalError("bend: degenerate segment");
  const V3<T> d1 = r1 / l1, d2 = r2 / l2;
  const T c = -d1.dot(d2);

  Eigen::Vector3d d1v, d2v;
  for (int i = 0; i < 3; ++i) {
    d1v[i] = detail::value(d1[i]);
    d2v[i] = detail::value(d2[i]);
  }
  const double theta = std::atan2(d1v.cross(d2v).norm(), -d1v.dot(d2v));
  if (theta > kMaxBendAngle) throw NumericalError("bend: yarn folded back onto itself");
  const auto sc = detail::bend_scalars(theta);
  const T th2 = detail::lift(c, sc.th2, -2.0 * sc.A);
  const T A = detail::lift(c, sc.A, -sc.B);
  const T B = detail::lift(c, sc.B, sc.dB);

  const M3<T> I = M3<T>::Identity();
  const M3<T> P1 = I - d1 * d1.transpose(), P2 = I - d2 * d2.transpose();
  const V3<T> g1 = -P1 * d2 / l1, g2 = -P2 * d1 / l2;
  const T dd = d1.dot(d2);
  const M3<T> H11 = (dd * P1 + d1 * d2.transpose() * P1 + P1 * d2 * d1.transpose()) / (l1 * l1);
  const M3<T> H22 = (dd * P2 + d2 * d1.transpose() * P2 + P2 * d1 * d2.transpose()) / (l2 * l2);
  const M3<T> H12 = -P1 * P2 / (l1 * l2);

  BendResult<T> out;
  out.theta = theta;
  out.V = kb * th2 / span;
  const T fs = 2.0 * kb * A / span;
  const V3<T> F1 = fs * g1, F2 = fs * g2;
  out.F.template segment<3>(0) = F2;
  out.F.template segment<3>(3) = -(F1 + F2);
  out.F.template segment<3>(6) = F1;
  const T fe = kb * th2 / (span * span);
  out.F[9] = -fe;
  out.F[10] = T(0.0);
  out.F[11] = fe;

  const T ks = 2.0 * kb / span;
  const M3<T> K11 = ks * (A * H11 - B * g1 * g1.transpose());
  const M3<T> K12 = ks * (A * H12 - B * g1 * g2.transpose());
  const M3<T> K21 = K12.transpose();
  const M3<T> K22 = ks * (A * H22 - B * g2 * g2.transpose());

  out.K.setZero();
  // Rows/cols: prev (r2), center (-(r1 + r2)), next (r1).
  out.K.template block<3, 3>(6, 6) = K11;
  out.K.template block<3, 3>(6, 0) = K12;
  out.K.template block<3, 3>(0, 6) = K21;
  out.K.template block<3, 3>(0, 0) = K22;
  out.K.template block<3, 3>(6, 3) = -(K11 + K12);
  out.K.template block<3, 3>(0, 3) = -(K21 + K22);
  out.K.template block<3, 3>(3, 6) = -(K11 + K21);
  out.K.template block<3, 3>(3, 0) = -(K12 + K22);
  out.K.template block<3, 3>(3, 3) = K11 + K12 + K21 + K22;

  const T kee = 2.0 * kb * th2 / (span * span * span);
  out.K(11, 11) = -kee;
  out.K(11, 9) = kee;
  out.K(9, 11) = kee;
  out.K(9, 9) = -kee;
  const T kex = 2.0 * kb * A / (span * span);
  const V3<T> e1 = -kex * g1, e2 = -kex * g2;  // dF_e_next / d r_i
  const V3<T> ec = -(e1 + e2);
  out.K.template block<1, 3>(11, 6) = e1.transpose();
  out.K.template block<1, 3>(11, 0) = e2.transpose();
  out.K.template block<1, 3>(11, 3) = ec.transpose();
  out.K.template block<1, 3>(9, 6) = -e1.transpose();
  out.K.template block<1, 3>(9, 0) = -e2.transpose();
  out.K.template block<1, 3>(9, 3) = -ec.transpose();
  out.K.template block<3, 1>(6, 11) = e1;
  out.K.template block<3, 1>(0, 11) = e2;
  out.K.template block<3, 1>(3, 11) = ec;
  out.K.template block<3, 1>(6, 9) = -e1;
  out.K.template block<3, 1>(0, 9) = -e2;
  out.K.template block<3, 1>(3, 9) = -ec;
  return out;
}

}  // namespace yarnsim
