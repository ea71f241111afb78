#pragma once
// Yarn-to-yarn interaction kernels at crossing nodes: contact normal and
// normal force, smooth stick/slip friction with an anchor spring, shear with
// lock, and the Eulerian separation penalty between neighbouring crossings.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>

#include "yarnsim/elastic.hpp"
#include "yarnsim/fabric.hpp"

namespace yarnsim {

// ---------------------------------------------------------------- friction

struct FrictionParams {
  double mu = 0.5;
  double stiffness = 1000.0;  // k_f
  double damping = 1000.0;    // d_f
  double sharpness = 1000.0;  // p
};

template <class T>
struct FrictionResult {
  T F;
  T d_delta;   // dF / dδ
  T d_normal;  // dF / dF_n
  T d_load;    // dF / dF_u
  T d_mu;      // dF / dμ
  T d_vel;     // dF / du̇
};

// δ: elongation from the anchor, Fn: normal force, Fu: tangential load on the
// Eulerian DoF, vel: Eulerian velocity.
template <class T>
FrictionResult<T> friction_force(const T& delta, const T& Fn, const T& Fu, const T& vel, const T& mu,
                                 double kf, double df, double p) {
  const T Kd = tanh(p * delta);
  const T dKd = p * (1.0 - Kd * Kd);
  const T cap = mu * Fn;
  const T Kl = tanh(p * (cap - Fu));
  const T dKl = p * (1.0 - Kl * Kl);
  const T A1 = 0.5 * (kf * delta - Kd * cap);
  const T C1 = 0.5 * (kf * delta + Kd * cap);

  FrictionResult<T> r;
  r.F = -(A1 * Kl + C1) - df * vel;
  r.d_delta = -(0.5 * (kf - dKd * cap) * Kl + 0.5 * (kf + dKd * cap));
  r.d_normal = -((-0.5 * Kd * mu) * Kl + A1 * dKl * mu + 0.5 * Kd * mu);
  r.d_load = A1 * dKl;
  r.d_mu = -((-0.5 * Kd * Fn) * Kl + A1 * dKl * Fn + 0.5 * Kd * Fn);
  r.d_vel = T(-df);
  return r;
}

// Anchor drags behind the Eulerian coordinate once the spring elongation
// exceeds the breakaway length μF_n/k_f.
inline double update_anchor(double e, double anchor, double Fn, double mu, double kf) {
  const double delta = e - anchor;
  const double slip = mu * Fn / kf;
  if (std::abs(delta) > slip) return e - (delta > 0 ? 1.0 : -1.0) * slip;
  return anchor;
}

// ---------------------------------------------------------------- contact

namespace detail {

inline Eigen::Vector3d smallest_eigvec(const Eigen::Matrix3d& C, Eigen::Vector3d* evals = nullptr,
                                       Eigen::Matrix3d* evecs = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(C);
  const Eigen::Vector3d lam = es.eigenvalues();
  if (!(lam[1] > 1e-12 * std::max(lam[2], 1e-300)))
    throw NumericalError("contact normal: crossing neighbourhood is collinear");
  if (evals) *evals = lam;
  if (evecs) *evecs = es.eigenvectors();
  return es.eigenvectors().col(0);
}

inline Eigen::Vector3d plane_normal(const Eigen::Matrix3d& C) { return smallest_eigvec(C); }

template <int N>
V3<Dual<N>> plane_normal(const M3<Dual<N>>& C) {
  Eigen::Matrix3d Cv;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) Cv(i, j) = C(i, j).v;
  Eigen::Vector3d lam;
  Eigen::Matrix3d E;
  const Eigen::Vector3d n = smallest_eigvec(Cv, &lam, &E);
  V3<Dual<N>> out;
  for (int i = 0; i < 3; ++i) out[i] = Dual<N>(n[i]);
  for (int k = 0; k < N; ++k) {
    Eigen::Matrix3d dC;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dC(i, j) = C(i, j).d[k];
    Eigen::Vector3d dn = Eigen::Vector3d::Zero();
    for (int m = 1; m < 3; ++m) dn += E.col(m) * (E.col(m).dot(dC * n) / (lam[0] - lam[m]));
    for (int i = 0; i < 3; ++i) out[i].d[k] = dn[i];
  }
  return out;
}

}  // namespace detail

// Points: center, left, right (along the weft), up, down (along the warp).
// Returns the unit normal of the best-fit plane, oriented from the warp
// toward the weft at this crossing.
template <class T>
V3<T> contact_normal(const std::array<V3<T>, 5>& pts, Crossing crossing) {
  V3<T> mean = V3<T>::Zero();
  for (const auto& p : pts) mean += p;
  mean /= 5.0;
  M3<T> C = M3<T>::Zero();
  for (const auto& p : pts) C += (p - mean) * (p - mean).transpose();
  V3<T> n = detail::plane_normal(C);
  const V3<T> ref = (pts[2] - pts[1]).cross(pts[4] - pts[3]);
  T side = n.dot(ref);
  if (side < 0.0) n = -n;
  if (crossing == Crossing::WarpOver) n = -n;
  return n;
}

// F_n = ReLU(½ nᵀ(warp force − weft force)) at the crossing.
template <class T>
T contact_force(const V3<T>& n, const V3<T>& warp_force, const V3<T>& weft_force) {
  const T a = 0.5 * n.dot(warp_force - weft_force);
  return a > 0.0 ? a : T(0.0);
}

// ---------------------------------------------------------------- shear

struct ShearParams {
  double R = 2e-4;
  double L = 1e-3;
  double exponent = 3.0;
  double sigma = 0.6;
  double rest_angle = std::numbers::pi / 2.0;
  double lock_angle() const { return 2.0 * std::asin(R / L); }
};

template <class T>
struct LockFactor {
  T h, dh, ddh;  // value and first two derivatives in φ
};

namespace detail {
template <class T>
T pow_abs(const T& x, double p) {
  const T ax = abs(x);
  if (!(ax > 0.0)) return T(p == 0.0 ? 1.0 : 0.0);
  return pow(ax, p);
}
}  // namespace detail

// h(φ) = 1 + Γ + (1 − Γ) tanh(g(φ)), Γ = |γ|^c, together with h', h''.
template <class T>
LockFactor<T> shear_lock_factor(const T& phi, const ShearParams& sp) {
  const double L = sp.L, R = sp.R, c = sp.exponent;
  const double pb = sp.rest_angle, pl = sp.lock_angle();
  const T sh = sin(0.5 * phi), ch = cos(0.5 * phi);
  const T gam = (std::sqrt(2.0) * L - 2.0 * L * sh) / R;
  const T gam1 = -(L / R) * ch;
  const T gam2 = (L / (2.0 * R)) * sh;
  const double sg = val(gam) < 0.0 ? -1.0 : 1.0;
  const T G = detail::pow_abs(gam, c);
  const T G1 = c * detail::pow_abs(gam, c - 1.0) * sg * gam1;
  const T G2 = c * (c - 1.0) * detail::pow_abs(gam, c - 2.0) * gam1 * gam1 + c * detail::pow_abs(gam, c - 1.0) * sg * gam2;

  const double pb4 = pb * pb * pb * pb, pb5 = pb4 * pb;
  const T m = phi * (phi - pl) * (phi - pb);
  const T m1 = 3.0 * phi * phi - 2.0 * (pl + pb) * phi + pl * pb;
  const T m2 = 6.0 * phi - 2.0 * (pl + pb);
  const T Nu = pb5 * (phi - pl);
  const double Nu1 = pb5;
  const T De = m * m + pb4 * sp.sigma * sp.sigma;
  const T De1 = 2.0 * m * m1;
  const T De2 = 2.0 * m1 * m1 + 2.0 * m * m2;
  const T g = Nu / De;
  const T g1 = (Nu1 * De - Nu * De1) / (De * De);
  const T g2 = (-Nu * De2) / (De * De) - 2.0 * De1 * (Nu1 * De - Nu * De1) / (De * De * De);

  const T th = tanh(g);
  const T sech2 = 1.0 - th * th;
  LockFactor<T> out;
  out.h = 1.0 + G + (1.0 - G) * th;
  out.dh = G1 * (1.0 - th) + (1.0 - G) * sech2 * g1;
  out.ddh = G2 * (1.0 - th) - 2.0 * G1 * sech2 * g1 + (1.0 - G) * (sech2 * g2 - 2.0 * th * sech2 * g1 * g1);
  return out;
}

// Base stiffness ½(F_n + 1) S π R².
template <class T>
T shear_base_stiffness(const T& Fn, const ShearParams& sp, const T& S) {
  return 0.5 * (Fn + 1.0) * S * std::numbers::pi * sp.R * sp.R;
}

template <class T>
struct AngleGeom {
  T phi;
  V9<T> grad;  // dφ/d(x0, x1, x3)
  M9<T> hess;
};

// Angle at x0 between the edges to x1 (warp neighbour) and x3 (weft
// neighbour), with gradient and Hessian over (x0, x1, x3).
template <class T>
AngleGeom<T> crossing_angle(const V3<T>& x0, const V3<T>& x1, const V3<T>& x3) {
  const V3<T> e1 = x1 - x0, e3 = x3 - x0;
  const T l1 = sqrt(e1.squaredNorm()), l3 = sqrt(e3.squaredNorm());
  if (!(l1 > 0.0) || !(l3 > 0.0)) throw NumericalError("shear: degenerate segment");
  const V3<T> d1 = e1 / l1, d3 = e3 / l3;
  const T c = d1.dot(d3);
  Eigen::Vector3d d1v, d3v;
  for (int i = 0; i < 3; ++i) {
    d1v[i] = val(d1[i]);
    d3v[i] = val(d3[i]);
  }
  const double phiv = std::atan2(d1v.cross(d3v).norm(), d1v.dot(d3v));
  if (!(phiv > 1e-9) || !(phiv < std::numbers::pi - 1e-9))
    throw NumericalError("shear: crossing angle outside (0, pi)");
  const double sv = std::sin(phiv);
  AngleGeom<T> out;
  out.phi = detail::lift(c, phiv, -1.0 / sv);
  const T sn = sin(out.phi), cs = cos(out.phi);

  const M3<T> I = M3<T>::Identity();
  const M3<T> P1 = I - d1 * d1.transpose(), P3 = I - d3 * d3.transpose();
  const V3<T> gc1 = P1 * d3 / l1, gc3 = P3 * d1 / l3;
  const M3<T> H11 = -(c * P1 + d1 * d3.transpose() * P1 + P1 * d3 * d1.transpose()) / (l1 * l1);
  const M3<T> H33 = -(c * P3 + d3 * d1.transpose() * P3 + P3 * d1 * d3.transpose()) / (l3 * l3);
  const M3<T> H13 = P1 * P3 / (l1 * l3);

  Eigen::Matrix<T, 6, 1> gc;
  gc << gc1, gc3;
  Eigen::Matrix<T, 6, 6> Hc;
  Hc << H11, H13, H13.transpose(), H33;
  const Eigen::Matrix<T, 6, 1> gphi = -gc / sn;
  const Eigen::Matrix<T, 6, 6> Hphi = -Hc / sn - (cs / (sn * sn * sn)) * gc * gc.transpose();

  // (e1, e3) -> (x0, x1, x3)
  Eigen::Matrix<double, 6, 9> Tm = Eigen::Matrix<double, 6, 9>::Zero();
  Tm.block<3, 3>(0, 0) = -Eigen::Matrix3d::Identity();
  Tm.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
  Tm.block<3, 3>(3, 0) = -Eigen::Matrix3d::Identity();
  Tm.block<3, 3>(3, 6) = Eigen::Matrix3d::Identity();
  const Eigen::Matrix<T, 6, 9> TmT = Tm.cast<T>();
  out.grad = TmT.transpose() * gphi;
  out.hess = TmT.transpose() * Hphi * TmT;
  return out;
}

template <class T>
struct ShearStiffness {
  T ks;
  V9<T> grad;  // dk_s/d(x0, x1, x3) at fixed F_n
};

template <class T>
ShearStiffness<T> shear_stiffness(const V3<T>& x0, const V3<T>& x1, const V3<T>& x3, const T& Fn,
                                  const ShearParams& sp, const T& S) {
  const auto ag = crossing_angle(x0, x1, x3);
  const auto lf = shear_lock_factor(ag.phi, sp);
  const T base = shear_base_stiffness(Fn, sp, S);
  return {base * lf.h, base * lf.dh * ag.grad};
}

template <class T>
struct ShearResult {
  T V;
  T phi;
  V9<T> F;      // on (x0, x1, x3)
  M9<T> K;      // dF/d(x0, x1, x3) at fixed F_n
  V9<T> dF_dFn; // dF/dF_n
};

// Energy ½ k_s(φ) L (φ − φ̄)² over one quadrant at the crossing.
template <class T>
ShearResult<T> shear_force(const V3<T>& x0, const V3<T>& x1, const V3<T>& x3, const T& Fn, const ShearParams& sp,
                           const T& S) {
  const auto ag = crossing_angle(x0, x1, x3);
  const auto lf = shear_lock_factor(ag.phi, sp);
  const T base = shear_base_stiffness(Fn, sp, S);
  const T dphi = ag.phi - sp.rest_angle;
  const T c = 0.5 * base * sp.L;
  const T psi = c * lf.h * dphi * dphi;
  const T psi1 = c * (lf.dh * dphi * dphi + 2.0 * lf.h * dphi);
  const T psi2 = c * (lf.ddh * dphi * dphi + 4.0 * lf.dh * dphi + 2.0 * lf.h);
  ShearResult<T> out;
  out.V = psi;
  out.phi = ag.phi;
  out.F = -psi1 * ag.grad;
  out.K = -psi2 * ag.grad * ag.grad.transpose() - psi1 * ag.hess;
  out.dF_dFn = out.F / (Fn + 1.0);
  return out;
}

// ---------------------------------------------------------------- penalty

template <class T>
struct PenaltyResult {
  T V;
  T F0, F1;  // on e0, e1
  T k;       // dF1/de1 (= dF0/de0 = −dF0/de1 = −dF1/de0)
};

// V = ½ k_c L ReLU(d − Δ)² with Δ = e1 − e0.
template <class T>
PenaltyResult<T> yarn_collision_force(const T& e0, const T& e1, double kc, double L, double d) {
  const T gap = d - (e1 - e0);
  PenaltyResult<T> r;
  if (gap > 0.0) {
    r.V = 0.5 * kc * L * gap * gap;
    r.F0 = -kc * L * gap;
    r.F1 = kc * L * gap;
    r.k = T(-kc * L);
  } else {
    r.V = T(0.0);
    r.F0 = T(0.0);
    r.F1 = T(0.0);
    r.k = T(0.0);
  }
  return r;
}

}  // namespace yarnsim
