#pragma once
// Segment mass matrix of the Eulerian-on-Lagrangian yarn segment and the
// inertia terms that follow from it.
//
// Local coordinates of a segment: s = (x0, x1, e0, e1), where e is the
// Eulerian coordinate along the segment's yarn (u for warps, v for wefts).
// With Δ = e1 - e0, r = x1 - x0, w = r/Δ and α = ρ/6:
//
//   M = αΔ [2I I; I 2I]  on (x0, x1)
//     - α r ⊗ [2 1; 1 2] on the (x, e) coupling
//     + α |r|²/Δ [2 1; 1 2] on (e0, e1)
//
// i.e. M is affine in r and Δ except for the Eulerian block, so its first and
// second derivatives have short closed forms.

#include <Eigen/Core>
#include <array>
#include <stdexcept>

#include "yarnsim/dual.hpp"

namespace yarnsim {

template <class T> using Vec8 = Eigen::Matrix<T, 8, 1>;
template <class T> using Mat8 = Eigen::Matrix<T, 8, 8>;
template <class T> using V3 = Eigen::Matrix<T, 3, 1>;
template <class T> using M3 = Eigen::Matrix<T, 3, 3>;
template <class T> using V9 = Eigen::Matrix<T, 9, 1>;
template <class T> using M9 = Eigen::Matrix<T, 9, 9>;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline constexpr double kE[2][2] = {{2.0, 1.0}, {1.0, 2.0}};

template <class T>
struct SegGeom {
  V3<T> r;
  T delta;
  T r2;
};

template <class T>
SegGeom<T> seg_geom(const Vec8<T>& s) {
  SegGeom<T> g;
  g.r = s.template segment<3>(3) - s.template segment<3>(0);
  g.delta = s[7] - s[6];
  if (!(g.delta > 0.0)) throw NumericalError("degenerate segment: non-positive Eulerian length");
  g.r2 = g.r.squaredNorm();
  return g;
}
}  // namespace detail

template <class T>
struct SegmentMass {
  Mat8<T> M;
  V3<T> w;
};

template <class T>
SegmentMass<T> segment_mass(const Vec8<T>& s, const T& rho) {
  const auto g = detail::seg_geom(s);
  const T a = rho / 6.0;
  SegmentMass<T> out;
  out.w = g.r / g.delta;
  out.M.setZero();
  for (int k = 0; k < 2; ++k) {
    for (int m = 0; m < 2; ++m) {
      const double E = detail::kE[k][m];
      for (int c = 0; c < 3; ++c) out.M(3 * k + c, 3 * m + c) = a * g.delta * E;
      for (int c = 0; c < 3; ++c) {
        out.M(3 * k + c, 6 + m) = -a * E * g.r[c];
        out.M(6 + m, 3 * k + c) = -a * E * g.r[c];
      }
      out.M(6 + k, 6 + m) = a * g.r2 / g.delta * E;
    }
  }
  return out;
}

// dM/ds_j for j = x0(0..2), x1(3..5), e0(6), e1(7).
template <class T>
std::array<Mat8<T>, 8> mass_spatial_derivatives(const Vec8<T>& s, const T& rho) {
  const auto g = detail::seg_geom(s);
  const T a = rho / 6.0;
  std::array<Mat8<T>, 8> dM;
  for (auto& m : dM) m.setZero();
  for (int side = 0; side < 2; ++side) {
    const double sg = side == 0 ? -1.0 : 1.0;  // dr/dx0 = -I, dr/dx1 = I
    for (int c = 0; c < 3; ++c) {
      Mat8<T>& D = dM[3 * side + c];
      for (int k = 0; k < 2; ++k) {
        for (int m = 0; m < 2; ++m) {
          const double E = detail::kE[k][m];
          D(3 * k + c, 6 + m) = -a * E * sg;
          D(6 + m, 3 * k + c) = -a * E * sg;
          D(6 + k, 6 + m) = 2.0 * a * sg * g.r[c] / g.delta * E;
        }
      }
    }
  }
  for (int side = 0; side < 2; ++side) {
    const double sg = side == 0 ? -1.0 : 1.0;  // dΔ/de0 = -1, dΔ/de1 = 1
    Mat8<T>& D = dM[6 + side];
    for (int k = 0; k < 2; ++k) {
      for (int m = 0; m < 2; ++m) {
        const double E = detail::kE[k][m];
        for (int c = 0; c < 3; ++c) D(3 * k + c, 3 * m + c) = a * sg * E;
        D(6 + k, 6 + m) = -a * sg * g.r2 / (g.delta * g.delta) * E;
      }
    }
  }
  return dM;
}

// Second derivatives d²m/ds_j ds_k of the Eulerian-block scale m = α|r|²/Δ.
// The other blocks of M are affine in s, so this is all of d²M.
template <class T>
Mat8<T> mass_eulerian_hessian(const Vec8<T>& s, const T& rho) {
  const auto g = detail::seg_geom(s);
  const T a = rho / 6.0;
  const T d = g.delta;
  Mat8<T> H = Mat8<T>::Zero();
  for (int c = 0; c < 3; ++c) {
    H(c, c) = 2.0 * a / d;
    H(3 + c, 3 + c) = 2.0 * a / d;
    H(c, 3 + c) = -2.0 * a / d;
    H(3 + c, c) = -2.0 * a / d;
    const T xe = 2.0 * a * g.r[c] / (d * d);
    H(3 + c, 7) = -xe;
    H(7, 3 + c) = -xe;
    H(3 + c, 6) = xe;
    H(6, 3 + c) = xe;
    H(c, 7) = xe;
    H(7, c) = xe;
    H(c, 6) = -xe;
    H(6, c) = -xe;
  }
  const T ee = 2.0 * a * g.r2 / (d * d * d);
  H(6, 6) = ee;
  H(7, 7) = ee;
  H(6, 7) = -ee;
  H(7, 6) = -ee;
  return H;
}

template <class T>
T kinetic_energy(const Vec8<T>& s, const Vec8<T>& sdot, const T& rho) {
  return 0.5 * sdot.dot(segment_mass(s, rho).M * sdot);
}

template <class T>
Mat8<T> mass_time_derivative(const Vec8<T>& s, const Vec8<T>& sdot, const T& rho) {
  const auto dM = mass_spatial_derivatives(s, rho);
  Mat8<T> Md = Mat8<T>::Zero();
  for (int j = 0; j < 8; ++j) Md += sdot[j] * dM[j];
  return Md;
}

// Generalized inertia force dT/ds = ½ sdotᵀ (dM/ds) sdot.
template <class T>
Vec8<T> inertia_force(const Vec8<T>& s, const Vec8<T>& sdot, const T& rho) {
  const auto dM = mass_spatial_derivatives(s, rho);
  Vec8<T> F;
  for (int j = 0; j < 8; ++j) F[j] = 0.5 * sdot.dot(dM[j] * sdot);
  return F;
}

template <class T>
struct ForceJacobians8 {
  Mat8<T> dq;
  Mat8<T> dqdot;
};

namespace detail {
template <class T>
T eulerian_quadratic(const Vec8<T>& sdot) {
  return 2.0 * sdot[6] * sdot[6] + 2.0 * sdot[6] * sdot[7] + 2.0 * sdot[7] * sdot[7];
}
}  // namespace detail

template <class T>
ForceJacobians8<T> inertia_jacobians(const Vec8<T>& s, const Vec8<T>& sdot, const T& rho) {
  const auto dM = mass_spatial_derivatives(s, rho);
  const Mat8<T> H = mass_eulerian_hessian(s, rho);
  const T quu = detail::eulerian_quadratic(sdot);
  ForceJacobians8<T> J;
  J.dq = 0.5 * quu * H;
  for (int j = 0; j < 8; ++j) J.dqdot.row(j) = (dM[j] * sdot).transpose();
  return J;
}

template <class T>
struct MdotTerm {
  Vec8<T> F;  // -Ṁ sdot
  Mat8<T> dq;
  Mat8<T> dqdot;
};

template <class T>
MdotTerm<T> mdot_qdot_term(const Vec8<T>& s, const Vec8<T>& sdot, const T& rho) {
  const auto dM = mass_spatial_derivatives(s, rho);
  const Mat8<T> H = mass_eulerian_hessian(s, rho);
  Mat8<T> Md = Mat8<T>::Zero();
  for (int j = 0; j < 8; ++j) Md += sdot[j] * dM[j];
  MdotTerm<T> out;
  out.F = -(Md * sdot);
  out.dqdot = -Md;
  for (int j = 0; j < 8; ++j) out.dqdot.col(j) -= dM[j] * sdot;
  // Only the Eulerian block of M is curved; its action on sdot is E·(ė0, ė1).
  Vec8<T> Eu = Vec8<T>::Zero();
  Eu[6] = 2.0 * sdot[6] + sdot[7];
  Eu[7] = sdot[6] + 2.0 * sdot[7];
  const Eigen::Matrix<T, 1, 8> w = sdot.transpose() * H;
  out.dq = -(Eu * w);
  return out;
}

}  // namespace yarnsim
