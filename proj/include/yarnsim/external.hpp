#pragma once
// Gravity on segments, wind drag on triangles and learnable control forces.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

#include "yarnsim/mass.hpp"
#include "yarnsim/params.hpp"

namespace yarnsim {

template <class T>
struct GravityResult {
  T V;
  Vec8<T> F;
  Mat8<T> K;
};

// V = −ρΔ gᵀ(x0 + x1)/2 on s = (x0, x1, e0, e1).
template <class T>
GravityResult<T> gravity_force(const Vec8<T>& s, const T& rho, const Vec3& g) {
  const T delta = s[7] - s[6];
  const V3<T> xs = s.template segment<3>(0) + s.template segment<3>(3);
  const V3<T> gT = g.cast<T>();
  GravityResult<T> r;
  r.V = -rho * delta * gT.dot(xs) * 0.5;
  const V3<T> fx = 0.5 * rho * delta * gT;
  const T fe = 0.5 * rho * gT.dot(xs);
  r.F << fx, fx, -fe, fe;
  r.K.setZero();
  const V3<T> h = 0.5 * rho * gT;
  for (int a = 0; a < 2; ++a) {
    r.K.template block<3, 1>(3 * a, 7) = h;
    r.K.template block<3, 1>(3 * a, 6) = -h;
    r.K.template block<1, 3>(7, 3 * a) = h.transpose();
    r.K.template block<1, 3>(6, 3 * a) = -h.transpose();
  }
  return r;
}

template <class T>
struct WindResult {
  V9<T> F;   // on the three vertices
  M9<T> D;   // dF/d(velocities), face normal and area held fixed
  T area;
};

// Drag on the triangle (xa, xb, xc) with vertex velocities v: relative wind
// rel = v_w − mean(v), normal part ρ_w a |v_n| v_n n and tangential part
// d_w a v_t, split equally over the vertices.
template <class T>
WindResult<T> wind_force(const V9<T>& x, const V9<T>& v, const WindParams& wp) {
  const V3<T> a = x.template segment<3>(0), b = x.template segment<3>(3), c = x.template segment<3>(6);
  const V3<T> cr = (b - a).cross(c - a);
  const T cn = sqrt(cr.squaredNorm());
  if (!(cn > 0.0)) throw NumericalError("wind: zero-area face");
  const V3<T> n = cr / cn;
  WindResult<T> r;
  r.area = 0.5 * cn;
  const V3<T> mv = (v.template segment<3>(0) + v.template segment<3>(3) + v.template segment<3>(6)) / 3.0;
  const V3<T> rel = wp.velocity.cast<T>() - mv;
  const T vn = n.dot(rel);
  const V3<T> vt = rel - vn * n;
  const T avn = abs(vn);
  const V3<T> Fw = wp.density * r.area * avn * vn * n + wp.drag * r.area * vt;
  const M3<T> I = M3<T>::Identity();
  const M3<T> nn = n * n.transpose();
  const M3<T> dFdrel = 2.0 * wp.density * r.area * avn * nn + wp.drag * r.area * (I - nn);
  const M3<T> blk = -dFdrel / 9.0;
  for (int i = 0; i < 3; ++i) {
    r.F.template segment<3>(3 * i) = Fw / 3.0;
    for (int j = 0; j < 3; ++j) r.D.template block<3, 3>(3 * i, 3 * j) = blk;
  }
  return r;
}

// Forces on designated nodes during the first `frames` steps.
struct ControlForces {
  std::vector<int> nodes;
  int frames = 5;
  VecX values;  // (frame, node, xyz) flattened, size frames * nodes * 3

  ControlForces() = default;
  ControlForces(std::vector<int> n, int f) : nodes(std::move(n)), frames(f), values(VecX::Zero(f * nodes.size() * 3)) {}
  int index(int frame, int k, int comp) const { return (frame * static_cast<int>(nodes.size()) + k) * 3 + comp; }
  int size() const { return static_cast<int>(values.size()); }
  Vec3 force(int frame, int k) const {
    if (frame < 0 || frame >= frames) return Vec3::Zero();
    return values.segment<3>(index(frame, k, 0));
  }
};

}  // namespace yarnsim
