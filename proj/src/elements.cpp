#include "yarnsim/elements.hpp"

#include <cmath>
#include <numbers>

namespace yarnsim {

namespace {

constexpr double kPi = std::numbers::pi;

// Adds row `src_row` of the sub-element matrix `S` to row `dst_row` of `J`,
// scattering columns through `idx`.
template <class T, class Mat>
void scatter_row(MatXT<T>& J, int dst_row, const Mat& S, int src_row, const std::vector<int>& idx) {
  for (int k = 0; k < static_cast<int>(idx.size()); ++k) J(dst_row, idx[k]) += S(src_row, k);
}

LocalMap node_map(const Fabric& f, const std::vector<int>& nodes, bool with_eulerian, YarnDir dir) {
  LocalMap m;
  const auto& lay = f.layout();
  for (int n : nodes) {
    for (int c = 0; c < 3; ++c) {
      m.dof.push_back(lay.x(n) + c);
      m.fixed.push_back(0.0);
    }
  }
  if (with_eulerian) {
    for (int n : nodes) {
      m.dof.push_back(lay.eul(n, dir));
      m.fixed.push_back(f.rest_eul(n, dir));
    }
  }
  m.velocity_used.assign(m.dof.size(), 1);
  return m;
}

}  // namespace

std::array<int, kCrossingSlots> crossing_stencil(const Fabric& f, int node) {
  const int i = f.row(node), j = f.col(node);
  auto at = [&](int a, int b) { return (a >= 0 && a < f.rows() && b >= 0 && b < f.cols()) ? f.node(a, b) : -1; };
  return {node, at(i - 2, j), at(i - 1, j), at(i + 1, j), at(i + 2, j),
          at(i, j - 2), at(i, j - 1), at(i, j + 1), at(i, j + 2)};
}

ForceModel::ForceModel(const Fabric& fabric, ModelConstants constants) : fabric_(&fabric), c_(std::move(constants)) {
  const auto& f = fabric;
  const ParamLayout pl = param_layout();
  for (int k = 0; k < static_cast<int>(f.segments().size()); ++k) {
    const auto& s = f.segments()[k];
    Element e{ElementKind::Segment, k, node_map(f, {s.node0, s.node1}, true, s.dir), {}};
    e.params = {pl.density(s.material), pl.stretch(s.material)};
    elements_.push_back(std::move(e));
  }
  for (int k = 0; k < static_cast<int>(f.triples().size()); ++k) {
    const auto& b = f.triples()[k];
    Element e{ElementKind::Bend, k, node_map(f, {b.prev, b.center, b.next}, true, b.dir), {}};
    e.map.velocity_used.assign(e.map.dof.size(), 0);
    e.params = {pl.bend(b.material)};
    elements_.push_back(std::move(e));
  }
  const auto& lay = f.layout();
  for (int n : f.crossings()) {
    Element e;
    e.kind = ElementKind::Crossing;
    e.id = n;
    const auto st = crossing_stencil(f, n);
    for (int slot = 0; slot < kCrossingSlots; ++slot) {
      const int sn = st[slot];
      for (int c = 0; c < 3; ++c) {
        e.map.dof.push_back(sn >= 0 ? lay.x(sn) + c : -1);
        e.map.fixed.push_back(0.0);
      }
      e.map.dof.push_back(sn >= 0 ? lay.u(sn) : -1);
      e.map.fixed.push_back(sn >= 0 ? f.rest_eul(sn, YarnDir::Warp) : 0.0);
      e.map.dof.push_back(sn >= 0 ? lay.v(sn) : -1);
      e.map.fixed.push_back(sn >= 0 ? f.rest_eul(sn, YarnDir::Weft) : 0.0);
    }
    e.map.velocity_used.assign(e.map.dof.size(), 0);
    e.map.velocity_used[3] = 1;
    e.map.velocity_used[4] = 1;
    for (int k = 0; k < pl.size(); ++k) e.params.push_back(k);
    elements_.push_back(std::move(e));
  }
  for (int k = 0; k < static_cast<int>(f.triangles().size()); ++k) {
    const auto& t = f.triangles()[k];
    Element e{ElementKind::Wind, k, node_map(f, {t.a, t.b, t.c}, false, YarnDir::Warp), {}};
    elements_.push_back(std::move(e));
  }
}

ShearParams ForceModel::shear_params(int node) const {
  const auto& f = *fabric_;
  ShearParams sp;
  sp.R = 0.5 * (f.material(f.material_of(YarnDir::Warp, node)).radius +
                f.material(f.material_of(YarnDir::Weft, node)).radius);
  sp.L = f.L();
  sp.exponent = c_.shear_exponent;
  sp.sigma = c_.shear_sigma;
  sp.rest_angle = c_.shear_rest_angle;
  return sp;
}

FrictionParams ForceModel::friction_params(double mu) const {
  return {mu, c_.friction_stiffness, c_.friction_damping, c_.friction_sharpness};
}

template <class T>
LocalInputs<T> ForceModel::gather(const Element& e, const VecX& q, const VecX& qdot, const VecX& anchors,
                                  const VecX& theta) const {
  LocalInputs<T> in;
  const int n = e.map.size();
  in.q.resize(n);
  in.qdot.resize(n);
  for (int k = 0; k < n; ++k) {
    const int d = e.map.dof[k];
    in.q[k] = T(d >= 0 ? q[d] : e.map.fixed[k]);
    in.qdot[k] = T(d >= 0 ? qdot[d] : 0.0);
  }
  if (e.kind == ElementKind::Crossing) {
    in.anchor_u = T(anchors[2 * e.id]);
    in.anchor_v = T(anchors[2 * e.id + 1]);
  }
  in.theta.resize(theta.size());
  for (int k = 0; k < theta.size(); ++k) in.theta[k] = T(theta[k]);
  return in;
}

template <class T>
LocalForces<T> ForceModel::evaluate(const Element& e, const LocalInputs<T>& in, const CrossingOptions& opt) const {
  switch (e.kind) {
    case ElementKind::Segment: return eval_segment(e, in);
    case ElementKind::Bend: return eval_bend(e, in);
    case ElementKind::Crossing: return eval_crossing(e, in, opt);
    case ElementKind::Wind: return eval_wind(e, in);
  }
  return {};
}

template <class T>
LocalForces<T> ForceModel::eval_segment(const Element& e, const LocalInputs<T>& in) const {
  const auto& f = *fabric_;
  const Segment& s = f.segments()[e.id];
  const ParamLayout pl = param_layout();
  const Vec8<T> x = in.q;
  const Vec8<T> v = in.qdot;
  if (!(val(x[7] - x[6]) >= 1e-9 * f.L()))
    throw NumericalError("degenerate segment " + std::to_string(e.id) + ": Eulerian length below 1e-9 L");
  const T rho = in.theta[pl.density(s.material)];
  const T Y = in.theta[pl.stretch(s.material)];
  const double R = f.material(s.material).radius;

  Vec8<T> F = Vec8<T>::Zero();
  Mat8<T> K = Mat8<T>::Zero(), D = Mat8<T>::Zero();
  LocalForces<T> out;
  out.M = segment_mass(x, rho).M;
  if (c_.on.inertia) {
    F += inertia_force(x, v, rho);
    const auto J = inertia_jacobians(x, v, rho);
    K += J.dq;
    D += J.dqdot;
    const auto md = mdot_qdot_term(x, v, rho);
    F += md.F;
    K += md.dq;
    D += md.dqdot;
  }
  if (c_.on.stretch) {
    const auto sr = stretch_force(x, T(Y * kPi * R * R));
    F += sr.F;
    K += sr.K;
    out.V += sr.V;
  }
  if (c_.on.gravity) {
    const auto gr = gravity_force(x, rho, c_.gravity);
    F += gr.F;
    K += gr.K;
    out.V += gr.V;
  }
  if (c_.on.collision) {
    const auto pr = yarn_collision_force(x[6], x[7], c_.collision_stiffness, f.L(), f.collision_distance(s));
    F[6] += pr.F0;
    F[7] += pr.F1;
    K(6, 6) += pr.k;
    K(7, 7) += pr.k;
    K(6, 7) -= pr.k;
    K(7, 6) -= pr.k;
    out.V += pr.V;
  }
  out.F = F;
  out.K = K;
  out.D = D;
  return out;
}

template <class T>
LocalForces<T> ForceModel::eval_bend(const Element& e, const LocalInputs<T>& in) const {
  const auto& f = *fabric_;
  const BendTriple& b = f.triples()[e.id];
  LocalForces<T> out;
  out.F = VecXT<T>::Zero(12);
  out.K = MatXT<T>::Zero(12, 12);
  if (!c_.on.bend) return out;
  const ParamLayout pl = param_layout();
  const double R = f.material(b.material).radius;
  const T kb = in.theta[pl.bend(b.material)] * (kPi * R * R);
  const Vec12<T> x = in.q;
  const auto br = bend_force(x, kb);
  out.F = br.F;
  out.K = br.K;
  out.V = br.V;
  return out;
}

template <class T>
LocalForces<T> ForceModel::eval_wind(const Element&, const LocalInputs<T>& in) const {
  LocalForces<T> out;
  out.F = VecXT<T>::Zero(9);
  out.K = MatXT<T>::Zero(9, 9);
  if (!c_.on.wind) return out;
  const V9<T> x = in.q, v = in.qdot;
  const auto wr = wind_force(x, v, c_.wind);
  out.F = wr.F;
  out.D = wr.D;
  return out;
}

template <class T>
LocalForces<T> ForceModel::eval_crossing(const Element& e, const LocalInputs<T>& in,
                                         const CrossingOptions& opt) const {
  const auto& f = *fabric_;
  const ParamLayout pl = param_layout();
  const int node = e.id;
  const auto st = crossing_stencil(f, node);
  const int n = 5 * kCrossingSlots;

  LocalForces<T> out;
  out.F = VecXT<T>::Zero(n);
  out.K = MatXT<T>::Zero(n, n);
  out.D = MatXT<T>::Zero(n, n);
  if (!c_.on.friction && !c_.on.shear) return out;

  auto xs = [&](int slot) -> V3<T> { return in.q.template segment<3>(5 * slot); };

  struct YarnLoad {
    V3<T> G;        // stretch + bend force on the crossing position
    MatXT<T> JG;    // 3 x n
    T Fe;           // net Eulerian load on the crossing
    MatXT<T> JFe;   // 1 x n
  };

  auto yarn_load = [&](YarnDir dir) {
    YarnLoad yl{V3<T>::Zero(), MatXT<T>::Zero(3, n), T(0.0), MatXT<T>::Zero(1, n)};
    const std::array<int, 5> ys = dir == YarnDir::Warp ? std::array<int, 5>{1, 2, 0, 3, 4}
                                                        : std::array<int, 5>{5, 6, 0, 7, 8};
    const int eo = dir == YarnDir::Warp ? 3 : 4;
    const int m = f.material_of(dir, node);
    const double R = f.material(m).radius;
    const T rho = in.theta[pl.density(m)];
    const T ks = in.theta[pl.stretch(m)] * (kPi * R * R);
    const T kb = in.theta[pl.bend(m)] * (kPi * R * R);

    // Segments (ys[1], center) and (center, ys[3]).
    for (int side = 0; side < 2; ++side) {
      const int a = ys[1 + side], b = ys[2 + side];
      std::vector<int> idx = {5 * a, 5 * a + 1, 5 * a + 2, 5 * b, 5 * b + 1, 5 * b + 2, 5 * a + eo, 5 * b + eo};
      Vec8<T> s;
      for (int k = 0; k < 8; ++k) s[k] = in.q[idx[k]];
      const int xr = side == 0 ? 3 : 0;
      const int er = side == 0 ? 7 : 6;
      if (c_.on.stretch) {
        const auto sr = stretch_force(s, ks);
        yl.G += sr.F.template segment<3>(xr);
        for (int c = 0; c < 3; ++c) scatter_row(yl.JG, c, sr.K, xr + c, idx);
        yl.Fe += sr.F[er];
        scatter_row(yl.JFe, 0, sr.K, er, idx);
      }
      if (c_.on.gravity) {
        const auto gr = gravity_force(s, rho, c_.gravity);
        yl.Fe += gr.F[er];
        scatter_row(yl.JFe, 0, gr.K, er, idx);
      }
      if (c_.on.collision) {
        const Segment seg{st[a], st[b], dir, m};
        const auto pr = yarn_collision_force(s[6], s[7], c_.collision_stiffness, f.L(), f.collision_distance(seg));
        if (side == 0) {
          yl.Fe += pr.F1;
          yl.JFe(0, 5 * b + eo) += pr.k;
          yl.JFe(0, 5 * a + eo) -= pr.k;
        } else {
          yl.Fe += pr.F0;
          yl.JFe(0, 5 * a + eo) += pr.k;
          yl.JFe(0, 5 * b + eo) -= pr.k;
        }
      }
    }
    // Bend triples centred one before, at, and one after the crossing.
    if (c_.on.bend) {
      for (int t = 0; t < 3; ++t) {
        const int p = ys[t], c = ys[t + 1], nx = ys[t + 2];
        if (st[p] < 0 || st[nx] < 0) continue;
        std::vector<int> idx = {5 * p, 5 * p + 1, 5 * p + 2, 5 * c, 5 * c + 1, 5 * c + 2,
                                5 * nx, 5 * nx + 1, 5 * nx + 2, 5 * p + eo, 5 * c + eo, 5 * nx + eo};
        Vec12<T> s;
        for (int k = 0; k < 12; ++k) s[k] = in.q[idx[k]];
        const auto br = bend_force(s, kb);
        const int xr = t == 0 ? 6 : (t == 1 ? 3 : 0);
        const int er = t == 0 ? 11 : (t == 1 ? 10 : 9);
        yl.G += br.F.template segment<3>(xr);
        for (int k = 0; k < 3; ++k) scatter_row(yl.JG, k, br.K, xr + k, idx);
        yl.Fe += br.F[er];
        scatter_row(yl.JFe, 0, br.K, er, idx);
      }
    }
    return yl;
  };

  const YarnLoad warp = yarn_load(YarnDir::Warp);
  const YarnLoad weft = yarn_load(YarnDir::Weft);

  V3<T> nrm;
  if (opt.frozen_normal) {
    nrm = opt.frozen_normal->cast<T>();
  } else {
    const std::array<V3<T>, 5> pts = {xs(0), xs(6), xs(7), xs(2), xs(3)};
    nrm = contact_normal(pts, f.crossing(node));
  }
  const T Fn = contact_force(nrm, warp.G, weft.G);
  MatXT<T> gFn = MatXT<T>::Zero(1, n);
  if (Fn > 0.0) gFn = 0.5 * nrm.transpose() * (warp.JG - weft.JG);
  out.Fn = Fn;

  if (c_.on.friction) {
    const T mu = in.theta[pl.friction()];
    for (int axis = 0; axis < 2; ++axis) {
      const YarnLoad& yl = axis == 0 ? warp : weft;
      const int r = 3 + axis;
      const T delta = in.q[r] - (axis == 0 ? in.anchor_u : in.anchor_v);
      const auto fr = friction_force(delta, Fn, yl.Fe, in.qdot[r], mu, c_.friction_stiffness, c_.friction_damping,
                                     c_.friction_sharpness);
      out.F[r] += fr.F;
      out.K(r, r) += fr.d_delta;
      out.K.row(r) += fr.d_normal * gFn + fr.d_load * yl.JFe;
      out.D(r, r) += fr.d_vel;
    }
  }

  if (c_.on.shear) {
    const T S = in.theta[pl.shear()];
    const ShearParams sp = shear_params(node);
    for (int wslot : {2, 3}) {
      for (int fslot : {6, 7}) {
        const auto sr = shear_force(xs(0), xs(wslot), xs(fslot), Fn, sp, S);
        const std::vector<int> idx = {0, 1, 2, 5 * wslot, 5 * wslot + 1, 5 * wslot + 2,
                                      5 * fslot, 5 * fslot + 1, 5 * fslot + 2};
        for (int a = 0; a < 9; ++a) {
          out.F[idx[a]] += sr.F[a];
          for (int b = 0; b < 9; ++b) out.K(idx[a], idx[b]) += sr.K(a, b);
          out.K.row(idx[a]) += sr.dF_dFn[a] * gFn;
        }
        out.V += sr.V;
      }
    }
  }
  return out;
}

template LocalInputs<double> ForceModel::gather<double>(const Element&, const VecX&, const VecX&, const VecX&,
                                                        const VecX&) const;
template LocalForces<double> ForceModel::evaluate<double>(const Element&, const LocalInputs<double>&,
                                                          const CrossingOptions&) const;
template LocalForces<DualL> ForceModel::evaluate<DualL>(const Element&, const LocalInputs<DualL>&,
                                                        const CrossingOptions&) const;

}  // namespace yarnsim
