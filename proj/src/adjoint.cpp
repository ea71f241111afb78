#include "yarnsim/adjoint.hpp"

#include <cmath>
#include <sstream>

namespace yarnsim {

VecX loss_mask(const Fabric& f, bool lagrangian_only) {
  VecX m = VecX::Ones(f.layout().size);
  if (lagrangian_only) {
    for (int n = 0; n < f.num_nodes(); ++n) {
      if (f.layout().u(n) >= 0) m[f.layout().u(n)] = 0.0;
      if (f.layout().v(n) >= 0) m[f.layout().v(n)] = 0.0;
    }
  }
  return m;
}

double trajectory_loss(const std::vector<State>& traj, const TrajectoryTarget& target, int frames, int num_nodes,
                       std::vector<VecX>* grad) {
  if (frames < 1) throw std::invalid_argument("loss needs at least one frame");
  if (static_cast<int>(traj.size()) <= frames || static_cast<int>(target.q.size()) <= frames)
    throw std::invalid_argument("loss: trajectory shorter than the requested frame count");
  const double w = 1.0 / (static_cast<double>(num_nodes) * frames);
  double L = 0.0;
  if (grad) grad->assign(traj.size(), VecX());
  for (int t = 1; t <= frames; ++t) {
    if (traj[t].q.size() != target.q[t].size() || target.mask.size() != traj[t].q.size())
      throw std::invalid_argument("loss: state size mismatch at frame " + std::to_string(t));
    const VecX d = (traj[t].q - target.q[t]).cwiseProduct(target.mask);
    L += w * d.squaredNorm();
    if (grad) (*grad)[t] = 2.0 * w * d;
  }
  return L;
}

VecX solve_adjoint(const StepTape& tape, const VecX& g) {
  if (!tape.lu) throw NumericalError("adjoint: step tape carries no factorization");
  VecX lam = tape.lu->transpose().solve(g);
  const SpMat At = tape.A.transpose();
  const double gn = g.norm();
  auto rel = [&](const VecX& y) { return gn > 0 ? (At * y - g).norm() / gn : (At * y - g).norm(); };
  double r = rel(lam);
  for (int it = 0; it < 3; ++it) {
    const VecX y = lam + tape.lu->transpose().solve(VecX(g - At * lam));
    const double ry = rel(y);
    if (!(ry < r)) break;
    lam = y;
    r = ry;
  }
  if (!std::isfinite(r) || r > 1e-9) {
    std::ostringstream os;
    os << "adjoint solve residual " << r << " exceeds 1e-9 at frame " << tape.frame;
    throw NumericalError(os.str());
  }
  return lam;
}

SpMat matrix_gradient(const SpMat& A, const VecX& lambda, const VecX& x) {
  SpMat G = A;
  for (int k = 0; k < G.outerSize(); ++k)
    for (SpMat::InnerIterator it(G, k); it; ++it) it.valueRef() = -lambda[it.row()] * x[it.col()];
  return G;
}

namespace {

enum class SeedKind { Q, Qdot, Anchor, Param };

struct Seed {
  SeedKind kind;
  int local;  // local coordinate, anchor axis or parameter index
  int target; // global DoF, anchor slot or parameter index
};

// Reverse pass of the obstacle projection for one node.
void project_vjp(const Vec3& x, const Vec3& v, const std::vector<Obstacle>& obs, double friction, Vec3& gx,
                 Vec3& gv) {
  using D6 = Dual<6>;
  V3<D6> xd, vd;
  for (int c = 0; c < 3; ++c) {
    xd[c] = D6::variable(x[c], c);
    vd[c] = D6::variable(v[c], 3 + c);
  }
  for (const auto& ob : obs) project_node(xd, vd, ob, friction);
  Eigen::Matrix<double, 6, 1> out = Eigen::Matrix<double, 6, 1>::Zero();
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 6; ++k) out[k] += xd[c].d[k] * gx[c] + vd[c].d[k] * gv[c];
  gx = out.head<3>();
  gv = out.tail<3>();
}

void check_finite(const StateGrad& g, const VecX& g_theta, int frame) {
  if (!g.q.allFinite() || !g.qdot.allFinite() || !g.anchors.allFinite() || !g_theta.allFinite()) {
    std::ostringstream os;
    os << "non-finite gradient while reversing step " << frame;
    throw NumericalError(os.str());
  }
}

}  // namespace

void backprop_step(const Simulator& sim, const VecX& theta, const ControlForces* ctrl, const StepTape& tape,
                   StateGrad& g, VecX& g_theta, VecX* g_ctrl, const AdjointOptions& opt) {
  const ForceModel& model = sim.model();
  const Fabric& f = model.fabric();
  const auto& lay = f.layout();
  const auto& c = model.constants();
  const ParamLayout pl = model.param_layout();
  const auto& pinned = sim.pinned_dofs();
  const double h = sim.h();
  const State& s = tape.before;
  const VecX& x = tape.solution;
  const int n = lay.size;
  check_finite(g, g_theta, tape.frame);

  // Anchor update, from the anchors after the step back to (q', F_n, μ, ū).
  VecX gq = g.q;
  VecX g_anchor = VecX::Zero(s.anchors.size());
  VecX g_Fn = VecX::Zero(f.num_nodes());
  if (c.on.friction) {
    if (opt.anchors == GradientPath::Exact) {
      const double mu = theta[pl.friction()], kf = c.friction_stiffness;
      for (int node : f.crossings()) {
        for (int axis = 0; axis < 2; ++axis) {
          const int slot = 2 * node + axis;
          const double ga = g.anchors[slot];
          if (ga == 0.0) continue;
          const int dof = axis == 0 ? lay.u(node) : lay.v(node);
          const double delta = (s.q[dof] + h * x[dof]) - s.anchors[slot];
          const double Fn = tape.Fn[node];
          if (std::abs(delta) > mu * Fn / kf) {
            const double sg = delta > 0 ? 1.0 : -1.0;
            gq[dof] += ga;
            g_theta[pl.friction()] += -sg * Fn / kf * ga;
            g_Fn[node] += -sg * mu / kf * ga;
          } else {
            g_anchor[slot] += ga;
          }
        }
      }
    }
  } else {
    g_anchor = g.anchors;
  }

  // Obstacle projection.
  VecX gqd = g.qdot;
  const auto& cons = sim.constraints();
  if (!cons.obstacles.empty() && opt.projection == GradientPath::Exact) {
    for (int node = 0; node < f.num_nodes(); ++node) {
      const int xo = lay.x(node);
      if (pinned[xo]) continue;
      const Vec3 xp = s.q.segment<3>(xo) + h * x.segment<3>(xo);
      const Vec3 vp = x.segment<3>(xo);
      Vec3 gx = gq.segment<3>(xo), gv = gqd.segment<3>(xo);
      project_vjp(xp, vp, cons.obstacles, cons.obstacle_friction, gx, gv);
      gq.segment<3>(xo) = gx;
      gqd.segment<3>(xo) = gv;
    }
  }

  // q' = q + h x, q̇' = x.
  VecX gx = gqd + h * gq;
  for (int i = 0; i < n; ++i)
    if (pinned[i]) gx[i] = 0.0;
  StateGrad prev{gq, VecX::Zero(n), g_anchor};

  VecX lam = solve_adjoint(tape, gx);
  for (int i = 0; i < n; ++i)
    if (pinned[i]) lam[i] = 0.0;

  if (ctrl && g_ctrl && tape.frame < ctrl->frames) {
    for (int k = 0; k < static_cast<int>(ctrl->nodes.size()); ++k) {
      const int xo = lay.x(ctrl->nodes[k]);
      for (int cc = 0; cc < 3; ++cc)
        if (!pinned[xo + cc]) (*g_ctrl)[ctrl->index(tape.frame, k, cc)] += h * lam[xo + cc];
    }
  }

  // Pull λ back through each element residual b_e − A_e x.
  for (const auto& e : model.elements()) {
    const int m = e.map.size();
    VecX lam_l = VecX::Zero(m), x_l = VecX::Zero(m);
    bool any = false;
    for (int a = 0; a < m; ++a) {
      const int d = e.map.dof[a];
      if (d < 0) continue;
      x_l[a] = x[d];
      if (!pinned[d]) lam_l[a] = lam[d];
      any = any || lam_l[a] != 0.0;
    }
    const double gFn = e.kind == ElementKind::Crossing ? g_Fn[e.id] : 0.0;
    if (!any && gFn == 0.0) continue;

    const auto in = model.gather<double>(e, s.q, s.qdot, s.anchors, theta);
    std::vector<Seed> seeds;
    for (int a = 0; a < m; ++a)
      if (e.map.dof[a] >= 0) seeds.push_back({SeedKind::Q, a, e.map.dof[a]});
    for (int a = 0; a < m; ++a)
      if (e.map.dof[a] >= 0 && e.map.velocity_used[a]) seeds.push_back({SeedKind::Qdot, a, e.map.dof[a]});
    if (e.kind == ElementKind::Crossing) {
      seeds.push_back({SeedKind::Anchor, 0, 2 * e.id});
      seeds.push_back({SeedKind::Anchor, 1, 2 * e.id + 1});
    }
    for (int p : e.params) seeds.push_back({SeedKind::Param, p, p});

    for (size_t c0 = 0; c0 < seeds.size(); c0 += kLanes) {
      LocalInputs<DualL> ind;
      ind.q = in.q.cast<DualL>();
      ind.qdot = in.qdot.cast<DualL>();
      ind.anchor_u = DualL(in.anchor_u);
      ind.anchor_v = DualL(in.anchor_v);
      ind.theta = in.theta.cast<DualL>();
      const size_t c1 = std::min(seeds.size(), c0 + kLanes);
      for (size_t k = c0; k < c1; ++k) {
        const Seed& sd = seeds[k];
        const int lane = static_cast<int>(k - c0);
        switch (sd.kind) {
          case SeedKind::Q: ind.q[sd.local].d[lane] = 1.0; break;
          case SeedKind::Qdot: ind.qdot[sd.local].d[lane] = 1.0; break;
          case SeedKind::Anchor: (sd.local == 0 ? ind.anchor_u : ind.anchor_v).d[lane] = 1.0; break;
          case SeedKind::Param: ind.theta[sd.local].d[lane] = 1.0; break;
        }
      }
      const LocalForces<DualL> lf = model.evaluate(e, ind);
      DualL acc(0.0);
      VecXT<DualL> w;
      if (lf.D.size() || lf.M.size()) w = x_l.cast<DualL>() - ind.qdot;
      for (int a = 0; a < m; ++a) {
        const double la = lam_l[a];
        if (la == 0.0) continue;
        acc += lf.F[a] * (h * la);
        for (int b = 0; b < m; ++b) {
          if (x_l[b] != 0.0) acc += lf.K(a, b) * (h * h * la * x_l[b]);
          if (lf.D.size()) acc += lf.D(a, b) * w[b] * (h * la);
          if (lf.M.size()) acc -= lf.M(a, b) * w[b] * la;
        }
      }
      if (gFn != 0.0) acc += lf.Fn * gFn;
      for (size_t k = c0; k < c1; ++k) {
        const Seed& sd = seeds[k];
        const double v = acc.d[k - c0];
        switch (sd.kind) {
          case SeedKind::Q: prev.q[sd.target] += v; break;
          case SeedKind::Qdot: prev.qdot[sd.target] += v; break;
          case SeedKind::Anchor:
            if (opt.anchors == GradientPath::Exact) prev.anchors[sd.target] += v;
            break;
          case SeedKind::Param: g_theta[sd.target] += v; break;
        }
      }
    }
  }
  check_finite(prev, g_theta, tape.frame);
  g = std::move(prev);
}

Gradient backpropagate(const Simulator& sim, const VecX& theta, const ControlForces* ctrl,
                       const std::vector<StepTape>& tape, const std::vector<VecX>& dq, const std::vector<VecX>& dqdot,
                       const AdjointOptions& opt) {
  const int T = static_cast<int>(tape.size());
  Gradient out;
  out.theta = VecX::Zero(theta.size());
  if (ctrl) out.control = VecX::Zero(ctrl->size());
  const int n = sim.model().fabric().layout().size;
  StateGrad g{VecX::Zero(n), VecX::Zero(n), VecX::Zero(2 * sim.model().fabric().num_nodes())};
  auto add = [&](int t) {
    if (t < static_cast<int>(dq.size()) && dq[t].size()) g.q += dq[t];
    if (t < static_cast<int>(dqdot.size()) && dqdot[t].size()) g.qdot += dqdot[t];
  };
  add(T);
  for (int k = T - 1; k >= 0; --k) {
    backprop_step(sim, theta, ctrl, tape[k], g, out.theta, ctrl ? &out.control : nullptr, opt);
    add(k);
  }
  out.initial = std::move(g);
  return out;
}

LossAndGradient loss_and_gradient(const Simulator& sim, const State& init, const VecX& theta,
                                  const TrajectoryTarget& target, int frames, const ControlForces* ctrl,
                                  const AdjointOptions& opt) {
  LossAndGradient out;
  std::vector<StepTape> tape;
  out.traj = sim.simulate(init, theta, frames, ctrl, &tape);
  std::vector<VecX> dq;
  out.loss = trajectory_loss(out.traj, target, frames, sim.model().fabric().num_nodes(), &dq);
  out.grad = backpropagate(sim, theta, ctrl, tape, dq, {}, opt);
  return out;
}

ParamSet ParamSet::from_values(const VecX& omega, std::vector<Bound> bounds) {
  if (static_cast<int>(bounds.size()) != omega.size()) throw std::invalid_argument("parameter/bound count mismatch");
  ParamSet p;
  p.y.resize(omega.size());
  for (int k = 0; k < omega.size(); ++k) p.y[k] = reparam_inverse(omega[k], bounds[k].range(), bounds[k].lo);
  p.bounds = std::move(bounds);
  return p;
}

VecX ParamSet::values() const {
  VecX w(y.size());
  for (int k = 0; k < y.size(); ++k) w[k] = reparam(y[k], bounds[k].range(), bounds[k].lo).value;
  return w;
}

VecX ParamSet::value_derivatives() const {
  VecX d(y.size());
  for (int k = 0; k < y.size(); ++k) d[k] = reparam(y[k], bounds[k].range(), bounds[k].lo).deriv;
  return d;
}

}  // namespace yarnsim
