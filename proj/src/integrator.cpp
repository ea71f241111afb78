#include "yarnsim/integrator.hpp"

#include <cmath>
#include <sstream>

namespace yarnsim {

Simulator::Simulator(const ForceModel& model, Constraints cons, double h)
    : model_(&model), cons_(std::move(cons)), h_(h) {
  if (!(h > 0.0)) throw std::invalid_argument("time step must be positive");
  const auto& f = model.fabric();
  pinned_dof_.assign(f.layout().size, 0);
  for (int n : cons_.pinned) {
    if (n < 0 || n >= f.num_nodes()) throw std::invalid_argument("pinned node out of range");
    for (int c = 0; c < 3; ++c) pinned_dof_[f.layout().x(n) + c] = 1;
  }
}

Assembly Simulator::assemble(const State& s, const VecX& theta, const ControlForces* ctrl, int frame) const {
  const auto& f = model_->fabric();
  const int n = f.layout().size;
  Assembly out;
  out.b = VecX::Zero(n);
  out.Fn = VecX::Zero(f.num_nodes());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n) * 60);
  const double h = h_;

  for (const auto& e : model_->elements()) {
    const auto in = model_->gather<double>(e, s.q, s.qdot, s.anchors, theta);
    const auto lf = model_->evaluate(e, in);
    const int m = e.map.size();
    VecX bl = h * lf.F;
    MatX Al = -h * h * lf.K;
    if (lf.D.size()) {
      bl -= h * (lf.D * in.qdot);
      Al -= h * lf.D;
    }
    if (lf.M.size()) {
      bl += lf.M * in.qdot;
      Al += lf.M;
    }
    for (int a = 0; a < m; ++a) {
      const int ga = e.map.dof[a];
      if (ga < 0 || pinned_dof_[ga]) continue;
      out.b[ga] += bl[a];
      for (int c = 0; c < m; ++c) {
        const int gc = e.map.dof[c];
        if (gc < 0 || pinned_dof_[gc]) continue;
        if (Al(a, c) != 0.0) trip.emplace_back(ga, gc, Al(a, c));
      }
    }
    if (e.kind == ElementKind::Crossing) out.Fn[e.id] = lf.Fn;
    out.potential += lf.V;
  }
  for (int i = 0; i < n; ++i)
    if (pinned_dof_[i]) trip.emplace_back(i, i, 1.0);
  if (ctrl) {
    for (int k = 0; k < static_cast<int>(ctrl->nodes.size()); ++k) {
      const Vec3 fc = ctrl->force(frame, k);
      const int x = f.layout().x(ctrl->nodes[k]);
      for (int c = 0; c < 3; ++c)
        if (!pinned_dof_[x + c]) out.b[x + c] += h * fc[c];
    }
  }
  out.A.resize(n, n);
  out.A.setFromTriplets(trip.begin(), trip.end());
  out.A.makeCompressed();
  return out;
}

VecX Simulator::solve(const SpMat& A, const VecX& b, std::shared_ptr<SparseLUSolver>* keep, double* residual) const {
  auto lu = std::make_shared<SparseLUSolver>();
  lu->analyzePattern(A);
  lu->factorize(A);
  if (lu->info() != Eigen::Success) throw NumericalError("sparse factorization failed: " + lu->lastErrorMessage());
  VecX x = lu->solve(b);
  const double bn = b.norm();
  auto rel = [&](const VecX& y) { return bn > 0 ? (A * y - b).norm() / bn : (A * y - b).norm(); };
  double r = rel(x);
  for (int it = 0; it < 3; ++it) {
    const VecX y = x + lu->solve(VecX(b - A * x));
    const double ry = rel(y);
    if (!(ry < r)) break;
    x = y;
    r = ry;
  }
  if (!std::isfinite(r) || r > 1e-9) {
    std::ostringstream os;
    os << "linear solve residual " << r << " exceeds 1e-9 (ill-conditioned system)";
    throw NumericalError(os.str());
  }
  if (residual) *residual = r;
  if (keep) *keep = lu;
  return x;
}

void Simulator::project_obstacles(State& s) const {
  if (cons_.obstacles.empty()) return;
  const auto& f = model_->fabric();
  for (int n = 0; n < f.num_nodes(); ++n) {
    const int x = f.layout().x(n);
    if (pinned_dof_[x]) continue;
    Vec3 p = s.q.segment<3>(x), v = s.qdot.segment<3>(x);
    for (const auto& ob : cons_.obstacles) project_node(p, v, ob, cons_.obstacle_friction);
    s.q.segment<3>(x) = p;
    s.qdot.segment<3>(x) = v;
  }
}

State Simulator::step(const State& s, const VecX& theta, const ControlForces* ctrl, int frame, StepTape* tape,
                      StepInfo* info) const {
  const auto& f = model_->fabric();
  const auto& c = model_->constants();
  const Assembly as = assemble(s, theta, ctrl, frame);
  std::shared_ptr<SparseLUSolver> lu;
  double res = 0.0;
  const VecX x = solve(as.A, as.b, tape ? &lu : nullptr, &res);

  State out;
  out.q = s.q + h_ * x;
  out.qdot = x;
  out.t = s.t + h_;
  project_obstacles(out);

  out.anchors = s.anchors;
  if (c.on.friction) {
    const double mu = theta[model_->param_layout().friction()];
    for (int n : f.crossings()) {
      out.anchors[2 * n] = update_anchor(f.eul(out.q, n, YarnDir::Warp), s.anchors[2 * n], as.Fn[n], mu,
                                         c.friction_stiffness);
      out.anchors[2 * n + 1] = update_anchor(f.eul(out.q, n, YarnDir::Weft), s.anchors[2 * n + 1], as.Fn[n], mu,
                                             c.friction_stiffness);
    }
  }
  const double gap = f.min_eulerian_gap(out.q);
  if (!(gap > 0.0)) {
    std::ostringstream os;
    os << "Eulerian coordinates lost monotonicity at frame " << frame + 1 << " (min gap " << gap << ")";
    throw NumericalError(os.str());
  }
  if (tape) {
    tape->before = s;
    tape->A = as.A;
    tape->b = as.b;
    tape->solution = x;
    tape->Fn = as.Fn;
    tape->lu = lu;
    tape->frame = frame;
    tape->residual = res;
  }
  if (info) {
    info->residual = res;
    info->min_gap = gap;
  }
  return out;
}

std::vector<State> Simulator::simulate(const State& init, const VecX& theta, int n_steps, const ControlForces* ctrl,
                                       std::vector<StepTape>* tape, std::vector<StepInfo>* info) const {
  std::vector<State> traj;
  traj.reserve(n_steps + 1);
  traj.push_back(init);
  if (tape) tape->assign(n_steps, {});
  if (info) info->assign(n_steps, {});
  for (int k = 0; k < n_steps; ++k) {
    traj.push_back(step(traj.back(), theta, ctrl, k, tape ? &(*tape)[k] : nullptr, info ? &(*info)[k] : nullptr));
  }
  return traj;
}

double Simulator::kinetic_energy(const State& s, const VecX& theta) const {
  const auto& f = model_->fabric();
  const ParamLayout pl = model_->param_layout();
  double T = 0.0;
  for (const auto& e : model_->elements()) {
    if (e.kind != ElementKind::Segment) continue;
    const auto in = model_->gather<double>(e, s.q, s.qdot, s.anchors, theta);
    const Vec8<double> x = in.q, v = in.qdot;
    T += yarnsim::kinetic_energy(x, v, theta[pl.density(f.segments()[e.id].material)]);
  }
  return T;
}

double Simulator::potential_energy(const State& s, const VecX& theta) const {
  double V = 0.0;
  for (const auto& e : model_->elements()) {
    const auto in = model_->gather<double>(e, s.q, s.qdot, s.anchors, theta);
    V += model_->evaluate(e, in).V;
  }
  return V;
}

}  // namespace yarnsim
