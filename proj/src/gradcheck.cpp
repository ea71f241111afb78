#include "yarnsim/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include "yarnsim/mass.hpp"

namespace yarnsim {

namespace {

using VecFn = std::function<VecX(const VecX&)>;

MatX fd_jacobian(const VecFn& f, const VecX& x, double h) {
  const VecX f0 = f(x);
  MatX J(f0.size(), x.size());
  for (int k = 0; k < x.size(); ++k) {
    VecX xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    J.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

double rel_err(const MatX& a, const MatX& b) {
  const double den = std::max(a.norm(), b.norm());
  return den == 0.0 ? 0.0 : (a - b).norm() / den;
}

// Best relative error over steps scale·{1e-5, 1e-6, 1e-7}.
double fd_error(const VecFn& f, const VecX& x, const MatX& analytic, double scale) {
  double best = std::numeric_limits<double>::infinity();
  for (double h : {1e-5, 1e-6, 1e-7}) best = std::min(best, rel_err(analytic, fd_jacobian(f, x, h * scale)));
  return best;
}

double scalar_rel(double a, double b) {
  const double den = std::max(std::abs(a), std::abs(b));
  return den == 0.0 ? 0.0 : std::abs(a - b) / den;
}

struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); }
};

// Rest state with position, Eulerian, velocity and anchor noise. Eulerian
// noise stays well below L so every segment keeps a positive length.
State random_state(const Fabric& f, Sampler& r) {
  const double L = f.L();
  State s = f.rest_state();
  const auto& lay = f.layout();
  for (int n = 0; n < f.num_nodes(); ++n) {
    for (int k = 0; k < 3; ++k) {
      s.q[lay.x(n) + k] += r.uniform(-0.1 * L, 0.1 * L);
      s.qdot[lay.x(n) + k] = r.uniform(-0.1, 0.1);
    }
    if (!lay.interior[n]) continue;
    for (int k = 3; k < 5; ++k) {
      s.q[lay.x(n) + k] += r.uniform(-0.05 * L, 0.05 * L);
      s.qdot[lay.x(n) + k] = r.uniform(-0.01, 0.01);
    }
    s.anchors[2 * n] = s.q[lay.u(n)] + r.uniform(-2e-4, 2e-4) * L;
    s.anchors[2 * n + 1] = s.q[lay.v(n)] + r.uniform(-2e-4, 2e-4) * L;
  }
  return s;
}

Vec3 fitted_normal(const Fabric& f, const VecX& q, int node) {
  const auto st = crossing_stencil(f, node);
  const std::array<Vec3, 5> pts = {f.pos(q, st[0]), f.pos(q, st[6]), f.pos(q, st[7]), f.pos(q, st[2]),
                                   f.pos(q, st[3])};
  return contact_normal(pts, f.crossing(node));
}

enum class Kernel { Element, Inertia, MdotQdot };

struct ModelDef {
  std::string name;
  ElementKind kind;
  ForceToggles on;
  Kernel kernel = Kernel::Element;
  bool smooth = true;
  bool collision_gap = false;  // squeeze the segment into the penalty range
  bool position_jacobian = true;
};

ForceToggles only(std::initializer_list<bool ForceToggles::*> members) {
  ForceToggles t{false, false, false, false, false, false, false, false};
  for (auto m : members) t.*m = true;
  return t;
}

std::vector<ModelDef> model_defs() {
  using T = ForceToggles;
  // Shear and friction read the normal load, which comes from the yarn forces.
  const ForceToggles loads_shear = only({&T::shear, &T::stretch, &T::bend, &T::gravity, &T::collision});
  const ForceToggles loads_friction = only({&T::friction, &T::stretch, &T::bend, &T::gravity, &T::collision});
  return {
      {"inertia", ElementKind::Segment, only({&T::inertia}), Kernel::Inertia, true, false, true},
      {"mdot_qdot", ElementKind::Segment, only({&T::inertia}), Kernel::MdotQdot, true, false, true},
      {"stretch", ElementKind::Segment, only({&T::stretch}), Kernel::Element, true, false, true},
      {"bend", ElementKind::Bend, only({&T::bend}), Kernel::Element, true, false, true},
      {"shear", ElementKind::Crossing, loads_shear, Kernel::Element, false, false, true},
      {"friction", ElementKind::Crossing, loads_friction, Kernel::Element, false, false, true},
      {"yarn_collision", ElementKind::Segment, only({&T::collision}), Kernel::Element, false, true, true},
      {"gravity", ElementKind::Segment, only({&T::gravity}), Kernel::Element, true, false, true},
      {"wind", ElementKind::Wind, only({&T::wind}), Kernel::Element, true, false, false},
  };
}

struct LocalEval {
  VecX F;
  MatX K, D;
  double V = 0.0;
};

LocalEval eval_local(const ForceModel& m, const ModelDef& d, const Element& e, const LocalInputs<double>& in,
                     const CrossingOptions& opt, const VecX& theta) {
  LocalEval r;
  if (d.kernel == Kernel::Element) {
    const auto lf = m.evaluate(e, in, opt);
    r.F = lf.F;
    r.K = lf.K;
    r.D = lf.D.size() ? lf.D : MatX::Zero(lf.F.size(), lf.F.size());
    r.V = lf.V;
    return r;
  }
  const Segment& s = m.fabric().segments()[e.id];
  const double rho = theta[m.param_layout().density(s.material)];
  const Vec8<double> x = in.q, v = in.qdot;
  if (d.kernel == Kernel::Inertia) {
    r.F = inertia_force(x, v, rho);
    const auto J = inertia_jacobians(x, v, rho);
    r.K = J.dq;
    r.D = J.dqdot;
  } else {
    const auto md = mdot_qdot_term(x, v, rho);
    r.F = md.F;
    r.K = md.dq;
    r.D = md.dqdot;
  }
  return r;
}

ModelConstants with_toggles(ModelConstants c, const ForceToggles& on) {
  c.on = on;
  return c;
}

CheckLine make_line(std::string group, std::string name, std::string quantity) {
  CheckLine c;
  c.group = std::move(group);
  c.name = std::move(name);
  c.quantity = std::move(quantity);
  return c;
}

int kind_count(const ForceModel& m, ElementKind k) {
  return static_cast<int>(std::count_if(m.elements().begin(), m.elements().end(),
                                        [&](const Element& e) { return e.kind == k; }));
}

}  // namespace

const std::vector<std::string>& force_model_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& d : model_defs()) n.push_back(d.name);
    return n;
  }();
  return names;
}

std::string format_check(const CheckLine& c) {
  char buf[256];
  if (!c.applicable) {
    std::snprintf(buf, sizeof buf, "%-8s %-16s %-10s %s (%s)", c.group.c_str(), c.name.c_str(), c.quantity.c_str(),
                  "n/a ", c.note.c_str());
  } else {
    std::snprintf(buf, sizeof buf, "%-8s %-16s %-10s %s rel_err=%.3e tol=%.0e samples=%d%s%s", c.group.c_str(),
                  c.name.c_str(), c.quantity.c_str(), c.pass() ? "PASS" : "FAIL", c.error, c.tol, c.samples,
                  c.note.empty() ? "" : " ", c.note.c_str());
  }
  return buf;
}

bool all_pass(const std::vector<CheckLine>& lines) {
  return std::all_of(lines.begin(), lines.end(), [](const CheckLine& c) { return c.pass(); });
}

std::vector<CheckLine> check_force_jacobians(const FabricSpec& spec, const ModelConstants& constants,
                                             const VecX& theta, const JacobianCheckOptions& opt) {
  const Fabric f(spec);
  const double L = f.L();
  std::vector<CheckLine> out;
  bool flip_found = opt.flip.empty();
  for (const auto& d : model_defs()) {
    const ForceModel m(f, with_toggles(constants, d.on));
    const int per_state = kind_count(m, d.kind);
    if (per_state == 0) throw std::invalid_argument("fabric too small to exercise the " + d.name + " model");
    const bool flip = d.name == opt.flip;
    flip_found |= flip;
    Sampler r(opt.seed);
    CheckLine cq = make_line("jacobian", d.name, "dF/dq"), cv = make_line("jacobian", d.name, "dF/dqdot");
    cq.tol = cv.tol = d.smooth ? 1e-5 : 1e-4;
    if (!d.position_jacobian) {
      cq.applicable = false;
      cq.note = "face normal frozen within a step; only dF/dqdot is assembled";
    }
    while (cv.samples < opt.min_samples) {
      const State s = random_state(f, r);
      for (const auto& e : m.elements()) {
        if (e.kind != d.kind) continue;
        Vec3 nrm;
        CrossingOptions copt;
        if (e.kind == ElementKind::Crossing) {
          nrm = fitted_normal(f, s.q, e.id);
          copt.frozen_normal = &nrm;
        }
        LocalInputs<double> in = m.gather<double>(e, s.q, s.qdot, s.anchors, theta);
        if (d.collision_gap) {
          const double dist = f.collision_distance(f.segments()[e.id]);
          in.q[7] = in.q[6] + r.uniform(0.3, 0.95) * dist;
        }
        LocalEval a = eval_local(m, d, e, in, copt, theta);
        if (flip) {
          a.K = -a.K;
          a.D = -a.D;
        }
        if (d.position_jacobian) {
          auto Fq = [&](const VecX& x) {
            LocalInputs<double> t = in;
            t.q = x;
            return eval_local(m, d, e, t, copt, theta).F;
          };
          cq.error = std::max(cq.error, fd_error(Fq, in.q, a.K, L));
          ++cq.samples;
        }
        auto Fv = [&](const VecX& v) {
          LocalInputs<double> t = in;
          t.qdot = v;
          return eval_local(m, d, e, t, copt, theta).F;
        };
        cv.error = std::max(cv.error, fd_error(Fv, in.qdot, a.D, 1.0));
        ++cv.samples;
      }
    }
    out.push_back(cq);
    out.push_back(cv);
  }
  if (!flip_found) throw std::invalid_argument("unknown force model '" + opt.flip + "'");
  return out;
}

std::vector<CheckLine> check_energy_consistency(const FabricSpec& spec, const ModelConstants& constants,
                                                const VecX& theta, const JacobianCheckOptions& opt) {
  const Fabric f(spec);
  const double L = f.L();
  std::vector<CheckLine> out;
  for (const auto& d : model_defs()) {
    if (d.name != "stretch" && d.name != "bend" && d.name != "gravity" && d.name != "yarn_collision" &&
        d.name != "shear")
      continue;
    // Shear alone: without yarn loads the normal force stays at zero.
    const ForceToggles on = d.name == "shear" ? only({&ForceToggles::shear}) : d.on;
    const ForceModel m(f, with_toggles(constants, on));
    Sampler r(opt.seed + 17);
    CheckLine c = make_line("energy", d.name, "-dV/dq");
    c.tol = 1e-5;
    if (d.name == "shear") c.note = "normal load held at zero";
    while (c.samples < opt.min_samples) {
      const State s = random_state(f, r);
      for (const auto& e : m.elements()) {
        if (e.kind != d.kind) continue;
        Vec3 nrm;
        CrossingOptions copt;
        if (e.kind == ElementKind::Crossing) {
          nrm = fitted_normal(f, s.q, e.id);
          copt.frozen_normal = &nrm;
        }
        LocalInputs<double> in = m.gather<double>(e, s.q, s.qdot, s.anchors, theta);
        if (d.collision_gap) {
          const double dist = f.collision_distance(f.segments()[e.id]);
          in.q[7] = in.q[6] + r.uniform(0.3, 0.95) * dist;
        }
        const VecX F = m.evaluate(e, in, copt).F;
        auto V = [&](const VecX& x) {
          LocalInputs<double> t = in;
          t.q = x;
          return VecX::Constant(1, m.evaluate(e, t, copt).V);
        };
        c.error = std::max(c.error, fd_error(V, in.q, -F.transpose(), L));
        ++c.samples;
      }
    }
    out.push_back(c);
  }
  return out;
}

std::vector<int> control_nodes(const Scenario& sc, const Fabric& f) {
  if (!sc.corners.empty()) return sc.corners;
  const int r = f.rows() - 1, c = f.cols() - 1;
  std::vector<int> cand = {f.node(0, 0), f.node(0, c), f.node(r, 0), f.node(r, c), f.node(r / 2, 0),
                           f.node(r / 2, c), f.node(0, c / 2), f.node(r, c / 2)};
  std::vector<int> out;
  for (int n : cand) {
    if (out.size() == 4) break;
    if (std::find(sc.pins.begin(), sc.pins.end(), n) != sc.pins.end()) continue;
    if (std::find(out.begin(), out.end(), n) != out.end()) continue;
    out.push_back(n);
  }
  return out;
}

std::vector<CheckLine> check_rollout_gradient(const Experiment& ex, const VecX& theta,
                                              const RolloutCheckOptions& opt) {
  const Scenario& sc = ex.scenario();
  const int frames = sc.steps;
  if (frames < 1) throw std::invalid_argument("rollout check needs at least one step");
  const int N = ex.fabric().num_nodes();
  const State init = ex.initial_state();
  const ParamLayout pl = ex.param_layout();

  ControlForces ctrl(control_nodes(sc, ex.fabric()), sc.control_frames);
  for (int k = 0; k < ctrl.size(); ++k) ctrl.values[k] = 1e-5 * std::sin(1.1 * k + 0.2);
  const ControlForces* cp = opt.controls ? &ctrl : nullptr;

  VecX moved = theta;
  for (int k = 0; k < theta.size(); ++k) moved[k] *= 1.0 + 0.1 * std::cos(2.1 * k);
  TrajectoryTarget target = target_from_trajectory(ex.fabric(), ex.sim().simulate(init, moved, frames, cp), false);

  const auto lg = loss_and_gradient(ex.sim(), init, theta, target, frames, cp, opt.adjoint);
  auto loss = [&](const VecX& th, const ControlForces* c) {
    return trajectory_loss(ex.sim().simulate(init, th, frames, c), target, frames, N);
  };

  std::vector<CheckLine> out;
  auto record = [&](const std::string& name, const char* qty, double analytic, const std::function<double(double)>& fd,
                    double scale) {
    CheckLine c = make_line("rollout", name, qty);
    c.tol = opt.tol;
    c.error = std::numeric_limits<double>::infinity();
    double best_fd = 0.0;
    for (double s : {1e-4, 1e-5, 1e-6}) {
      const double v = fd(s * scale);
      const double e = scalar_rel(analytic, v);
      if (e < c.error) {
        c.error = e;
        best_fd = v;
      }
    }
    c.samples = 1;
    char buf[96];
    std::snprintf(buf, sizeof buf, "adjoint=%.6e fd=%.6e", analytic, best_fd);
    c.note = buf;
    out.push_back(c);
  };

  for (int p = 0; p < pl.size(); ++p) {
    auto fd = [&](double e) {
      VecX tp = theta, tm = theta;
      tp[p] += e;
      tm[p] -= e;
      return (loss(tp, cp) - loss(tm, cp)) / (2.0 * e);
    };
    record(pl.name(p), "dL/dtheta", lg.grad.theta[p], fd, std::abs(theta[p]) > 0.0 ? std::abs(theta[p]) : 1.0);
  }
  if (cp) {
    for (int k = 0; k < ctrl.size(); ++k) {
      auto fd = [&](double e) {
        ControlForces a = ctrl, b = ctrl;
        a.values[k] += e;
        b.values[k] -= e;
        return (loss(theta, &a) - loss(theta, &b)) / (2.0 * e);
      };
      record("force[" + std::to_string(k) + "]", "dL/dforce", lg.grad.control[k], fd, 1e-5);
    }
  }
  return out;
}

}  // namespace yarnsim
