#include "yarnsim/estimation.hpp"

#include <ceres/ceres.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace yarnsim {

namespace {

Constraints constraints_for(const Scenario& s) {
  Constraints c;
  if (s.kind == ScenarioKind::HangingWind) {
    c.pinned = s.pins;
  } else {
    c.obstacles.push_back(Obstacle::plane(Vec3(0.0, 0.0, s.table_height), Vec3::UnitZ()));
    c.obstacle_friction = s.table_friction;
  }
  return c;
}

// Uniform in [0, 1) from the raw 64-bit stream, identical on every platform.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool has_nan(const VecX& v) { return !v.allFinite(); }

using Objective = std::function<std::pair<double, VecX>(const VecX&, int)>;

// Loss and gradient of L / L₀ for the line-search solver.
class ScaledObjective : public ceres::FirstOrderFunction {
 public:
  ScaledObjective(Objective f, int n, double scale) : f_(std::move(f)), n_(n), scale_(scale) {}
  int NumParameters() const override { return n_; }
  bool Evaluate(const double* y, double* cost, double* grad) const override {
    const auto [loss, g] = f_(Eigen::Map<const VecX>(y, n_), evals_++);
    *cost = loss / scale_;
    if (grad) Eigen::Map<VecX>(grad, n_) = g / scale_;
    return true;
  }

 private:
  Objective f_;
  int n_;
  double scale_;
  mutable int evals_ = 0;
};

// One L-BFGS iteration per epoch. If the solver converges early the remaining
// history rows repeat the final loss.
void run_lbfgs(VecX& y, int epochs, const Objective& f, double floor, std::vector<double>& history,
               double& final_loss) {
  const auto [l0, g0] = f(y, 0);
  if (l0 <= floor) {
    history.assign(epochs, l0);
    final_loss = l0;
    return;
  }
  ceres::GradientProblem problem(new ScaledObjective(f, static_cast<int>(y.size()), l0));
  ceres::GradientProblemSolver::Options o;
  o.line_search_direction_type = ceres::LBFGS;
  o.max_num_iterations = epochs;
  o.function_tolerance = 0.0;
  o.gradient_tolerance = 0.0;
  o.parameter_tolerance = 0.0;
  o.logging_type = ceres::SILENT;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(o, problem, y.data(), &summary);
  for (const auto& it : summary.iterations) {
    if (static_cast<int>(history.size()) == epochs) break;
    history.push_back(it.cost * l0);
  }
  final_loss = summary.final_cost * l0;
  while (static_cast<int>(history.size()) < epochs) history.push_back(final_loss);
}

}  // namespace

void Scenario::validate() const {
  fabric.validate();
  const int nodes = fabric.rows * fabric.cols;
  if (!(h > 0.0)) throw std::invalid_argument("scenario: time step must be positive");
  if (steps < 0) throw std::invalid_argument("scenario: negative step count");
  auto check = [&](const std::vector<int>& ids, const char* what) {
    for (int n : ids)
      if (n < 0 || n >= nodes) throw std::invalid_argument(std::string("scenario: ") + what + " node out of range");
  };
  check(pins, "pinned");
  check(corners, "corner");
  if (kind == ScenarioKind::ThrowToBox && corners.empty())
    throw std::invalid_argument("scenario: throw task needs control nodes");
  if (control_frames < 0) throw std::invalid_argument("scenario: negative control frame count");
}

Scenario hanging_wind(FabricSpec fabric, int steps, double h, const Vec3& wind) {
  Scenario s;
  s.kind = ScenarioKind::HangingWind;
  s.pins = {0, fabric.cols - 1};
  s.fabric = std::move(fabric);
  s.steps = steps;
  s.h = h;
  s.constants.wind.velocity = wind;
  return s;
}

Scenario throw_to_box(FabricSpec fabric, int steps, double h) {
  Scenario s;
  s.kind = ScenarioKind::ThrowToBox;
  const int r = fabric.rows - 1, c = fabric.cols - 1;
  s.corners = {0, c, r * fabric.cols, r * fabric.cols + c};
  s.fabric = std::move(fabric);
  s.steps = steps;
  s.h = h;
  s.constants.on.wind = false;
  return s;
}

Experiment::Experiment(Scenario s)
    : sc_((s.validate(), std::move(s))),
      fabric_(sc_.fabric),
      model_(fabric_, sc_.constants),
      sim_(model_, constraints_for(sc_), sc_.h) {}

State Experiment::initial_state() const {
  if (sc_.kind == ScenarioKind::HangingWind)
    return fabric_.rest_state(Vec3::Zero(), Vec3::UnitX(), -Vec3::UnitZ());
  return fabric_.rest_state(Vec3(0.0, 0.0, sc_.table_height), Vec3::UnitX(), Vec3::UnitY());
}

Vec3 Experiment::target() const { return center_of_mass(fabric_, initial_state().q) + sc_.target_offset; }

Vec3 center_of_mass(const Fabric& f, const VecX& q) {
  Vec3 c = Vec3::Zero();
  for (int n = 0; n < f.num_nodes(); ++n) c += f.pos(q, n);
  return c / f.num_nodes();
}

std::vector<State> generate_ground_truth(const Experiment& ex, const VecX& theta, const ControlForces* ctrl) {
  return ex.sim().simulate(ex.initial_state(), theta, ex.scenario().steps, ctrl);
}

// ---------------------------------------------------------------- optimizer

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "lbfgs") return OptimizerKind::Lbfgs;
  throw std::invalid_argument("unknown optimizer '" + name + "' (expected sgd, adam or lbfgs)");
}

std::string optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Lbfgs: return "lbfgs";
  }
  return "?";
}

void Optimizer::reset(int n) {
  m_ = VecX::Zero(n);
  v_ = VecX::Zero(n);
  t_ = 0;
}

void Optimizer::step(VecX& y, const VecX& g) {
  if (kind == OptimizerKind::Sgd) {
    y -= lr * g;
    return;
  }
  if (m_.size() != y.size()) reset(static_cast<int>(y.size()));
  ++t_;
  m_ = beta1 * m_ + (1.0 - beta1) * g;
  v_ = beta2 * v_ + (1.0 - beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, t_), c2 = 1.0 - std::pow(beta2, t_);
  y.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
}

// ---------------------------------------------------------------- estimation

VecX jittered_initial_guess(const ParamLayout& pl, const VecX& reference, const std::vector<Bound>& bounds,
                            std::uint64_t seed) {
  if (reference.size() != pl.size() || static_cast<int>(bounds.size()) != pl.size())
    throw std::invalid_argument("initial guess: parameter count mismatch");
  std::mt19937_64 rng(seed);
  VecX mean(pl.size());
  auto material_mean = [&](auto index) {
    double s = 0.0;
    for (int m = 0; m < pl.materials; ++m) s += reference[index(m)];
    return s / pl.materials;
  };
  for (int m = 0; m < pl.materials; ++m) {
    mean[pl.density(m)] = material_mean([&](int k) { return pl.density(k); });
    mean[pl.stretch(m)] = material_mean([&](int k) { return pl.stretch(k); });
    mean[pl.bend(m)] = material_mean([&](int k) { return pl.bend(k); });
  }
  for (int k : {pl.shear(), pl.friction()}) mean[k] = 0.5 * (bounds[k].lo + bounds[k].hi);
  VecX out(pl.size());
  for (int k = 0; k < pl.size(); ++k) {
    const double v = mean[k] * (1.0 + 0.2 * (unit_uniform(rng) - 0.5));
    const double margin = 0.02 * bounds[k].range();
    out[k] = std::clamp(v, bounds[k].lo + margin, bounds[k].hi - margin);
  }
  return out;
}

TrajectoryTarget target_from_trajectory(const Fabric& f, const std::vector<State>& traj, bool lagrangian_only) {
  TrajectoryTarget t;
  t.q.reserve(traj.size());
  for (const auto& s : traj) t.q.push_back(s.q);
  t.mask = loss_mask(f, lagrangian_only);
  return t;
}

TrainResult estimate(const Experiment& ex, const TrajectoryTarget& target, const TrainConfig& cfg,
                     const VecX& reference) {
  const ParamLayout pl = ex.param_layout();
  if (cfg.frames < 1) throw std::invalid_argument("estimate: at least one training frame is needed");
  if (static_cast<int>(target.q.size()) < cfg.frames + 1)
    throw std::invalid_argument("estimate: ground truth has fewer frames than requested");
  if (cfg.epochs < 0) throw std::invalid_argument("estimate: negative epoch count");
  const std::vector<Bound> bounds = cfg.bounds.empty() ? default_bounds(pl) : cfg.bounds;

  TrainResult res;
  res.initial = cfg.init ? *cfg.init : jittered_initial_guess(pl, reference, bounds, cfg.seed);
  for (int k = 0; k < pl.size(); ++k)
    if (!(res.initial[k] > bounds[k].lo && res.initial[k] < bounds[k].hi))
      throw std::invalid_argument("estimate: initial " + pl.name(k) + " lies outside its bounds");
  ParamSet p = ParamSet::from_values(res.initial, bounds);
  const State init = ex.initial_state();
  auto evaluate = [&](const VecX& y, int epoch) {
    ParamSet q = p;
    q.y = y;
    auto lg = loss_and_gradient(ex.sim(), init, q.values(), target, cfg.frames, nullptr, cfg.adjoint);
    if (!std::isfinite(lg.loss) || has_nan(lg.grad.theta)) {
      std::ostringstream os;
      os << "estimate: non-finite loss or gradient at epoch " << epoch;
      throw NumericalError(os.str());
    }
    return std::pair<double, VecX>(lg.loss, q.chain(lg.grad.theta));
  };

  // Losses below 1e-12 of the data's own mean square are round-off: already at the data.
  double data_scale = 0.0;
  for (int t = 1; t <= cfg.frames; ++t) data_scale += target.q[t].cwiseProduct(target.mask).squaredNorm();
  const double floor = 1e-12 * data_scale / (cfg.frames * ex.fabric().num_nodes());

  if (cfg.epochs == 0) {
    res.theta = res.initial;
    res.final_loss = evaluate(p.y, 0).first;
    return res;
  }
  if (cfg.optimizer == OptimizerKind::Lbfgs) {
    run_lbfgs(p.y, cfg.epochs, evaluate, floor, res.loss, res.final_loss);
  } else {
    Optimizer opt;
    opt.kind = cfg.optimizer;
    opt.lr = cfg.lr;
    opt.reset(pl.size());
    double scale = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const auto [loss, g] = evaluate(p.y, epoch);
      res.loss.push_back(loss);
      if (epoch == 0) scale = loss;
      if (scale > floor) opt.step(p.y, g / scale);
    }
    res.final_loss = evaluate(p.y, cfg.epochs).first;
  }
  res.theta = p.values();
  return res;
}

double evaluate_mse(const Experiment& ex, const VecX& theta, const std::vector<State>& gt, int horizon) {
  if (horizon < 1 || static_cast<int>(gt.size()) < horizon + 1)
    throw std::invalid_argument("evaluate_mse: horizon exceeds the ground truth");
  const auto traj = ex.sim().simulate(ex.initial_state(), theta, horizon);
  return trajectory_loss(traj, target_from_trajectory(ex.fabric(), gt, true), horizon, ex.fabric().num_nodes());
}

// ---------------------------------------------------------------- control

ControlLoss control_loss(const Experiment& ex, const VecX& theta, const ControlForces& ctrl) {
  const Simulator& sim = ex.sim();
  const Fabric& f = ex.fabric();
  const int T = ex.scenario().steps;
  std::vector<StepTape> tape;
  const auto traj = sim.simulate(ex.initial_state(), theta, T, &ctrl, &tape);
  const Vec3 d = center_of_mass(f, traj.back().q) - ex.target();
  ControlLoss out;
  out.loss = d.norm();
  if (out.loss == 0.0) {
    out.grad = VecX::Zero(ctrl.size());
    return out;
  }
  std::vector<VecX> dq(T + 1);
  dq[T] = VecX::Zero(traj.back().q.size());
  const Vec3 g = d / (out.loss * f.num_nodes());
  for (int n = 0; n < f.num_nodes(); ++n) dq[T].segment<3>(f.layout().x(n)) = g;
  out.grad = backpropagate(sim, theta, &ctrl, tape, dq, {}).control;
  return out;
}

ControlResult learn_control(const Experiment& ex, const VecX& theta, const ControlConfig& cfg) {
  const Scenario& sc = ex.scenario();
  if (sc.kind != ScenarioKind::ThrowToBox) throw std::invalid_argument("learn_control: needs a throw scenario");
  if (cfg.epochs < 0) throw std::invalid_argument("learn_control: negative epoch count");
  ControlResult res;
  res.forces = ControlForces(sc.corners, sc.control_frames);
  std::mt19937_64 rng(cfg.seed);
  VecX z(res.forces.size());
  for (int k = 0; k < z.size(); ++k) z[k] = cfg.init_noise * (2.0 * unit_uniform(rng) - 1.0);
  Optimizer opt;
  opt.kind = cfg.optimizer;
  opt.lr = cfg.lr;
  opt.reset(static_cast<int>(z.size()));
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    res.forces.values = cfg.force_scale * z;
    const auto cl = control_loss(ex, theta, res.forces);
    if (!std::isfinite(cl.loss) || has_nan(cl.grad)) {
      std::ostringstream os;
      os << "learn_control: non-finite loss or gradient at epoch " << epoch;
      throw NumericalError(os.str());
    }
    res.loss.push_back(cl.loss);
    if (epoch == cfg.epochs) break;
    if (res.loss.front() == 0.0) continue;
    opt.step(z, cfg.force_scale * cl.grad / res.loss.front());
  }
  return res;
}

}  // namespace yarnsim
