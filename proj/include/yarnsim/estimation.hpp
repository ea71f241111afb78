#pragma once
// Experiment drivers: synthetic ground truth, physical-parameter estimation,
// held-out evaluation and learning of corner forces for the throwing task.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "yarnsim/adjoint.hpp"

namespace yarnsim {

enum class ScenarioKind { HangingWind, ThrowToBox };

struct Scenario {
  ScenarioKind kind = ScenarioKind::HangingWind;
  FabricSpec fabric;
  ModelConstants constants;
  int steps = 500;
  double h = 1e-3;

  // HangingWind: nodes held in place (default: the two top corners).
  std::vector<int> pins;

  // ThrowToBox: the sheet starts flat on the table plane z = table_height;
  // the target is the initial centre of mass plus target_offset (by default
  // a spot on the table ahead of the sheet). table_friction is the fraction
  // of tangential velocity removed per step in contact.
  double table_height = 0.0;
  double table_friction = 0.02;
  std::vector<int> corners;
  int control_frames = 5;
  Vec3 target_offset{5e-3, 0.0, 0.0};

  void validate() const;
};

Scenario hanging_wind(FabricSpec fabric, int steps, double h = 1e-3, const Vec3& wind = Vec3(0.0, 5.0, 0.0));
Scenario throw_to_box(FabricSpec fabric, int steps, double h = 1e-3);

// Owns the fabric, force model and simulator built from a scenario.
class Experiment {
 public:
  explicit Experiment(Scenario s);
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const Scenario& scenario() const { return sc_; }
  const Fabric& fabric() const { return fabric_; }
  const ForceModel& model() const { return model_; }
  const Simulator& sim() const { return sim_; }
  ParamLayout param_layout() const { return model_.param_layout(); }

  State initial_state() const;
  Vec3 target() const;

 private:
  Scenario sc_;
  Fabric fabric_;
  ForceModel model_;
  Simulator sim_;
};

// Unweighted mean of the node positions.
Vec3 center_of_mass(const Fabric& f, const VecX& q);

std::vector<State> generate_ground_truth(const Experiment& ex, const VecX& theta, const ControlForces* ctrl = nullptr);

// ---------------------------------------------------------------- estimation

enum class OptimizerKind { Sgd, Adam, Lbfgs };

OptimizerKind parse_optimizer(const std::string& name);
std::string optimizer_name(OptimizerKind k);

// First-order steps on the unconstrained y. Estimation feeds it the gradient
// of L / L₀, L₀ being the first-epoch loss, so the step size does not depend
// on the data's length scale. L-BFGS is driven separately (one iteration per
// epoch, line search included).
struct Optimizer {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 0.1;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void reset(int n);
  void step(VecX& y, const VecX& g);

 private:
  VecX m_, v_;
  int t_ = 0;
};

struct TrainConfig {
  int frames = 25;
  int epochs = 70;
  double lr = 0.1;
  OptimizerKind optimizer = OptimizerKind::Lbfgs;
  std::vector<Bound> bounds;  // empty: default_bounds
  std::uint64_t seed = 1;
  bool lagrangian_only = false;
  std::optional<VecX> init;  // start here instead of the jittered yarn mean
  AdjointOptions adjoint;
};

// Every parameter drawn uniformly in ±10% of the mean over the materials (the
// bound midpoint for the shared shear and friction parameters), then moved
// inside its bounds.
VecX jittered_initial_guess(const ParamLayout& pl, const VecX& reference, const std::vector<Bound>& bounds,
                            std::uint64_t seed);

struct TrainResult {
  VecX theta;
  VecX initial;
  std::vector<double> loss;  // one entry per epoch, before its update
  double final_loss = 0.0;
};

// `reference` supplies the per-material values whose means seed the jitter
// (any θ of the right size; the truth is never used directly).
TrainResult estimate(const Experiment& ex, const TrajectoryTarget& target, const TrainConfig& cfg,
                     const VecX& reference);

TrajectoryTarget target_from_trajectory(const Fabric& f, const std::vector<State>& traj, bool lagrangian_only);

// Mean squared node-position error over frames 1..horizon.
double evaluate_mse(const Experiment& ex, const VecX& theta, const std::vector<State>& gt, int horizon);

// ---------------------------------------------------------------- control

// Steps follow the gradient of ‖CoM − target‖ / (its initial value) with
// respect to forces measured in units of force_scale.
struct ControlConfig {
  int epochs = 30;
  double lr = 0.5;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  double force_scale = 1e-3;  // N per unit of the optimized variable
  std::uint64_t seed = 1;
  double init_noise = 0.0;    // uniform ±init_noise·force_scale start
};

struct ControlResult {
  ControlForces forces;
  std::vector<double> loss;  // per epoch before its update; back() is the final loss
};

// ‖CoM(last frame) − target‖ and its gradient with respect to the forces.
struct ControlLoss {
  double loss = 0.0;
  VecX grad;
};
ControlLoss control_loss(const Experiment& ex, const VecX& theta, const ControlForces& ctrl);

ControlResult learn_control(const Experiment& ex, const VecX& theta, const ControlConfig& cfg);

}  // namespace yarnsim
