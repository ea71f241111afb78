#pragma once
// Reverse sweep through an implicit-Euler rollout. Each step solves
// Aᵀλ = ∂L/∂q̇ₜ₊₁ with the stored factorization, then pulls λ back through the
// per-element residuals b − A q̇ₜ₊₁ with dual numbers, which yields the
// gradient with respect to the previous state, the physical parameters and
// the control forces without forming ∂A/∂θ.

#include <string>
#include <vector>

#include "yarnsim/integrator.hpp"

namespace yarnsim {

// Exact: differentiate the anchor update / obstacle projection.
// Stop: anchors are constants; projection passes gradients through unchanged.
enum class GradientPath { Exact, Stop };

struct AdjointOptions {
  GradientPath anchors = GradientPath::Exact;
  GradientPath projection = GradientPath::Exact;
};

struct StateGrad {
  VecX q, qdot, anchors;

  static StateGrad zero(const State& s) {
    return {VecX::Zero(s.q.size()), VecX::Zero(s.qdot.size()), VecX::Zero(s.anchors.size())};
  }
};

// ---------------------------------------------------------------- loss

// Per-frame targets in the global q layout; mask selects the DoFs that enter
// the loss (all of them, or the Lagrangian ones only).
struct TrajectoryTarget {
  std::vector<VecX> q;  // frame 0 is the initial state
  VecX mask;
};

VecX loss_mask(const Fabric& f, bool lagrangian_only);

// (1/(N T)) Σ_{t=1..T} Σ_n ‖q_{n,t} − q̂_{n,t}‖² with N nodes and T = frames.
// When grad is given it receives ∂L/∂q per frame (frame 0 included, zero).
double trajectory_loss(const std::vector<State>& traj, const TrajectoryTarget& target, int frames, int num_nodes,
                       std::vector<VecX>* grad = nullptr);

// ---------------------------------------------------------------- linear solve

// λ = A⁻ᵀ g using the factorization kept on the tape; throws if the transpose
// residual exceeds 1e−9.
VecX solve_adjoint(const StepTape& tape, const VecX& g);

// ∂L/∂A = −λ xᵀ restricted to the sparsity pattern of A.
SpMat matrix_gradient(const SpMat& A, const VecX& lambda, const VecX& x);

// ---------------------------------------------------------------- sweep

struct Gradient {
  VecX theta;    // ∂L/∂θ (physical parameters)
  VecX control;  // ∂L/∂(control values); empty without controls
  StateGrad initial;
};

// Pulls `g` (gradient w.r.t. the state after step `tape`) back to the state
// before it. Parameter and control gradients are accumulated.
void backprop_step(const Simulator& sim, const VecX& theta, const ControlForces* ctrl, const StepTape& tape,
                   StateGrad& g, VecX& g_theta, VecX* g_ctrl, const AdjointOptions& opt = {});

// Full reverse sweep. dq / dqdot hold ∂L/∂q and ∂L/∂q̇ per frame (size
// tape.size() + 1, entries may be empty for zero).
Gradient backpropagate(const Simulator& sim, const VecX& theta, const ControlForces* ctrl,
                       const std::vector<StepTape>& tape, const std::vector<VecX>& dq, const std::vector<VecX>& dqdot,
                       const AdjointOptions& opt = {});

// Forward rollout of `frames` steps followed by the reverse sweep of the
// trajectory loss.
struct LossAndGradient {
  double loss = 0.0;
  Gradient grad;
  std::vector<State> traj;
};

LossAndGradient loss_and_gradient(const Simulator& sim, const State& init, const VecX& theta,
                                  const TrajectoryTarget& target, int frames, const ControlForces* ctrl = nullptr,
                                  const AdjointOptions& opt = {});

// ---------------------------------------------------------------- parameters

// Learnable parameters stored unconstrained: ω_k = a_k sigmoid(y_k) + b_k.
struct ParamSet {
  std::vector<Bound> bounds;
  VecX y;

  static ParamSet from_values(const VecX& omega, std::vector<Bound> bounds);
  VecX values() const;
  VecX value_derivatives() const;  // dω/dy
  VecX chain(const VecX& g_omega) const { return g_omega.cwiseProduct(value_derivatives()); }
};

}  // namespace yarnsim
