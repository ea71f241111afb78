#pragma once
// Analytic-versus-finite-difference checks shared by the gradcheck command
// and the acceptance suite: per force model Jacobians, energy consistency of
// the conservative forces, and the end-to-end rollout gradient.

#include <cstdint>
#include <string>
#include <vector>

#include "yarnsim/estimation.hpp"

namespace yarnsim {

struct CheckLine {
  std::string group;     // jacobian | energy | rollout
  std::string name;      // force model or parameter
  std::string quantity;  // dF/dq, dF/dqdot, -dV/dq, dL/dtheta, dL/dforce
  double error = 0.0;
  double tol = 0.0;
  int samples = 0;
  bool applicable = true;  // false: listed for coverage, nothing to compare
  std::string note;
  bool pass() const { return !applicable || error <= tol; }
};

std::string format_check(const CheckLine& c);
bool all_pass(const std::vector<CheckLine>& lines);

// inertia, mdot_qdot, stretch, bend, shear, friction, yarn_collision, gravity, wind
const std::vector<std::string>& force_model_names();

struct JacobianCheckOptions {
  int min_samples = 100;  // element evaluations per force model
  std::uint64_t seed = 1;
  std::string flip;       // force model whose analytic Jacobians are negated
};

// Smooth models are held to 1e-5, the contact models (shear, friction,
// yarn collision) to 1e-4.
std::vector<CheckLine> check_force_jacobians(const FabricSpec& spec, const ModelConstants& constants,
                                             const VecX& theta, const JacobianCheckOptions& opt = {});

// F = −∂V/∂q for stretch, bend, gravity, yarn collision and shear (normal
// load fixed), tolerance 1e-5.
std::vector<CheckLine> check_energy_consistency(const FabricSpec& spec, const ModelConstants& constants,
                                                const VecX& theta, const JacobianCheckOptions& opt = {});

struct RolloutCheckOptions {
  double tol = 1e-3;
  bool controls = true;
  AdjointOptions adjoint;
};

// Nodes that receive control forces: the scenario's corners when it has
// them, otherwise the unpinned corners topped up with mid-edge nodes to four.
std::vector<int> control_nodes(const Scenario& sc, const Fabric& f);

// Adjoint gradient of the trajectory loss over the scenario's steps against
// central differences (best of a three-step sweep), for every parameter and,
// optionally, every control value. The target comes from a rollout with
// parameters moved by up to 10% and the same controls.
std::vector<CheckLine> check_rollout_gradient(const Experiment& ex, const VecX& theta,
                                              const RolloutCheckOptions& opt = {});

}  // namespace yarnsim
