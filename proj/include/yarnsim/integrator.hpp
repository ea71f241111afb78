#pragma once
// Implicit Euler stepping: assemble (M − h²K − hD) q̇' = h(F − D q̇) + M q̇,
// solve with a sparse LU, advance positions, project onto obstacles and drag
// the friction anchors.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <memory>
#include <vector>

#include "yarnsim/elements.hpp"

namespace yarnsim {

using SpMat = Eigen::SparseMatrix<double>;
using SparseLUSolver = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

struct Obstacle {
  enum class Kind { Plane, Sphere };
  Kind kind = Kind::Plane;
  Vec3 point = Vec3::Zero();         // plane point or sphere center
  Vec3 normal = Vec3::UnitZ();       // plane normal (unit)
  double radius = 0.0;               // sphere radius

  static Obstacle plane(const Vec3& p, const Vec3& n) { return {Kind::Plane, p, n.normalized(), 0.0}; }
  static Obstacle sphere(const Vec3& c, double r) { return {Kind::Sphere, c, Vec3::UnitZ(), r}; }
};

struct Constraints {
  std::vector<int> pinned;  // nodes whose positions are held fixed
  std::vector<Obstacle> obstacles;
  double obstacle_friction = 0.0;  // tangential velocity kept: 1 − friction, clamped to [0, 1]
};

// Projection of one node onto one obstacle. Templated so the reverse sweep
// can differentiate it.
template <class T>
bool project_node(V3<T>& x, V3<T>& v, const Obstacle& ob, double friction) {
  V3<T> n;
  if (ob.kind == Obstacle::Kind::Plane) {
    const T s = ob.normal.cast<T>().dot(x - ob.point.cast<T>());
    if (!(s < 0.0)) return false;
    n = ob.normal.cast<T>();
    x -= s * n;
  } else {
    const V3<T> d = x - ob.point.cast<T>();
    const T l = sqrt(d.squaredNorm());
    if (!(l < ob.radius) || !(l > 0.0)) return false;
    n = d / l;
    x = ob.point.cast<T>() + ob.radius * n;
  }
  const T vn = n.dot(v);
  if (vn < 0.0) v -= vn * n;
  const double keep = std::clamp(1.0 - friction, 0.0, 1.0);
  const T vn2 = n.dot(v);
  v = vn2 * n + keep * (v - vn2 * n);
  return true;
}

struct Assembly {
  SpMat A;
  VecX b;
  VecX Fn;  // contact normal force per node (0 off crossings)
  double potential = 0.0;
};

struct StepTape {
  State before;
  SpMat A;
  VecX b;
  VecX solution;  // q̇ before obstacle projection
  VecX Fn;
  std::shared_ptr<SparseLUSolver> lu;
  int frame = 0;
  double residual = 0.0;  // relative ‖A q̇ − b‖ / ‖b‖
};

struct StepInfo {
  double residual = 0.0;
  double min_gap = 0.0;
};

class Simulator {
 public:
  Simulator(const ForceModel& model, Constraints cons, double h);

  const ForceModel& model() const { return *model_; }
  const Constraints& constraints() const { return cons_; }
  double h() const { return h_; }
  const std::vector<char>& pinned_dofs() const { return pinned_dof_; }

  Assembly assemble(const State& s, const VecX& theta, const ControlForces* ctrl = nullptr, int frame = 0) const;

  // Throws NumericalError if the residual contract ‖A x − b‖ ≤ 1e−9‖b‖ fails.
  VecX solve(const SpMat& A, const VecX& b, std::shared_ptr<SparseLUSolver>* keep = nullptr,
             double* residual = nullptr) const;

  State step(const State& s, const VecX& theta, const ControlForces* ctrl = nullptr, int frame = 0,
             StepTape* tape = nullptr, StepInfo* info = nullptr) const;

  std::vector<State> simulate(const State& init, const VecX& theta, int n_steps, const ControlForces* ctrl = nullptr,
                              std::vector<StepTape>* tape = nullptr, std::vector<StepInfo>* info = nullptr) const;

  void project_obstacles(State& s) const;

  // Kinetic energy ½ q̇ᵀ M q̇ and total potential at a state.
  double kinetic_energy(const State& s, const VecX& theta) const;
  double potential_energy(const State& s, const VecX& theta) const;

 private:
  const ForceModel* model_;
  Constraints cons_;
  double h_;
  std::vector<char> pinned_dof_;
};

}  // namespace yarnsim
