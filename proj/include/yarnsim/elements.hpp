#pragma once
// Force elements: each one gathers a small set of local coordinates from the
// global state and returns its local force, stiffness (dF/dq), damping
// (dF/dq̇) and mass contributions. Evaluation is templated on the scalar so
// the same code runs in double for the forward pass and on dual numbers for
// the reverse sweep.

#include <Eigen/Core>
#include <vector>

#include "yarnsim/dual.hpp"
#include "yarnsim/external.hpp"
#include "yarnsim/fabric.hpp"
#include "yarnsim/interaction.hpp"
#include "yarnsim/params.hpp"

namespace yarnsim {

inline constexpr int kLanes = 16;
using DualL = Dual<kLanes>;

template <class T> using VecXT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T> using MatXT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

enum class ElementKind { Segment, Bend, Crossing, Wind };

// Local coordinate k reads global DoF dof[k], or the constant fixed[k] when
// dof[k] < 0 (Eulerian coordinates of boundary nodes, missing stencil nodes).
struct LocalMap {
  std::vector<int> dof;
  std::vector<double> fixed;
  std::vector<char> velocity_used;  // local velocities the element reads
  int size() const { return static_cast<int>(dof.size()); }
};

struct Element {
  ElementKind kind = ElementKind::Segment;
  int id = 0;  // segment / triple / crossing node / triangle index
  LocalMap map;
  std::vector<int> params;  // parameter indices the element depends on
};

template <class T>
struct LocalInputs {
  VecXT<T> q;
  VecXT<T> qdot;
  T anchor_u = T(0.0), anchor_v = T(0.0);
  VecXT<T> theta;
};

template <class T>
struct LocalForces {
  VecXT<T> F;
  MatXT<T> K;  // dF/dq
  MatXT<T> D;  // dF/dq̇ (empty if none)
  MatXT<T> M;  // mass (empty if none)
  T V = T(0.0);   // potential energy carried by the element
  T Fn = T(0.0);  // contact normal force (crossing elements)
};

struct CrossingOptions {
  const Vec3* frozen_normal = nullptr;  // replaces the fitted normal when set
};

class ForceModel {
 public:
  ForceModel(const Fabric& fabric, ModelConstants constants);

  const Fabric& fabric() const { return *fabric_; }
  const ModelConstants& constants() const { return c_; }
  ModelConstants& constants() { return c_; }
  ParamLayout param_layout() const { return {static_cast<int>(fabric_->spec().materials.size())}; }
  const std::vector<Element>& elements() const { return elements_; }

  template <class T>
  LocalInputs<T> gather(const Element& e, const VecX& q, const VecX& qdot, const VecX& anchors,
                        const VecX& theta) const;

  template <class T>
  LocalForces<T> evaluate(const Element& e, const LocalInputs<T>& in, const CrossingOptions& opt = {}) const;

  ShearParams shear_params(int node) const;
  FrictionParams friction_params(double mu) const;

 private:
  template <class T> LocalForces<T> eval_segment(const Element& e, const LocalInputs<T>& in) const;
  template <class T> LocalForces<T> eval_bend(const Element& e, const LocalInputs<T>& in) const;
  template <class T> LocalForces<T> eval_crossing(const Element& e, const LocalInputs<T>& in,
                                                  const CrossingOptions& opt) const;
  template <class T> LocalForces<T> eval_wind(const Element& e, const LocalInputs<T>& in) const;

  const Fabric* fabric_;
  ModelConstants c_;
  std::vector<Element> elements_;
};

// Stencil slot layout of a crossing element: 9 nodes of 5 local coordinates
// each (x, y, z, u, v). Slot 0 is the crossing; slots 1..4 are the warp
// neighbours at offsets -2, -1, +1, +2 and slots 5..8 the weft neighbours.
inline constexpr int kCrossingSlots = 9;
std::array<int, kCrossingSlots> crossing_stencil(const Fabric& f, int node);

}  // namespace yarnsim
