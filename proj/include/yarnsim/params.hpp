#pragma once
// Learnable physical parameters, fixed model constants and the bounded
// sigmoid reparameterization used for training.

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "yarnsim/fabric.hpp"

namespace yarnsim {

// Flat parameter vector: densities, stretch moduli, bend moduli (one per
// material each), then the shared shear modulus and friction coefficient.
struct ParamLayout {
  int materials = 2;

  int density(int m) const { return m; }
  int stretch(int m) const { return materials + m; }
  int bend(int m) const { return 2 * materials + m; }
  int shear() const { return 3 * materials; }
  int friction() const { return 3 * materials + 1; }
  int size() const { return 3 * materials + 2; }
  std::string name(int k) const;
};

VecX params_from_spec(const FabricSpec& spec, double shear_modulus, double friction_coeff);

struct WindParams {
  Vec3 velocity{0.0, 5.0, 0.0};
  double density = 2.0;
  double drag = 0.5;
};

struct ForceToggles {
  bool inertia = true;
  bool stretch = true;
  bool bend = true;
  bool shear = true;
  bool friction = true;
  bool collision = true;
  bool gravity = true;
  bool wind = true;
};

struct ModelConstants {
  double friction_stiffness = 1000.0;  // anchor spring k_f
  double friction_damping = 1000.0;    // d_f
  double friction_sharpness = 1000.0;  // p in tanh(p x)
  double shear_exponent = 3.0;
  double shear_sigma = 0.6;
  double shear_rest_angle = std::numbers::pi / 2.0;
  double collision_stiffness = 1.0;
  Vec3 gravity{0.0, 0.0, -9.8};
  WindParams wind;
  ForceToggles on;
};

struct Bound {
  double lo = 0.0;
  double hi = 1.0;
  double range() const { return hi - lo; }
};

inline double sigmoid(double y) { return 1.0 / (1.0 + std::exp(-y)); }

struct Reparam {
  double value;
  double deriv;
};

// ω = a·sigmoid(y) + b with a = range, b = lower bound.
inline Reparam reparam(double y, double a, double b) {
  const double s = sigmoid(y);
  return {a * s + b, a * s * (1.0 - s)};
}

// Inverse map; ω must lie strictly inside (b, a + b).
double reparam_inverse(double omega, double a, double b);

// Default bounds: density [0.001, 0.003], stretch [0, 8e5] for the first
// material and [0, 3e5] otherwise, bend [5e-5, 1.8e-4], shear [0, 1200],
// friction [0, 1].
std::vector<Bound> default_bounds(const ParamLayout& pl);

}  // namespace yarnsim
