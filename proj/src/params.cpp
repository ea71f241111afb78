#include "yarnsim/params.hpp"

#include <stdexcept>

namespace yarnsim {

std::string ParamLayout::name(int k) const {
  if (k < materials) return "density" + std::to_string(k + 1);
  if (k < 2 * materials) return "stretch" + std::to_string(k - materials + 1);
  if (k < 3 * materials) return "bend" + std::to_string(k - 2 * materials + 1);
  if (k == shear()) return "shear";
  if (k == friction()) return "friction";
  throw std::out_of_range("parameter index out of range");
}

VecX params_from_spec(const FabricSpec& spec, double shear_modulus, double friction_coeff) {
  ParamLayout pl{static_cast<int>(spec.materials.size())};
  VecX th(pl.size());
  for (int m = 0; m < pl.materials; ++m) {
    th[pl.density(m)] = spec.materials[m].density;
    th[pl.stretch(m)] = spec.materials[m].stretch_modulus;
    th[pl.bend(m)] = spec.materials[m].bend_modulus;
  }
  th[pl.shear()] = shear_modulus;
  th[pl.friction()] = friction_coeff;
  return th;
}

double reparam_inverse(double omega, double a, double b) {
  const double s = (omega - b) / a;
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("value outside the open reparameterization range");
  return std::log(s / (1.0 - s));
}

std::vector<Bound> default_bounds(const ParamLayout& pl) {
  std::vector<Bound> b(pl.size());
  for (int m = 0; m < pl.materials; ++m) {
    b[pl.density(m)] = {0.001, 0.003};
    b[pl.stretch(m)] = {0.0, m == 0 ? 8e5 : 3e5};
    b[pl.bend(m)] = {5e-5, 1.8e-4};
  }
  b[pl.shear()] = {0.0, 1200.0};
  b[pl.friction()] = {0.0, 1.0};
  return b;
}

}  // namespace yarnsim
