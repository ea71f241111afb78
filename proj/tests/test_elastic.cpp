#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "yarnsim/elastic.hpp"

using namespace yarnsim;
using testutil::fd_check;
using V8 = Vec8<double>;
using V12 = Vec12<double>;
using Vec3 = Eigen::Vector3d;

namespace {

constexpr double kL = 1e-3;
constexpr double kR = 2e-4;
const double kStretch = 5e5 * std::numbers::pi * kR * kR;
const double kBend = 1.4e-4 * std::numbers::pi * kR * kR;

V8 random_segment(testutil::Rng& r) {
  V8 s;
  const Vec3 x0 = r.uniform_vec(3, -kL, kL);
  s.segment<3>(0) = x0;
  s.segment<3>(3) = x0 + Vec3(r.uniform_vec(3, -1, 1).normalized()) * kL * r.uniform(0.7, 1.3);
  s[6] = r.uniform(0, 3 * kL);
  s[7] = s[6] + kL * r.uniform(0.7, 1.3);
  return s;
}

// Triple with a prescribed bend angle θ at the centre.
V12 random_triple(testutil::Rng& r, double theta) {
  const Vec3 xc = r.uniform_vec(3, -kL, kL);
  const Vec3 a = Vec3(r.uniform_vec(3, -1, 1)).normalized();
  Vec3 perp = a.cross(Vec3(r.uniform_vec(3, -1, 1))).normalized();
  const Vec3 b = -(std::cos(theta) * a + std::sin(theta) * perp);
  V12 t;
  t.segment<3>(0) = xc + b * kL * r.uniform(0.8, 1.2);
  t.segment<3>(3) = xc;
  t.segment<3>(6) = xc + a * kL * r.uniform(0.8, 1.2);
  t[9] = r.uniform(0, kL);
  t[10] = t[9] + kL * r.uniform(0.8, 1.2);
  t[11] = t[10] + kL * r.uniform(0.8, 1.2);
  return t;
}

}  // namespace

TEST(Stretch, RestSegmentIsUnloaded) {
  V8 s;
  s << 0, 0, 0, kL, 0, 0, 0, kL;
  const auto sr = stretch_force(s, kStretch);
  EXPECT_EQ(sr.V, 0.0);
  EXPECT_TRUE(sr.F.isZero(1e-20));
}

TEST(Stretch, OnePercentElongation) {
  V8 s;
  s << 0, 0, 0, 1.01 * kL, 0, 0, 0, kL;
  const auto sr = stretch_force(s, kStretch);
  EXPECT_NEAR(sr.F.segment<3>(3).norm(), kStretch * 0.01, 1e-15);
  EXPECT_NEAR(sr.F[3], -kStretch * 0.01, 1e-15);
  EXPECT_NEAR(sr.F[7], 0.5 * kStretch * (1.01 * 1.01 - 1.0), 1e-15);
}

TEST(Stretch, ForceIsNegativeEnergyGradientAndJacobianMatches) {
  testutil::Rng r(11);
  for (int k = 0; k < 100; ++k) {
    const V8 s = random_segment(r);
    const auto sr = stretch_force(s, kStretch);
    auto V = [&](const Eigen::VectorXd& x) { return testutil::scalar_as_vec(stretch_force(V8(x), kStretch).V); };
    auto F = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(stretch_force(V8(x), kStretch).F); };
    EXPECT_LE(fd_check(V, s, -sr.F.transpose(), kL), 1e-5);
    EXPECT_LE(fd_check(F, s, sr.K, kL), 1e-5);
    EXPECT_TRUE((sr.F.segment<3>(0) + sr.F.segment<3>(3)).isZero(1e-18));
  }
}

TEST(Stretch, EnergyInvariantUnderRigidMotion) {
  testutil::Rng r(12);
  const V8 s = random_segment(r);
  const Eigen::Matrix3d Rm = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  V8 t = s;
  t.segment<3>(0) = Rm * s.segment<3>(0) + Vec3(0.1, -0.2, 0.3);
  t.segment<3>(3) = Rm * s.segment<3>(3) + Vec3(0.1, -0.2, 0.3);
  EXPECT_NEAR(stretch_force(s, kStretch).V, stretch_force(t, kStretch).V, 1e-15);
}

TEST(Stretch, CoincidentEndsThrow) {
  V8 s;
  s << 0, 0, 0, 0, 0, 0, 0, kL;
  EXPECT_THROW(stretch_force(s, kStretch), NumericalError);
}

TEST(Bend, StraightYarnCarriesNothing) {
  V12 t;
  t << -kL, 0, 0, 0, 0, 0, kL, 0, 0, 0, kL, 2 * kL;
  const auto br = bend_force(t, kBend);
  EXPECT_EQ(br.V, 0.0);
  EXPECT_TRUE(br.F.isZero(1e-20));
}

TEST(Bend, ForceIsNegativeEnergyGradient) {
  testutil::Rng r(13);
  for (int k = 0; k < 100; ++k) {
    const double theta = k < 10 ? r.uniform(1e-4, 1e-2) : r.uniform(0.05, 2.8);
    const V12 t = random_triple(r, theta);
    const auto br = bend_force(t, kBend);
    EXPECT_NEAR(br.theta, theta, 1e-9);
    auto V = [&](const Eigen::VectorXd& x) { return testutil::scalar_as_vec(bend_force(V12(x), kBend).V); };
    EXPECT_LE(fd_check(V, t, -br.F.transpose(), kL), 1e-5);
    EXPECT_LE((br.F.segment<3>(0) + br.F.segment<3>(3) + br.F.segment<3>(6)).norm(), 1e-12 * br.F.norm() + 1e-300);
  }
}

TEST(Bend, JacobianMatchesFiniteDifferences) {
  testutil::Rng r(14);
  for (int k = 0; k < 100; ++k) {
    const V12 t = random_triple(r, r.uniform(0.05, 2.8));
    const auto br = bend_force(t, kBend);
    auto F = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(bend_force(V12(x), kBend).F); };
    EXPECT_LE(fd_check(F, t, br.K, kL), 1e-4);
  }
}

TEST(Bend, JacobianNearStraightMatchesFiniteDifferences) {
  testutil::Rng r(15);
  for (int k = 0; k < 20; ++k) {
    const V12 t = random_triple(r, r.uniform(1e-5, 1e-2));
    const auto br = bend_force(t, kBend);
    auto F = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(bend_force(V12(x), kBend).F); };
    EXPECT_LE(fd_check(F, t, br.K, kL), 1e-4);
  }
}

TEST(Bend, FoldedYarnThrows) {
  V12 t;
  t << kL, 0, 0, 0, 0, 0, kL, 1e-12, 0, 0, kL, 2 * kL;
  EXPECT_THROW(bend_force(t, kBend), NumericalError);
}
