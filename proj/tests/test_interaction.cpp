#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "yarnsim/interaction.hpp"

using namespace yarnsim;
using testutil::fd_check;
using Vec3 = Eigen::Vector3d;
using V9d = V9<double>;

namespace {

constexpr double kL = 1e-3;
constexpr double kR = 2e-4;
constexpr double kPi = std::numbers::pi;

struct FrictionInput {
  double delta, Fn, Fu, vel, mu;
};

Eigen::VectorXd friction_vec(const FrictionInput& a, const FrictionParams& fp) {
  const auto r = friction_force(a.delta, a.Fn, a.Fu, a.vel, a.mu, fp.stiffness, fp.damping, fp.sharpness);
  return testutil::scalar_as_vec(r.F);
}

// Crossing with edges of random length and a prescribed angle φ, randomly
// rotated and translated.
std::array<Vec3, 3> crossing_points(testutil::Rng& r, double phi) {
  const Eigen::Matrix3d Rm =
      Eigen::AngleAxisd(r.uniform(0, 2 * kPi), Vec3(r.uniform_vec(3, -1, 1)).normalized()).toRotationMatrix();
  const Vec3 x0 = r.uniform_vec(3, -kL, kL);
  const Vec3 x1 = x0 + Rm * Vec3(kL * r.uniform(0.8, 1.2), 0, 0);
  const Vec3 x3 = x0 + Rm * Vec3(std::cos(phi), std::sin(phi), 0) * kL * r.uniform(0.8, 1.2);
  return {x0, x1, x3};
}

V9d stack(const std::array<Vec3, 3>& p) {
  V9d s;
  s << p[0], p[1], p[2];
  return s;
}

ShearParams shear_params() {
  ShearParams sp;
  sp.R = kR;
  sp.L = kL;
  return sp;
}

// Plane fit by SVD of the centred point matrix.
Vec3 svd_plane_normal(const std::array<Vec3, 5>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= 5.0;
  Eigen::Matrix<double, 5, 3> P;
  for (int k = 0; k < 5; ++k) P.row(k) = (pts[k] - mean).transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 3>> svd(P, Eigen::ComputeFullV);
  return svd.matrixV().col(2);
}

std::array<Vec3, 5> flat_stencil() {
  return {Vec3(0, 0, 0), Vec3(0, -kL, 0), Vec3(0, kL, 0), Vec3(-kL, 0, 0), Vec3(kL, 0, 0)};
}

}  // namespace

// ---------------------------------------------------------------- friction

TEST(Friction, ZeroLoadAtAnchorGivesZero) {
  const FrictionParams fp;
  const auto r = friction_force(0.0, 0.3, 0.0, 0.0, 0.5, fp.stiffness, fp.damping, fp.sharpness);
  EXPECT_EQ(r.F, 0.0);
}

TEST(Friction, DeepKineticRegimeIsCoulombPlusDamping) {
  const FrictionParams fp;
  const double Fn = 0.2, mu = 0.5, vel = 1e-3;
  // Large elongation and a load well beyond μF_n.
  const auto r = friction_force(0.05, Fn, 0.5, vel, mu, fp.stiffness, fp.damping, fp.sharpness);
  EXPECT_NEAR(r.F, -mu * Fn - fp.damping * vel, 1e-12);
}

TEST(Friction, StaticRegimeIsSpringMinusDamping) {
  const FrictionParams fp;
  const double Fn = 0.4, mu = 0.5, Fu = 0.0, vel = 2e-4;
  for (double delta : {1e-5, -3e-5, 5e-5}) {
    const auto r = friction_force(delta, Fn, Fu, vel, mu, fp.stiffness, fp.damping, fp.sharpness);
    const double bound = std::abs(mu * Fn * (1.0 - std::tanh(fp.sharpness * (mu * Fn - Fu))));
    EXPECT_LE(std::abs(r.F - (-fp.stiffness * delta - fp.damping * vel)), bound + 1e-15);
  }
}

TEST(Friction, PartialsMatchFiniteDifferences) {
  const FrictionParams fp;
  testutil::Rng r(21);
  for (int k = 0; k < 100; ++k) {
    FrictionInput a{r.uniform(-2e-3, 2e-3), r.uniform(0, 0.5), r.uniform(-0.5, 0.5), r.uniform(-0.01, 0.01),
                    r.uniform(0.1, 1.0)};
    const auto res = friction_force(a.delta, a.Fn, a.Fu, a.vel, a.mu, fp.stiffness, fp.damping, fp.sharpness);
    Eigen::VectorXd x(5);
    x << a.delta, a.Fn, a.Fu, a.vel, a.mu;
    Eigen::MatrixXd J(1, 5);
    J << res.d_delta, res.d_normal, res.d_load, res.d_vel, res.d_mu;
    auto f = [&](const Eigen::VectorXd& y) { return friction_vec({y[0], y[1], y[2], y[3], y[4]}, fp); };
    EXPECT_LE(fd_check(f, x, J, 1e-3), 1e-6);
  }
}

TEST(Friction, SmoothAtBreakawayLoad) {
  const FrictionParams fp;
  const double Fn = 0.3, mu = 0.5, delta = 1e-3;
  const double Fu = mu * Fn;
  const auto res = friction_force(delta, Fn, Fu, 0.0, mu, fp.stiffness, fp.damping, fp.sharpness);
  double prev = 1e300;
  for (double h : {1e-4, 1e-5, 1e-6}) {
    const double fd = (friction_force(delta, Fn, Fu + h, 0.0, mu, fp.stiffness, fp.damping, fp.sharpness).F -
                       friction_force(delta, Fn, Fu - h, 0.0, mu, fp.stiffness, fp.damping, fp.sharpness).F) /
                      (2 * h);
    const double err = std::abs(fd - res.d_load);
    EXPECT_LE(err, prev + 1e-12);
    prev = err;
  }
  EXPECT_LE(prev, 1e-6 * std::abs(res.d_load) + 1e-12);
}

TEST(Friction, BoundedByBranchEnvelopes) {
  const FrictionParams fp;
  testutil::Rng r(22);
  for (int k = 0; k < 1000; ++k) {
    const double delta = r.uniform(-5e-3, 5e-3), Fn = r.uniform(0, 1), Fu = r.uniform(-1, 1),
                 vel = r.uniform(-0.1, 0.1), mu = r.uniform(0, 1);
    const auto res = friction_force(delta, Fn, Fu, vel, mu, fp.stiffness, fp.damping, fp.sharpness);
    EXPECT_LE(std::abs(res.F + fp.damping * vel), mu * Fn + fp.stiffness * std::abs(delta) + 1e-12);
  }
}

TEST(Friction, DualNumbersAgreeWithAnalyticPartials) {
  using D = Dual<2>;
  const FrictionParams fp;
  const D delta = D::variable(3e-4, 0), Fn = D::variable(0.2, 1);
  const auto res = friction_force(delta, Fn, D(0.05), D(1e-3), D(0.4), fp.stiffness, fp.damping, fp.sharpness);
  EXPECT_NEAR(res.F.d[0], res.d_delta.v, 1e-9 * std::abs(res.d_delta.v));
  EXPECT_NEAR(res.F.d[1], res.d_normal.v, 1e-9 * std::abs(res.d_normal.v) + 1e-15);
}

TEST(Anchor, StaysPutWithoutSlip) {
  EXPECT_EQ(update_anchor(1.0001e-3, 1e-3, 0.5, 0.5, 1000.0), 1e-3);
}

TEST(Anchor, TrailsAtBreakawayElongation) {
  const double Fn = 0.4, mu = 0.5, kf = 1000.0, slip = mu * Fn / kf;
  EXPECT_NEAR(update_anchor(1e-3 + 10 * slip, 1e-3, Fn, mu, kf), 1e-3 + 9 * slip, 1e-18);
  EXPECT_NEAR(update_anchor(1e-3 - 10 * slip, 1e-3, Fn, mu, kf), 1e-3 - 9 * slip, 1e-18);
}

TEST(Anchor, FollowsExactlyWithoutNormalForce) {
  EXPECT_EQ(update_anchor(2.5e-3, 1e-3, 0.0, 0.5, 1000.0), 2.5e-3);
}

// ---------------------------------------------------------------- contact

TEST(Contact, FlatGridNormalSignFollowsPattern) {
  const auto pts = flat_stencil();
  const Vec3 a = contact_normal(pts, Crossing::WeftOver), b = contact_normal(pts, Crossing::WarpOver);
  EXPECT_NEAR(std::abs(a.z()), 1.0, 1e-15);
  EXPECT_TRUE(a.isApprox(-b));
  // (right − left) × (down − up) = (0, 2L, 0) × (2L, 0, 0) points along −z.
  EXPECT_LT(a.z(), 0.0);
}

TEST(Contact, TiltedPlaneIsExact) {
  testutil::Rng r(23);
  const Vec3 u = Vec3(r.uniform_vec(3, -1, 1)).normalized();
  const Vec3 w = u.cross(Vec3(r.uniform_vec(3, -1, 1))).normalized();
  std::array<Vec3, 5> pts;
  for (auto& p : pts) p = Vec3(1, 2, 3) * kL + u * r.uniform(-kL, kL) + w * r.uniform(-kL, kL);
  const Vec3 n = contact_normal(pts, Crossing::WeftOver);
  EXPECT_NEAR(n.norm(), 1.0, 1e-14);
  for (const auto& p : pts) EXPECT_LE(std::abs(n.dot(p - pts[0])), 1e-12 * kL);
}

TEST(Contact, MatchesSvdPlaneFit) {
  testutil::Rng r(24);
  for (int k = 0; k < 100; ++k) {
    auto pts = flat_stencil();
    for (auto& p : pts) p += Vec3(r.uniform_vec(3, -0.2 * kL, 0.2 * kL));
    const Vec3 n = contact_normal(pts, Crossing::WeftOver);
    const Vec3 ref = svd_plane_normal(pts);
    EXPECT_LE(std::min((n - ref).norm(), (n + ref).norm()), 1e-10);
  }
}

TEST(Contact, NormalTangentMatchesFiniteDifferences) {
  using D = Dual<15>;
  testutil::Rng r(25);
  for (int k = 0; k < 20; ++k) {
    auto pts = flat_stencil();
    for (auto& p : pts) p += Vec3(r.uniform_vec(3, -0.2 * kL, 0.2 * kL));
    std::array<V3<D>, 5> dp;
    Eigen::VectorXd x(15);
    for (int a = 0; a < 5; ++a)
      for (int c = 0; c < 3; ++c) {
        dp[a][c] = D::variable(pts[a][c], 3 * a + c);
        x[3 * a + c] = pts[a][c];
      }
    const auto nd = contact_normal(dp, Crossing::WarpOver);
    Eigen::MatrixXd J(3, 15);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 15; ++j) J(i, j) = nd[i].d[j];
    auto f = [](const Eigen::VectorXd& y) {
      std::array<Vec3, 5> q;
      for (int a = 0; a < 5; ++a) q[a] = y.segment<3>(3 * a);
      return Eigen::VectorXd(contact_normal(q, Crossing::WarpOver));
    };
    EXPECT_LE(fd_check(f, x, J, kL), 1e-6);
  }
}

TEST(Contact, CollinearPointsThrow) {
  std::array<Vec3, 5> pts;
  for (int k = 0; k < 5; ++k) pts[k] = Vec3(k * kL, 0, 0);
  EXPECT_THROW(contact_normal(pts, Crossing::WeftOver), NumericalError);
}

TEST(Contact, NormalForceIsHalfTheNetPush) {
  const Vec3 n(0, 0, 1);
  const double eps = 0.01;
  EXPECT_NEAR(contact_force(n, Vec3(0.3, 0, eps), Vec3(0.3, 0, -eps)), eps, 1e-18);
  EXPECT_EQ(contact_force(n, Vec3(0, 0, -eps), Vec3(0, 0, eps)), 0.0);
  EXPECT_EQ(contact_force(n, Vec3(Vec3::Zero()), Vec3(Vec3::Zero())), 0.0);
}

TEST(Contact, NormalForceIsNeverNegative) {
  testutil::Rng r(26);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 n = Vec3(r.uniform_vec(3, -1, 1)).normalized();
    EXPECT_GE(contact_force(n, Vec3(r.uniform_vec(3, -1, 1)), Vec3(r.uniform_vec(3, -1, 1))), 0.0);
  }
}

// ---------------------------------------------------------------- shear

TEST(Shear, LockAngleFromGeometry) {
  EXPECT_NEAR(shear_params().lock_angle(), 2.0 * std::asin(0.2), 1e-15);
}

TEST(Shear, StiffnessAtRestAngle) {
  const ShearParams sp = shear_params();
  const double S = 1000.0, Fn = 0.3, pb = kPi / 2;
  testutil::Rng r(27);
  const auto p = crossing_points(r, pb);
  const auto ks = shear_stiffness(p[0], p[1], p[2], Fn, sp, S);
  const double expect =
      0.5 * (Fn + 1) * S * kPi * kR * kR * (1.0 + std::tanh(pb * (pb - sp.lock_angle()) / (sp.sigma * sp.sigma)));
  EXPECT_NEAR(ks.ks, expect, 1e-12 * expect);
}

TEST(Shear, StiffnessAtLockAngle) {
  const ShearParams sp = shear_params();
  const double S = 1000.0, Fn = 0.0, pl = sp.lock_angle();
  const auto lf = shear_lock_factor(pl, sp);
  const double gam = (std::sqrt(2.0) * kL - 2.0 * std::sin(pl / 2) * kL) / kR;
  EXPECT_NEAR(lf.h, 1.0 + std::pow(gam, 3.0), 1e-12);
  EXPECT_NEAR(shear_base_stiffness(Fn, sp, S) * lf.h, 0.5 * S * kPi * kR * kR * (1 + std::pow(gam, 3.0)), 1e-15);
}

TEST(Shear, LockFactorDerivativesMatchFiniteDifferences) {
  const ShearParams sp = shear_params();
  testutil::Rng r(28);
  const double step = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const double phi = r.uniform(sp.lock_angle() / 2, kPi - 0.1);
    const auto lf = shear_lock_factor(phi, sp);
    const auto hp = shear_lock_factor(phi + step, sp), hm = shear_lock_factor(phi - step, sp);
    // Absolute error scaled by the factor itself: h' and h'' pass through zero.
    const double scale = std::abs(lf.h) + std::abs(lf.dh) + std::abs(lf.ddh);
    EXPECT_LE(std::abs((hp.h - hm.h) / (2 * step) - lf.dh), 1e-6 * scale);
    EXPECT_LE(std::abs((hp.dh - hm.dh) / (2 * step) - lf.ddh), 1e-6 * scale);
  }
}

TEST(Shear, StiffnessGradientMatchesFiniteDifferences) {
  const ShearParams sp = shear_params();
  testutil::Rng r(29);
  for (int k = 0; k < 100; ++k) {
    const auto p = crossing_points(r, r.uniform(sp.lock_angle() / 2, kPi - 0.1));
    const double Fn = r.uniform(0, 1), S = 1000.0;
    const auto ks = shear_stiffness(p[0], p[1], p[2], Fn, sp, S);
    auto f = [&](const Eigen::VectorXd& x) {
      return testutil::scalar_as_vec(
          shear_stiffness<double>(x.segment<3>(0), x.segment<3>(3), x.segment<3>(6), Fn, sp, S).ks);
    };
    EXPECT_LE(fd_check(f, stack(p), ks.grad.transpose(), kL), 1e-5);
  }
}

TEST(Shear, RestAngleCarriesNoForce) {
  const ShearParams sp = shear_params();
  testutil::Rng r(30);
  const auto p = crossing_points(r, kPi / 2);
  const auto sr = shear_force(p[0], p[1], p[2], 0.2, sp, 1000.0);
  EXPECT_NEAR(sr.V, 0.0, 1e-25);
  EXPECT_LE(sr.F.norm(), 1e-18);
}

TEST(Shear, ForceIsNegativeEnergyGradientAndBalanced) {
  const ShearParams sp = shear_params();
  testutil::Rng r(31);
  for (int k = 0; k < 100; ++k) {
    const auto p = crossing_points(r, r.uniform(sp.lock_angle() / 2, kPi - 0.1));
    const double Fn = r.uniform(0, 1), S = 1000.0;
    const auto sr = shear_force(p[0], p[1], p[2], Fn, sp, S);
    EXPECT_GE(sr.V, 0.0);
    auto V = [&](const Eigen::VectorXd& x) {
      return testutil::scalar_as_vec(
          shear_force<double>(x.segment<3>(0), x.segment<3>(3), x.segment<3>(6), Fn, sp, S).V);
    };
    EXPECT_LE(fd_check(V, stack(p), -sr.F.transpose(), kL), 1e-5);
    EXPECT_LE((sr.F.segment<3>(0) + sr.F.segment<3>(3) + sr.F.segment<3>(6)).norm(), 1e-10 * sr.F.norm() + 1e-300);
  }
}

TEST(Shear, JacobianMatchesFiniteDifferences) {
  const ShearParams sp = shear_params();
  testutil::Rng r(32);
  for (int k = 0; k < 100; ++k) {
    const auto p = crossing_points(r, r.uniform(sp.lock_angle() / 2, kPi - 0.1));
    const double Fn = r.uniform(0, 1), S = 1000.0;
    const auto sr = shear_force(p[0], p[1], p[2], Fn, sp, S);
    auto F = [&](const Eigen::VectorXd& x) {
      return Eigen::VectorXd(shear_force<double>(x.segment<3>(0), x.segment<3>(3), x.segment<3>(6), Fn, sp, S).F);
    };
    EXPECT_LE(fd_check(F, stack(p), sr.K, kL), 1e-4);
    auto Fn_map = [&](const Eigen::VectorXd& x) {
      return Eigen::VectorXd(shear_force<double>(p[0], p[1], p[2], x[0], sp, S).F);
    };
    EXPECT_LE(fd_check(Fn_map, testutil::scalar_as_vec(Fn), sr.dF_dFn, 1.0), 1e-6);
  }
}

TEST(Shear, DegenerateAnglesThrow) {
  const ShearParams sp = shear_params();
  const Vec3 x0 = Vec3::Zero(), x1(kL, 0, 0);
  EXPECT_THROW(shear_force(x0, x1, Vec3(2 * kL, 0, 0), 0.0, sp, 1000.0), NumericalError);
  EXPECT_THROW(shear_force(x0, x1, Vec3(-kL, 0, 0), 0.0, sp, 1000.0), NumericalError);
  EXPECT_THROW(shear_force(x0, x0, Vec3(0, kL, 0), 0.0, sp, 1000.0), NumericalError);
}

// ---------------------------------------------------------------- penalty

TEST(Penalty, InactiveBeyondSeparation) {
  const auto r = yarn_collision_force(0.0, kL, 1.0, kL, 2 * kR);
  EXPECT_EQ(r.V, 0.0);
  EXPECT_EQ(r.F0, 0.0);
  EXPECT_EQ(r.F1, 0.0);
  EXPECT_EQ(r.k, 0.0);
}

TEST(Penalty, HalfSeparationPushesApart) {
  const double d = 4 * kR, kc = 1.0;
  const auto r = yarn_collision_force(1e-3, 1e-3 + d / 2, kc, kL, d);
  EXPECT_NEAR(r.V, 0.5 * kc * kL * (d / 2) * (d / 2), 1e-22);
  EXPECT_LT(r.F0, 0.0);
  EXPECT_GT(r.F1, 0.0);
  EXPECT_EQ(r.F0, -r.F1);
}

TEST(Penalty, ForceAndJacobianMatchFiniteDifferences) {
  testutil::Rng rng(33);
  const double d = 2 * kR, kc = 1.0;
  for (int k = 0; k < 100; ++k) {
    const double e0 = rng.uniform(0, kL);
    double gap = rng.uniform(0.01 * d, 2 * d);
    if (std::abs(gap - d) < 0.05 * d) gap = 0.5 * d;
    Eigen::Vector2d x(e0, e0 + gap);
    const auto r = yarn_collision_force(x[0], x[1], kc, kL, d);
    auto V = [&](const Eigen::VectorXd& y) { return testutil::scalar_as_vec(yarn_collision_force(y[0], y[1], kc, kL, d).V); };
    auto F = [&](const Eigen::VectorXd& y) {
      const auto p = yarn_collision_force(y[0], y[1], kc, kL, d);
      return Eigen::VectorXd(Eigen::Vector2d(p.F0, p.F1));
    };
    Eigen::Matrix2d K;
    K << r.k, -r.k, -r.k, r.k;
    EXPECT_LE(fd_check(V, x, Eigen::RowVector2d(-r.F0, -r.F1), 1e-3), 1e-6);
    EXPECT_LE(fd_check(F, x, K, 1e-3), 1e-8);
  }
}
