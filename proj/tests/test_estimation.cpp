#include <gtest/gtest.h>

#include "yarnsim/estimation.hpp"

using namespace yarnsim;

namespace {

FabricSpec cloth(int n) {
  return two_yarn_spec(n, n, YarnMaterial{0.002, 5e5, 1.4e-4, 2e-4}, YarnMaterial{0.0025, 1.7e5, 1.1e-4, 2e-4});
}

VecX truth_for(const Fabric& f) { return params_from_spec(f.spec(), 1000.0, 0.5); }

bool inside(const VecX& th, const std::vector<Bound>& b) {
  for (int k = 0; k < th.size(); ++k)
    if (!(th[k] > b[k].lo && th[k] < b[k].hi)) return false;
  return true;
}

}  // namespace

TEST(Scenario, ValidatesNodesAndStep) {
  Scenario s = hanging_wind(cloth(4), 10);
  EXPECT_EQ(s.pins, (std::vector<int>{0, 3}));
  EXPECT_NO_THROW(s.validate());
  s.pins.push_back(16);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  Scenario t = throw_to_box(cloth(4), 10);
  EXPECT_EQ(t.corners, (std::vector<int>{0, 3, 12, 15}));
  t.h = 0.0;
  EXPECT_THROW(Experiment{t}, std::invalid_argument);
  t.h = 1e-3;
  t.corners.clear();
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(GroundTruth, FrameCountAndDeterminism) {
  Experiment zero(hanging_wind(cloth(5), 0));
  EXPECT_EQ(generate_ground_truth(zero, truth_for(zero.fabric())).size(), 1u);
  Experiment ex(hanging_wind(cloth(5), 8));
  const auto a = generate_ground_truth(ex, truth_for(ex.fabric()));
  const auto b = generate_ground_truth(ex, truth_for(ex.fabric()));
  ASSERT_EQ(a.size(), 9u);
  for (size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].q, b[k].q);
}

TEST(InitialGuess, JitterAroundMaterialMeanInsideBounds) {
  const ParamLayout pl{2};
  const auto b = default_bounds(pl);
  const VecX ref = params_from_spec(cloth(5), 1000.0, 0.5);
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    const VecX g = jittered_initial_guess(pl, ref, b, seed);
    EXPECT_TRUE(inside(g, b));
    for (int m = 0; m < 2; ++m) {
      EXPECT_NEAR(g[pl.density(m)], 0.00225, 0.1 * 0.00225 + 1e-15);
      EXPECT_NEAR(g[pl.bend(m)], 1.25e-4, 0.1 * 1.25e-4 + 1e-15);
    }
    EXPECT_NEAR(g[pl.shear()], 600.0, 60.0);
    // The stretch mean lies above the second material's upper bound.
    EXPECT_LT(g[pl.stretch(1)], b[pl.stretch(1)].hi);
    EXPECT_EQ(g, jittered_initial_guess(pl, ref, b, seed));
  }
  EXPECT_NE(jittered_initial_guess(pl, ref, b, 1), jittered_initial_guess(pl, ref, b, 2));
}

TEST(Optimizer, StepsDescendOnAQuadratic) {
  for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam}) {
    Optimizer opt;
    opt.kind = kind;
    opt.lr = 0.1;
    opt.reset(2);
    VecX y(2);
    y << 1.0, -2.0;
    for (int k = 0; k < 200; ++k) opt.step(y, 2.0 * y);
    EXPECT_LT(y.norm(), 0.05) << optimizer_name(kind);
  }
  EXPECT_EQ(parse_optimizer("lbfgs"), OptimizerKind::Lbfgs);
  EXPECT_THROW(parse_optimizer("newton"), std::invalid_argument);
}

TEST(Estimate, StartingAtTheTruthStaysThere) {
  Experiment ex(hanging_wind(cloth(5), 10));
  const VecX truth = truth_for(ex.fabric());
  const auto gt = generate_ground_truth(ex, truth);
  TrainConfig cfg;
  cfg.frames = 5;
  cfg.epochs = 3;
  cfg.init = truth;
  for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::Lbfgs}) {
    cfg.optimizer = kind;
    const auto r = estimate(ex, target_from_trajectory(ex.fabric(), gt, false), cfg, truth);
    ASSERT_EQ(r.loss.size(), 3u);
    EXPECT_LE(r.loss[0], 1e-12);
    EXPECT_LE((r.theta - truth).cwiseQuotient(truth).lpNorm<Eigen::Infinity>(), 1e-9) << optimizer_name(kind);
    EXPECT_TRUE(inside(r.theta, default_bounds(ex.param_layout())));
  }
}

TEST(Estimate, ReducesLossInsideBoundsAndIsSeedDeterministic) {
  Experiment ex(hanging_wind(cloth(5), 10));
  const VecX truth = truth_for(ex.fabric());
  const auto target = target_from_trajectory(ex.fabric(), generate_ground_truth(ex, truth), false);
  TrainConfig cfg;
  cfg.frames = 5;
  cfg.epochs = 8;
  cfg.seed = 7;
  const auto a = estimate(ex, target, cfg, truth);
  const auto b = estimate(ex, target, cfg, truth);
  ASSERT_EQ(a.loss.size(), 8u);
  EXPECT_LT(a.final_loss, 0.1 * a.loss.front());
  EXPECT_TRUE(inside(a.theta, default_bounds(ex.param_layout())));
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.loss, b.loss);

  cfg.optimizer = OptimizerKind::Adam;
  const auto c = estimate(ex, target, cfg, truth);
  EXPECT_LT(c.final_loss, c.loss.front());
}

TEST(Estimate, RejectsBadRequests) {
  Experiment ex(hanging_wind(cloth(4), 3));
  const VecX truth = truth_for(ex.fabric());
  const auto target = target_from_trajectory(ex.fabric(), generate_ground_truth(ex, truth), false);
  TrainConfig cfg;
  cfg.frames = 5;
  EXPECT_THROW(estimate(ex, target, cfg, truth), std::invalid_argument);
  cfg.frames = 2;
  VecX outside = truth;
  outside[0] = 0.01;
  cfg.init = outside;
  EXPECT_THROW(estimate(ex, target, cfg, truth), std::invalid_argument);
}

TEST(EvaluateMse, ZeroAtTruthAndGrowsWithHorizon) {
  Experiment ex(hanging_wind(cloth(5), 40));
  const VecX truth = truth_for(ex.fabric());
  const auto gt = generate_ground_truth(ex, truth);
  EXPECT_LE(evaluate_mse(ex, truth, gt, 40), 1e-12);
  VecX off = truth;
  off[0] *= 1.05;
  off[3] *= 0.9;
  const double m5 = evaluate_mse(ex, off, gt, 5), m40 = evaluate_mse(ex, off, gt, 40);
  EXPECT_GT(m5, 0.0);
  EXPECT_GT(m40, m5);
  EXPECT_THROW(evaluate_mse(ex, truth, gt, 41), std::invalid_argument);
}

TEST(Control, DegenerateTargetNeedsNoForce) {
  Scenario s = throw_to_box(cloth(5), 20);
  s.target_offset = Vec3::Zero();
  Experiment ex(s);
  const ControlForces none(s.corners, s.control_frames);
  EXPECT_LE(control_loss(ex, truth_for(ex.fabric()), none).loss, 1e-9);
}

TEST(Control, GradientMatchesFiniteDifferences) {
  Experiment ex(throw_to_box(cloth(5), 20));
  const VecX th = truth_for(ex.fabric());
  ControlForces c(ex.scenario().corners, 5);
  for (int k = 0; k < c.size(); ++k) c.values[k] = 2e-4 * std::sin(1.1 * k + 0.2);
  const auto cl = control_loss(ex, th, c);
  for (int k : {0, 4, 13, 27, 42, 59}) {
    ControlForces a = c, b = c;
    a.values[k] += 1e-9;
    b.values[k] -= 1e-9;
    const double fd = (control_loss(ex, th, a).loss - control_loss(ex, th, b).loss) / 2e-9;
    EXPECT_NEAR(cl.grad[k], fd, 1e-3 * std::max(std::abs(fd), 1e-3 * cl.grad.lpNorm<Eigen::Infinity>()))
        << "component " << k;
  }
}

TEST(Control, LearningReducesTheDistanceDeterministically) {
  Experiment ex(throw_to_box(cloth(5), 20));
  const VecX th = truth_for(ex.fabric());
  ControlConfig cfg;
  cfg.epochs = 10;
  const auto a = learn_control(ex, th, cfg);
  ASSERT_EQ(a.loss.size(), 11u);
  EXPECT_EQ(a.forces.size(), 60);
  EXPECT_LT(a.loss[10], a.loss[0]);
  const auto b = learn_control(ex, th, cfg);
  EXPECT_EQ(a.forces.values, b.forces.values);
  Experiment hang(hanging_wind(cloth(4), 5));
  EXPECT_THROW(learn_control(hang, truth_for(hang.fabric()), cfg), std::invalid_argument);
}
