#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "yarnsim/fabric.hpp"

using namespace yarnsim;

namespace {

FabricSpec spec_rc(int r, int c, PatternKind p = PatternKind::Plain) {
  return two_yarn_spec(r, c, YarnMaterial{}, YarnMaterial{0.0025, 1.7e5, 1.1e-4, 2e-4}, p);
}

}  // namespace

TEST(Fabric, DofCountSmallAndPaperSizes) {
  EXPECT_EQ(Fabric(spec_rc(5, 5)).layout().size, 93);
  EXPECT_EQ(Fabric(spec_rc(17, 17)).layout().size, 1317);
}

TEST(Fabric, DofCountFormulaOverRandomSizes) {
  testutil::Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const int r = 3 + static_cast<int>(rng.uniform(0, 20)), c = 3 + static_cast<int>(rng.uniform(0, 20));
    Fabric f(spec_rc(r, c));
    EXPECT_EQ(f.layout().size, 3 * r * c + 2 * (r - 2) * (c - 2));
    int interior = 0;
    for (int n = 0; n < f.num_nodes(); ++n) interior += f.layout().interior[n];
    EXPECT_EQ(f.num_nodes() - interior, 2 * r + 2 * c - 4);
  }
}

TEST(Fabric, RejectsSmallGridsAndBadSpacing) {
  EXPECT_THROW(Fabric(spec_rc(2, 3)), FabricError);
  EXPECT_THROW(Fabric(spec_rc(3, 2)), FabricError);
  auto s = spec_rc(4, 4);
  s.L = 0.0;
  EXPECT_THROW(Fabric{s}, FabricError);
  s = spec_rc(4, 4);
  s.warp_yarns[1] = 7;
  EXPECT_THROW(Fabric{s}, FabricError);
}

TEST(Fabric, SegmentsCountAndOrientation) {
  Fabric f(spec_rc(5, 5));
  EXPECT_EQ(f.segments().size(), 40u);
  const State st = f.rest_state();
  for (const auto& s : f.segments()) {
    const double de = f.eul(st.q, s.node1, s.dir) - f.eul(st.q, s.node0, s.dir);
    EXPECT_DOUBLE_EQ(de, f.L());
    EXPECT_NEAR((f.pos(st.q, s.node1) - f.pos(st.q, s.node0)).norm(), f.L(), 1e-15);
  }
}

TEST(Fabric, RestStateIsFlatWithRightAngles) {
  Fabric f(spec_rc(5, 6));
  const State st = f.rest_state();
  EXPECT_TRUE(st.qdot.isZero());
  for (int n : f.crossings()) {
    const int i = f.row(n), j = f.col(n);
    const Vec3 a = f.pos(st.q, f.node(i + 1, j)) - f.pos(st.q, n);
    const Vec3 b = f.pos(st.q, f.node(i, j + 1)) - f.pos(st.q, n);
    EXPECT_NEAR(std::acos(a.normalized().dot(b.normalized())), std::numbers::pi / 2, 1e-15);
    EXPECT_DOUBLE_EQ(st.anchors[2 * n], f.eul(st.q, n, YarnDir::Warp));
    EXPECT_DOUBLE_EQ(st.anchors[2 * n + 1], f.eul(st.q, n, YarnDir::Weft));
  }
}

TEST(Fabric, PlainPatternAlternates) {
  WovenPattern p{PatternKind::Plain};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      EXPECT_NE(p.over_under(i, j), p.over_under(i + 1, j));
      EXPECT_NE(p.over_under(i, j), p.over_under(i, j + 1));
    }
}

TEST(Fabric, SatinAndTwillRepeats) {
  WovenPattern twill{PatternKind::Twill}, satin{PatternKind::Satin};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      EXPECT_EQ(twill.over_under(i, j), twill.over_under(i + 4, j));
      EXPECT_EQ(twill.over_under(i, j), twill.over_under(i + 1, j + 3));
      EXPECT_EQ(satin.over_under(i, j), satin.over_under(i + 5, j));
    }
  int weft_over = 0;
  for (int i = 0; i < 5; ++i) weft_over += satin.over_under(i, 0) == Crossing::WeftOver;
  EXPECT_EQ(weft_over, 1);
  EXPECT_EQ(parse_pattern(pattern_name(PatternKind::Satin)), PatternKind::Satin);
  EXPECT_THROW(parse_pattern("basket"), FabricError);
}

TEST(Fabric, InterpolationEndpointsAndMidpoint) {
  Fabric f(spec_rc(3, 3));
  State st = f.rest_state();
  const Segment& s = f.segments()[0];
  const double e0 = f.eul(st.q, s.node0, s.dir), e1 = f.eul(st.q, s.node1, s.dir);
  EXPECT_TRUE(f.interpolate(s, st.q, e0).isApprox(f.pos(st.q, s.node0)));
  EXPECT_TRUE(f.interpolate(s, st.q, e1).isApprox(f.pos(st.q, s.node1)));
  EXPECT_TRUE(f.interpolate(s, st.q, 0.5 * (e0 + e1)).isApprox(0.5 * (f.pos(st.q, s.node0) + f.pos(st.q, s.node1))));
  EXPECT_THROW(f.interpolate(s, st.q, e1 + 1e-6), FabricError);
}

TEST(Fabric, InterpolationWorkedExample) {
  // Warp segment (1,1)-(2,1) of a 4x3 grid carries u0 = L, u1 = 2L.
  auto sp = spec_rc(4, 3);
  sp.L = 1.0;
  Fabric f(sp);
  State st = f.rest_state();
  int idx = -1;
  for (int k = 0; k < static_cast<int>(f.segments().size()); ++k) {
    const auto& s = f.segments()[k];
    if (s.dir == YarnDir::Warp && s.node0 == f.node(1, 1)) idx = k;
  }
  ASSERT_GE(idx, 0);
  const Segment& s = f.segments()[idx];
  // Shift to u0 = 0, u1 = 2, x0 = 0, x1 = (2, 0, 0).
  st.q[f.layout().u(s.node0)] = 0.0;
  st.q[f.layout().u(s.node1)] = 2.0;
  st.q.segment<3>(f.layout().x(s.node0)) = Vec3::Zero();
  st.q.segment<3>(f.layout().x(s.node1)) = Vec3(2, 0, 0);
  EXPECT_TRUE(f.interpolate(s, st.q, 0.5).isApprox(Vec3(0.5, 0, 0)));
}
