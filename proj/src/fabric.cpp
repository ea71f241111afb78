#include "yarnsim/fabric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace yarnsim {

Crossing WovenPattern::over_under(int warp, int weft) const {
  switch (kind) {
    case PatternKind::Plain:
      return ((warp + weft) % 2 == 0) ? Crossing::WarpOver : Crossing::WeftOver;
    case PatternKind::Twill:
      // 2/2 twill: the float shifts one column per row.
      return (((warp + weft) % 4) < 2) ? Crossing::WarpOver : Crossing::WeftOver;
    case PatternKind::Satin:
      // 4/1 satin with shift 2: one weft-over crossing in every five.
      return (((warp + 2 * weft) % 5) == 0) ? Crossing::WeftOver : Crossing::WarpOver;
  }
  return Crossing::WarpOver;
}

PatternKind parse_pattern(const std::string& name) {
  if (name == "plain") return PatternKind::Plain;
  if (name == "satin") return PatternKind::Satin;
  if (name == "twill") return PatternKind::Twill;
  throw FabricError("unknown woven pattern '" + name + "'");
}

std::string pattern_name(PatternKind k) {
  switch (k) {
    case PatternKind::Plain: return "plain";
    case PatternKind::Satin: return "satin";
    case PatternKind::Twill: return "twill";
  }
  return "plain";
}

void FabricSpec::validate() const {
  if (rows < 3 || cols < 3) throw FabricError("fabric needs at least 3 rows and 3 columns");
  if (!(L > 0.0)) throw FabricError("rest spacing L must be positive");
  if (static_cast<int>(warp_yarns.size()) != cols) throw FabricError("warp_yarns must have one entry per column");
  if (static_cast<int>(weft_yarns.size()) != rows) throw FabricError("weft_yarns must have one entry per row");
  const int nm = static_cast<int>(materials.size());
  for (int id : warp_yarns)
    if (id < 0 || id >= nm) throw FabricError("warp yarn references unknown material " + std::to_string(id));
  for (int id : weft_yarns)
    if (id < 0 || id >= nm) throw FabricError("weft yarn references unknown material " + std::to_string(id));
  for (const auto& m : materials) {
    if (!(m.density > 0 && m.stretch_modulus > 0 && m.bend_modulus > 0 && m.radius > 0))
      throw FabricError("yarn material parameters must be positive");
  }
}

Fabric::Fabric(FabricSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int r = spec_.rows, c = spec_.cols, n = r * c;
  layout_.offset.resize(n);
  layout_.interior.resize(n);
  int off = 0;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const int id = node(i, j);
      const bool in = i > 0 && i < r - 1 && j > 0 && j < c - 1;
      layout_.interior[id] = in;
      layout_.offset[id] = off;
      off += in ? 5 : 3;
      if (in) crossings_.push_back(id);
    }
  }
  layout_.size = off;

  // Warp segments first (column by column), then weft segments.
  for (int j = 0; j < c; ++j)
    for (int i = 0; i + 1 < r; ++i)
      segments_.push_back({node(i, j), node(i + 1, j), YarnDir::Warp, spec_.warp_yarns[j]});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j + 1 < c; ++j)
      segments_.push_back({node(i, j), node(i, j + 1), YarnDir::Weft, spec_.weft_yarns[i]});

  for (int j = 0; j < c; ++j)
    for (int i = 1; i + 1 < r; ++i)
      triples_.push_back({node(i - 1, j), node(i, j), node(i + 1, j), YarnDir::Warp, spec_.warp_yarns[j]});
  for (int i = 0; i < r; ++i)
    for (int j = 1; j + 1 < c; ++j)
      triples_.push_back({node(i, j - 1), node(i, j), node(i, j + 1), YarnDir::Weft, spec_.weft_yarns[i]});

  // Each grid cell is split along its (i, j) -> (i+1, j+1) diagonal.
  for (int i = 0; i + 1 < r; ++i) {
    for (int j = 0; j + 1 < c; ++j) {
      const int a = node(i, j), b = node(i, j + 1), d = node(i + 1, j + 1), e = node(i + 1, j);
      triangles_.push_back({a, b, d});
      triangles_.push_back({a, d, e});
    }
  }
}

double Fabric::collision_distance(const Segment& s) const {
  const double R = spec_.materials[s.material].radius;
  return crossing(s.node0) == crossing(s.node1) ? 4.0 * R : 2.0 * R;
}

State Fabric::rest_state(const Vec3& origin, const Vec3& col_axis, const Vec3& row_axis) const {
  State st;
  st.q = VecX::Zero(layout_.size);
  st.qdot = VecX::Zero(layout_.size);
  st.anchors = VecX::Zero(2 * num_nodes());
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < cols(); ++j) {
      const int id = node(i, j);
      st.q.segment<3>(layout_.x(id)) = origin + j * spec_.L * col_axis + i * spec_.L * row_axis;
      st.anchors[2 * id] = rest_eul(id, YarnDir::Warp);
      st.anchors[2 * id + 1] = rest_eul(id, YarnDir::Weft);
      if (layout_.interior[id]) {
        st.q[layout_.u(id)] = rest_eul(id, YarnDir::Warp);
        st.q[layout_.v(id)] = rest_eul(id, YarnDir::Weft);
      }
    }
  }
  return st;
}

Vec3 Fabric::interpolate(const Segment& s, const VecX& q, double e) const {
  const double e0 = eul(q, s.node0, s.dir), e1 = eul(q, s.node1, s.dir);
  if (!(e1 > e0)) throw FabricError("degenerate segment in interpolation");
  if (e < e0 || e > e1) throw FabricError("interpolation coordinate outside the segment");
  const double de = e1 - e0;
  return ((e1 - e) * pos(q, s.node0) + (e - e0) * pos(q, s.node1)) / de;
}

double Fabric::min_eulerian_gap(const VecX& q) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : segments_) m = std::min(m, eul(q, s.node1, s.dir) - eul(q, s.node0, s.dir));
  return m;
}

FabricSpec two_yarn_spec(int rows, int cols, const YarnMaterial& warp, const YarnMaterial& weft,
                         PatternKind pattern, double L) {
  FabricSpec s;
  s.rows = rows;
  s.cols = cols;
  s.pattern.kind = pattern;
  s.L = L;
  s.materials = {warp, weft};
  s.warp_yarns.assign(cols, 0);
  s.weft_yarns.assign(rows, 1);
  return s;
}

}  // namespace yarnsim
