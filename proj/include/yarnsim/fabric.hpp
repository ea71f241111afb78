#pragma once
// Woven-fabric discretization: crossing nodes on an r x c grid, warp/weft
// segments between neighbours, and the generalized-coordinate layout.
//
// Node (i, j) sits on weft row i and warp column j; node id = i * cols + j.
// Warps run along i and carry the Eulerian coordinate u; wefts run along j and
// carry v. Nodes on the outer ring are yarn end points and have no Eulerian
// DoFs: their u, v stay at the rest values i*L, j*L.

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace yarnsim {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

class FabricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PatternKind { Plain, Satin, Twill };
enum class Crossing { WarpOver, WeftOver };
enum class YarnDir { Warp, Weft };

struct WovenPattern {
  PatternKind kind = PatternKind::Plain;
  Crossing over_under(int warp, int weft) const;
};

PatternKind parse_pattern(const std::string& name);
std::string pattern_name(PatternKind k);

struct YarnMaterial {
  double density = 0.002;       // kg/m
  double stretch_modulus = 5e5;
  double bend_modulus = 1.4e-4;
  double radius = 2e-4;         // m
};

struct FabricSpec {
  int rows = 5;
  int cols = 5;
  WovenPattern pattern;
  std::vector<int> warp_yarns;  // material id per warp (size cols)
  std::vector<int> weft_yarns;  // material id per weft (size rows)
  double L = 1e-3;
  std::vector<YarnMaterial> materials;

  void validate() const;
};

struct Segment {
  int node0 = 0;
  int node1 = 0;
  YarnDir dir = YarnDir::Warp;
  int material = 0;
};

// Three consecutive nodes on one yarn; prev -> center -> next follows the
// increasing Eulerian coordinate.
struct BendTriple {
  int prev = 0;
  int center = 0;
  int next = 0;
  YarnDir dir = YarnDir::Warp;
  int material = 0;
};

struct Triangle {
  int a = 0, b = 0, c = 0;
};

struct DofLayout {
  std::vector<int> offset;     // first DoF of each node
  std::vector<char> interior;  // node carries (u, v)
  int size = 0;

  int x(int node) const { return offset[node]; }
  int u(int node) const { return interior[node] ? offset[node] + 3 : -1; }
  int v(int node) const { return interior[node] ? offset[node] + 4 : -1; }
  int eul(int node, YarnDir d) const { return d == YarnDir::Warp ? u(node) : v(node); }
  int ndof(int node) const { return interior[node] ? 5 : 3; }
};

struct State {
  VecX q;
  VecX qdot;
  VecX anchors;  // 2 per node (u-bar, v-bar); only interior entries are used
  double t = 0.0;
};

class Fabric {
 public:
  explicit Fabric(FabricSpec spec);

  const FabricSpec& spec() const { return spec_; }
  const DofLayout& layout() const { return layout_; }
  int rows() const { return spec_.rows; }
  int cols() const { return spec_.cols; }
  int num_nodes() const { return spec_.rows * spec_.cols; }
  int node(int i, int j) const { return i * spec_.cols + j; }
  int row(int n) const { return n / spec_.cols; }
  int col(int n) const { return n % spec_.cols; }
  double L() const { return spec_.L; }

  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<BendTriple>& triples() const { return triples_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<int>& crossings() const { return crossings_; }

  // Rest Eulerian coordinate of a node along a yarn direction.
  double rest_eul(int n, YarnDir d) const { return d == YarnDir::Warp ? row(n) * spec_.L : col(n) * spec_.L; }
  // Current Eulerian coordinate (stored constant for boundary nodes).
  double eul(const VecX& q, int n, YarnDir d) const {
    const int k = layout_.eul(n, d);
    return k >= 0 ? q[k] : rest_eul(n, d);
  }
  Vec3 pos(const VecX& q, int n) const { return q.segment<3>(layout_.x(n)); }

  int material_of(YarnDir d, int n) const {
    return d == YarnDir::Warp ? spec_.warp_yarns[col(n)] : spec_.weft_yarns[row(n)];
  }
  const YarnMaterial& material(int id) const { return spec_.materials[id]; }
  Crossing crossing(int n) const { return spec_.pattern.over_under(col(n), row(n)); }
  // Minimum Eulerian separation for the parallel-yarn penalty on a segment.
  double collision_distance(const Segment& s) const;

  // Rest state in the plane spanned by col_axis (j) and row_axis (i).
  State rest_state(const Vec3& origin = Vec3::Zero(), const Vec3& col_axis = Vec3::UnitX(),
                   const Vec3& row_axis = Vec3::UnitY()) const;

  // Interpolated point on a segment at Eulerian coordinate e.
  Vec3 interpolate(const Segment& s, const VecX& q, double e) const;

  // Smallest Eulerian gap over all segments (positive means monotone).
  double min_eulerian_gap(const VecX& q) const;

 private:
  FabricSpec spec_;
  DofLayout layout_;
  std::vector<Segment> segments_;
  std::vector<BendTriple> triples_;
  std::vector<Triangle> triangles_;
  std::vector<int> crossings_;
};

inline int dof_count(int r, int c) { return 3 * r * c + 2 * (r - 2) * (c - 2); }

// Plain two-yarn fabric: warps use material 0, wefts material 1.
FabricSpec two_yarn_spec(int rows, int cols, const YarnMaterial& warp, const YarnMaterial& weft,
                         PatternKind pattern = PatternKind::Plain, double L = 1e-3);

}  // namespace yarnsim
