#include "yarnsim/io.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

namespace yarnsim {

InputError::InputError(const std::string& source, int line, const std::string& msg)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg),
      line_(line) {}

namespace {

// ---------------------------------------------------------------- yaml helpers

struct Reader {
  std::string source;

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    throw InputError(source, n.Mark().is_null() ? 0 : n.Mark().line + 1, msg);
  }

  void keys(const YAML::Node& map, const std::string& section, std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, "'" + section + "' must be a mapping");
    for (const auto& kv : map) {
      const std::string k = kv.first.as<std::string>();
      bool ok = false;
      for (const char* a : allowed) ok |= k == a;
      if (!ok) fail(kv.first, "unknown key '" + k + "' in " + section);
    }
  }

  template <class T>
  bool get(const YAML::Node& map, const char* key, T& out) const {
    const YAML::Node n = map[key];
    if (!n) return false;
    if (!n.IsScalar()) fail(n, std::string("'") + key + "' must be a scalar");
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, std::string("invalid value '") + n.Scalar() + "' for '" + key + "'");
    }
    return true;
  }

  template <class T>
  bool list(const YAML::Node& map, const char* key, std::vector<T>& out) const {
    const YAML::Node n = map[key];
    if (!n) return false;
    if (!n.IsSequence()) fail(n, std::string("'") + key + "' must be a list");
    out.clear();
    for (const auto& e : n) {
      if (!e.IsScalar()) fail(e, std::string("'") + key + "' entries must be scalars");
      try {
        out.push_back(e.as<T>());
      } catch (const YAML::Exception&) {
        fail(e, std::string("invalid entry '") + e.Scalar() + "' in '" + key + "'");
      }
    }
    return true;
  }

  bool vec3(const YAML::Node& map, const char* key, Vec3& out) const {
    std::vector<double> v;
    if (!list(map, key, v)) return false;
    if (v.size() != 3) fail(map[key], std::string("'") + key + "' needs 3 components");
    out = Vec3(v[0], v[1], v[2]);
    return true;
  }

  void require(bool cond, const YAML::Node& map, const char* key, const std::string& msg) const {
    if (cond) return;
    const YAML::Node n = map[key];
    fail(n ? n : map, std::string("'") + key + "' " + msg);
  }
};

YAML::Node section(const YAML::Node& root, const char* name) {
  const YAML::Node n = root[name];
  return n ? n : YAML::Node(YAML::NodeType::Map);
}

FabricSpec read_fabric(const Reader& rd, const YAML::Node& n) {
  rd.keys(n, "fabric", {"rows", "cols", "pattern", "L", "R", "materials", "warp", "weft"});
  FabricSpec s;
  rd.get(n, "rows", s.rows);
  rd.get(n, "cols", s.cols);
  rd.require(s.rows >= 3 && s.cols >= 3, n, s.rows < 3 ? "rows" : "cols", "must be at least 3");
  std::string pattern = "plain";
  rd.get(n, "pattern", pattern);
  try {
    s.pattern.kind = parse_pattern(pattern);
  } catch (const std::exception& e) {
    rd.fail(n["pattern"], e.what());
  }
  rd.get(n, "L", s.L);
  rd.require(s.L > 0.0, n, "L", "must be positive");
  double R = 2e-4;
  rd.get(n, "R", R);
  rd.require(R > 0.0, n, "R", "must be positive");

  const YAML::Node mats = n["materials"];
  if (mats) {
    if (!mats.IsSequence() || mats.size() == 0) rd.fail(mats, "'materials' must be a non-empty list");
    for (const auto& m : mats) {
      rd.keys(m, "materials entry", {"density", "stretch", "bend", "radius"});
      YarnMaterial y;
      y.radius = R;
      for (const char* k : {"density", "stretch", "bend"})
        if (!m[k]) rd.fail(m, std::string("material is missing '") + k + "'");
      rd.get(m, "density", y.density);
      rd.get(m, "stretch", y.stretch_modulus);
      rd.get(m, "bend", y.bend_modulus);
      rd.get(m, "radius", y.radius);
      rd.require(y.density > 0.0, m, "density", "must be positive");
      rd.require(y.stretch_modulus > 0.0, m, "stretch", "must be positive");
      rd.require(y.bend_modulus > 0.0, m, "bend", "must be positive");
      rd.require(y.radius > 0.0, m, "radius", "must be positive");
      s.materials.push_back(y);
    }
  } else {
    s.materials = {YarnMaterial{0.002, 5e5, 1.4e-4, R}, YarnMaterial{0.0025, 1.7e5, 1.1e-4, R}};
  }
  const int nm = static_cast<int>(s.materials.size());
  s.warp_yarns.assign(s.cols, 0);
  s.weft_yarns.assign(s.rows, nm > 1 ? 1 : 0);
  if (rd.list(n, "warp", s.warp_yarns))
    rd.require(static_cast<int>(s.warp_yarns.size()) == s.cols, n, "warp", "needs one material id per column");
  if (rd.list(n, "weft", s.weft_yarns))
    rd.require(static_cast<int>(s.weft_yarns.size()) == s.rows, n, "weft", "needs one material id per row");
  for (int id : s.warp_yarns) rd.require(id >= 0 && id < nm, n, "warp", "refers to an unknown material");
  for (int id : s.weft_yarns) rd.require(id >= 0 && id < nm, n, "weft", "refers to an unknown material");
  try {
    s.validate();
  } catch (const std::exception& e) {
    rd.fail(n, e.what());
  }
  return s;
}

void read_toggles(const Reader& rd, const YAML::Node& n, ForceToggles& on) {
  rd.keys(n, "model.forces",
          {"inertia", "stretch", "bend", "shear", "friction", "yarn_collision", "gravity", "wind"});
  rd.get(n, "inertia", on.inertia);
  rd.get(n, "stretch", on.stretch);
  rd.get(n, "bend", on.bend);
  rd.get(n, "shear", on.shear);
  rd.get(n, "friction", on.friction);
  rd.get(n, "yarn_collision", on.collision);
  rd.get(n, "gravity", on.gravity);
  rd.get(n, "wind", on.wind);
}

void read_model(const Reader& rd, const YAML::Node& n, ModelConstants& c) {
  rd.keys(n, "model",
          {"friction_stiffness", "friction_damping", "friction_sharpness", "shear_exponent", "shear_sigma",
           "collision_stiffness", "gravity", "wind_density", "wind_drag", "forces"});
  rd.get(n, "friction_stiffness", c.friction_stiffness);
  rd.get(n, "friction_damping", c.friction_damping);
  rd.get(n, "friction_sharpness", c.friction_sharpness);
  rd.get(n, "shear_exponent", c.shear_exponent);
  rd.get(n, "shear_sigma", c.shear_sigma);
  rd.get(n, "collision_stiffness", c.collision_stiffness);
  rd.vec3(n, "gravity", c.gravity);
  rd.get(n, "wind_density", c.wind.density);
  rd.get(n, "wind_drag", c.wind.drag);
  for (const char* k : {"friction_stiffness", "friction_sharpness", "shear_sigma"}) {
    double v = 1.0;
    rd.get(n, k, v);
    rd.require(v > 0.0, n, k, "must be positive");
  }
  for (const char* k : {"friction_damping", "shear_exponent", "collision_stiffness", "wind_density", "wind_drag"}) {
    double v = 0.0;
    rd.get(n, k, v);
    rd.require(v >= 0.0, n, k, "must be non-negative");
  }
  if (n["forces"]) read_toggles(rd, n["forces"], c.on);
}

OptimizerKind read_optimizer(const Reader& rd, const YAML::Node& n, OptimizerKind def) {
  std::string name = optimizer_name(def);
  rd.get(n, "optimizer", name);
  try {
    return parse_optimizer(name);
  } catch (const std::exception& e) {
    rd.fail(n["optimizer"], e.what());
  }
}

}  // namespace

Config parse_config(const std::string& text, const std::string& source) {
  const Reader rd{source};
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InputError(source, e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  rd.keys(root, "the top level", {"fabric", "params", "scenario", "sim", "model", "train", "control"});

  Config cfg;
  const FabricSpec spec = read_fabric(rd, section(root, "fabric"));

  const YAML::Node params = section(root, "params");
  rd.keys(params, "params", {"shear", "friction"});
  rd.get(params, "shear", cfg.shear);
  rd.get(params, "friction", cfg.friction);
  rd.require(cfg.shear >= 0.0, params, "shear", "must be non-negative");
  rd.require(cfg.friction >= 0.0, params, "friction", "must be non-negative");

  const YAML::Node sim = section(root, "sim");
  rd.keys(sim, "sim", {"h", "steps", "obj"});
  double h = 1e-3;
  int steps = 500;
  rd.get(sim, "h", h);
  rd.get(sim, "steps", steps);
  rd.get(sim, "obj", cfg.export_obj);
  rd.require(h > 0.0 && std::isfinite(h), sim, "h", "must be positive");
  rd.require(steps >= 0, sim, "steps", "must be non-negative");

  const YAML::Node sc = section(root, "scenario");
  rd.keys(sc, "scenario",
          {"kind", "pins", "wind", "table_height", "table_friction", "corners", "control_frames", "target_offset"});
  std::string kind = "hanging_wind";
  rd.get(sc, "kind", kind);
  Scenario& s = cfg.scenario;
  if (kind == "hanging_wind") {
    s = hanging_wind(spec, steps, h);
    rd.vec3(sc, "wind", s.constants.wind.velocity);
    rd.list(sc, "pins", s.pins);
    for (const char* k : {"table_height", "table_friction", "corners", "control_frames", "target_offset"})
      if (sc[k]) rd.fail(sc[k], std::string("'") + k + "' applies to throw_to_box only");
  } else if (kind == "throw_to_box") {
    s = throw_to_box(spec, steps, h);
    if (sc["wind"]) {
      rd.vec3(sc, "wind", s.constants.wind.velocity);
      s.constants.on.wind = true;
    }
    if (sc["pins"]) rd.fail(sc["pins"], "'pins' applies to hanging_wind only");
    rd.get(sc, "table_height", s.table_height);
    rd.get(sc, "table_friction", s.table_friction);
    rd.list(sc, "corners", s.corners);
    rd.get(sc, "control_frames", s.control_frames);
    rd.vec3(sc, "target_offset", s.target_offset);
    rd.require(s.table_friction >= 0.0 && s.table_friction <= 1.0, sc, "table_friction", "must lie in [0, 1]");
    rd.require(s.control_frames >= 1, sc, "control_frames", "must be at least 1");
  } else {
    rd.fail(sc["kind"], "unknown scenario kind '" + kind + "' (hanging_wind, throw_to_box)");
  }
  if (root["model"]) read_model(rd, root["model"], s.constants);
  try {
    s.validate();
  } catch (const std::exception& e) {
    rd.fail(root["scenario"] ? root["scenario"] : root, e.what());
  }

  const ParamLayout pl{static_cast<int>(spec.materials.size())};
  const YAML::Node tr = section(root, "train");
  rd.keys(tr, "train",
          {"frames", "epochs", "lr", "optimizer", "seed", "lagrangian_only", "report_truth", "bounds"});
  TrainConfig& t = cfg.train;
  rd.get(tr, "frames", t.frames);
  rd.get(tr, "epochs", t.epochs);
  rd.get(tr, "lr", t.lr);
  t.optimizer = read_optimizer(rd, tr, t.optimizer);
  rd.get(tr, "seed", t.seed);
  rd.get(tr, "lagrangian_only", t.lagrangian_only);
  rd.get(tr, "report_truth", cfg.report_truth);
  rd.require(t.frames >= 1, tr, "frames", "must be at least 1");
  rd.require(t.epochs >= 0, tr, "epochs", "must be non-negative");
  rd.require(t.lr > 0.0, tr, "lr", "must be positive");
  t.bounds = default_bounds(pl);
  if (const YAML::Node b = tr["bounds"]) {
    if (!b.IsMap()) rd.fail(b, "'bounds' must map parameter names to [lower, upper]");
    for (const auto& kv : b) {
      const std::string name = kv.first.as<std::string>();
      int idx = -1;
      for (int k = 0; k < pl.size(); ++k)
        if (pl.name(k) == name) idx = k;
      if (idx < 0) rd.fail(kv.first, "unknown parameter '" + name + "' in train.bounds");
      std::vector<double> lohi;
      rd.list(b, name.c_str(), lohi);
      if (lohi.size() != 2 || !(lohi[0] < lohi[1])) rd.fail(kv.second, "bounds need [lower, upper] with lower < upper");
      t.bounds[idx] = Bound{lohi[0], lohi[1]};
    }
  }

  const YAML::Node ct = section(root, "control");
  rd.keys(ct, "control", {"epochs", "lr", "optimizer", "force_scale", "seed", "init_noise"});
  ControlConfig& c = cfg.control;
  rd.get(ct, "epochs", c.epochs);
  rd.get(ct, "lr", c.lr);
  c.optimizer = read_optimizer(rd, ct, c.optimizer);
  rd.get(ct, "force_scale", c.force_scale);
  rd.get(ct, "seed", c.seed);
  rd.get(ct, "init_noise", c.init_noise);
  rd.require(c.epochs >= 0, ct, "epochs", "must be non-negative");
  rd.require(c.lr > 0.0, ct, "lr", "must be positive");
  rd.require(c.force_scale > 0.0, ct, "force_scale", "must be positive");
  rd.require(c.init_noise >= 0.0, ct, "init_noise", "must be non-negative");
  if (c.optimizer == OptimizerKind::Lbfgs) rd.fail(ct["optimizer"], "control supports sgd and adam");
  return cfg;
}

Config load_config(const std::string& path) { return parse_config(read_text(path), path); }

// ---------------------------------------------------------------- files

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename into " + path);
  }
}

// ---------------------------------------------------------------- frames

namespace {

constexpr const char* kFrameMagic = "# yarnsim-frames v1";
constexpr const char* kHeaderFull = "frame,node,x,y,z,u,v";
constexpr const char* kHeaderLagrangian = "frame,node,x,y,z";

void put_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  out += buf;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t k = 0; k <= line.size(); ++k) {
    if (k == line.size() || line[k] == ',') {
      out.push_back(line.substr(start, k - start));
      start = k + 1;
    }
  }
  return out;
}

}  // namespace

FrameData frames_from_trajectory(const Fabric& f, const std::vector<State>& traj, bool eulerian) {
  FrameData d;
  d.nodes = f.num_nodes();
  d.eulerian = eulerian;
  const auto& lay = f.layout();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const State& s : traj) {
    VecX p(3 * d.nodes), m = VecX::Constant(2 * d.nodes, nan);
    for (int n = 0; n < d.nodes; ++n) {
      p.segment<3>(3 * n) = f.pos(s.q, n);
      if (eulerian && lay.interior[n]) {
        m[2 * n] = s.q[lay.u(n)];
        m[2 * n + 1] = s.q[lay.v(n)];
      }
    }
    d.positions.push_back(p);
    d.material.push_back(m);
  }
  return d;
}

std::string format_frames(const FrameData& d) {
  std::string out;
  out.reserve(static_cast<size_t>(d.frames()) * d.nodes * (d.eulerian ? 120 : 75) + 64);
  out += kFrameMagic;
  out += '\n';
  out += d.eulerian ? kHeaderFull : kHeaderLagrangian;
  out += '\n';
  for (int t = 0; t < d.frames(); ++t) {
    for (int n = 0; n < d.nodes; ++n) {
      out += std::to_string(t);
      out += ',';
      out += std::to_string(n);
      for (int k = 0; k < 3; ++k) {
        out += ',';
        put_double(out, d.positions[t][3 * n + k]);
      }
      if (d.eulerian) {
        for (int k = 0; k < 2; ++k) {
          out += ',';
          const double v = d.material[t][2 * n + k];
          if (!std::isnan(v)) put_double(out, v);
        }
      }
      out += '\n';
    }
  }
  return out;
}

FrameData parse_frames(const std::string& text, const std::string& source) {
  std::vector<std::string_view> lines;
  {
    std::string_view all(text);
    size_t start = 0;
    while (start < all.size()) {
      const size_t end = all.find('\n', start);
      if (end == std::string_view::npos) {
        lines.push_back(all.substr(start));
        break;
      }
      lines.push_back(all.substr(start, end - start));
      start = end + 1;
    }
  }
  if (lines.empty() || lines[0] != kFrameMagic) throw InputError(source, 1, "missing '# yarnsim-frames v1' header");
  if (lines.size() < 2) throw InputError(source, 2, "missing column header");
  FrameData d;
  if (lines[1] == kHeaderFull)
    d.eulerian = true;
  else if (lines[1] == kHeaderLagrangian)
    d.eulerian = false;
  else
    throw InputError(source, 2, "column header must be '" + std::string(kHeaderFull) + "' or '" + kHeaderLagrangian + "'");
  const size_t ncol = d.eulerian ? 7 : 5;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> pos, mat;
  int frame = 0, expect_node = 0;
  auto close_frame = [&](int line_no) {
    if (d.frames() == 0) d.nodes = expect_node;
    if (expect_node != d.nodes)
      throw InputError(source, line_no, "frame " + std::to_string(frame) + " has " + std::to_string(expect_node) +
                                            " nodes, expected " + std::to_string(d.nodes));
    d.positions.push_back(Eigen::Map<VecX>(pos.data(), static_cast<Eigen::Index>(pos.size())));
    d.material.push_back(Eigen::Map<VecX>(mat.data(), static_cast<Eigen::Index>(mat.size())));
    pos.clear();
    mat.clear();
  };

  for (size_t li = 2; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li) + 1;
    const auto f = split(lines[li]);
    if (f.size() != ncol)
      throw InputError(source, line_no, "expected " + std::to_string(ncol) + " fields, found " + std::to_string(f.size()));
    auto parse_int = [&](std::string_view s, const char* what) {
      int v = 0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw InputError(source, line_no, std::string("invalid ") + what + " '" + std::string(s) + "'");
      return v;
    };
    auto parse_double = [&](std::string_view s, const char* what) {
      double v = 0.0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw InputError(source, line_no, std::string("invalid ") + what + " '" + std::string(s) + "'");
      return v;
    };
    const int fr = parse_int(f[0], "frame");
    const int node = parse_int(f[1], "node");
    if (fr != frame) {
      if (fr != frame + 1) throw InputError(source, line_no, "frames must be consecutive from 0");
      close_frame(line_no);
      frame = fr;
      expect_node = 0;
    }
    if (node != expect_node)
      throw InputError(source, line_no, "expected node " + std::to_string(expect_node) + ", found " + std::to_string(node));
    if (d.frames() > 0 && node >= d.nodes) throw InputError(source, line_no, "node id exceeds the node count");
    for (int k = 0; k < 3; ++k) pos.push_back(parse_double(f[2 + k], "coordinate"));
    if (d.eulerian) {
      if (f[5].empty() != f[6].empty()) throw InputError(source, line_no, "u and v must both be present or both empty");
      mat.push_back(f[5].empty() ? nan : parse_double(f[5], "u"));
      mat.push_back(f[6].empty() ? nan : parse_double(f[6], "v"));
    } else {
      mat.push_back(nan);
      mat.push_back(nan);
    }
    ++expect_node;
  }
  if (expect_node == 0) throw InputError(source, static_cast<int>(lines.size()), "no records");
  close_frame(static_cast<int>(lines.size()));
  return d;
}

TrajectoryTarget target_from_frames(const Fabric& f, const FrameData& d, bool lagrangian_only) {
  if (d.nodes != f.num_nodes())
    throw InputError("frames", 0, "frame file has " + std::to_string(d.nodes) + " nodes, the fabric " +
                                      std::to_string(f.num_nodes()));
  const auto& lay = f.layout();
  const bool lag = lagrangian_only || !d.eulerian;
  TrajectoryTarget t;
  t.mask = loss_mask(f, lag);
  const State rest = f.rest_state();
  for (int k = 0; k < d.frames(); ++k) {
    VecX q = rest.q;
    for (int n = 0; n < d.nodes; ++n) {
      q.segment<3>(lay.x(n)) = d.positions[k].segment<3>(3 * n);
      if (lag || !lay.interior[n]) continue;
      if (std::isnan(d.material[k][2 * n]) || std::isnan(d.material[k][2 * n + 1]))
        throw InputError("frames", 0, "frame " + std::to_string(k) + " lacks u, v for interior node " +
                                          std::to_string(n));
      q[lay.u(n)] = d.material[k][2 * n];
      q[lay.v(n)] = d.material[k][2 * n + 1];
    }
    t.q.push_back(q);
  }
  return t;
}

std::string format_obj(const Fabric& f, const FrameData& d) {
  if (d.nodes != f.num_nodes()) throw std::invalid_argument("frame data does not match the fabric");
  std::string out = "# yarn centerlines, one object per frame\n";
  char buf[96];
  for (int t = 0; t < d.frames(); ++t) {
    out += "o frame_" + std::to_string(t) + "\n";
    for (int n = 0; n < d.nodes; ++n) {
      const auto p = d.positions[t].segment<3>(3 * n);
      std::snprintf(buf, sizeof buf, "v %.9e %.9e %.9e\n", p[0], p[1], p[2]);
      out += buf;
    }
    const int base = t * d.nodes + 1;
    for (int i = 0; i < f.rows(); ++i) {
      out += 'l';
      for (int j = 0; j < f.cols(); ++j) out += ' ' + std::to_string(base + f.node(i, j));
      out += '\n';
    }
    for (int j = 0; j < f.cols(); ++j) {
      out += 'l';
      for (int i = 0; i < f.rows(); ++i) out += ' ' + std::to_string(base + f.node(i, j));
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------- tables

std::string format_report(const ParamLayout& pl, const std::vector<Bound>& bounds, const VecX& initial,
                          const VecX& learned, const VecX* truth) {
  std::string out = "parameter,lower,upper,initial,learned,truth,rel_error\n";
  char buf[256];
  for (int k = 0; k < pl.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%s,%.9e,%.9e,%.9e,%.9e,", pl.name(k).c_str(), bounds[k].lo, bounds[k].hi,
                  initial[k], learned[k]);
    out += buf;
    if (truth) {
      const double tv = (*truth)[k];
      const double err = tv != 0.0 ? std::abs(learned[k] - tv) / std::abs(tv) : std::abs(learned[k]);
      std::snprintf(buf, sizeof buf, "%.9e,%.6e", tv, err);
      out += buf;
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

std::string format_loss(const std::vector<double>& loss) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (size_t k = 0; k < loss.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.16e\n", k, loss[k]);
    out += buf;
  }
  return out;
}

std::string format_forces(const ControlForces& c) {
  std::string out = "frame,node,fx,fy,fz\n";
  char buf[128];
  for (int t = 0; t < c.frames; ++t) {
    for (size_t k = 0; k < c.nodes.size(); ++k) {
      const Vec3 f = c.force(t, static_cast<int>(k));
      std::snprintf(buf, sizeof buf, "%d,%d,%.16e,%.16e,%.16e\n", t, c.nodes[k], f[0], f[1], f[2]);
      out += buf;
    }
  }
  return out;
}

}  // namespace yarnsim
