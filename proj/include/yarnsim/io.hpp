#pragma once
// Configuration files, trajectory frame files, OBJ centerline export and the
// result tables written by the command-line tool.

#include <stdexcept>
#include <string>
#include <vector>

#include "yarnsim/estimation.hpp"

namespace yarnsim {

// Malformed input; line is 1-based, 0 when unknown.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& source, int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

// ---------------------------------------------------------------- config
//
// YAML with the sections fabric, params, scenario, sim, model, train and
// control; every section and key is optional and unknown keys are rejected.
// See configs/ for annotated examples.

struct Config {
  Scenario scenario;
  double shear = 1000.0;   // true shear modulus
  double friction = 0.5;   // true friction coefficient
  bool export_obj = false;
  TrainConfig train;
  bool report_truth = false;  // estimate: the config's parameters are the truth
  ControlConfig control;

  // Parameter vector described by the fabric materials and params section.
  VecX theta() const { return params_from_spec(scenario.fabric, shear, friction); }
};

Config parse_config(const std::string& text, const std::string& source = "<config>");
Config load_config(const std::string& path);

// ---------------------------------------------------------------- files

std::string read_text(const std::string& path);
// Writes to a temporary file next to `path`, then renames it into place.
void write_text_atomic(const std::string& path, const std::string& text);

// ---------------------------------------------------------------- frames
//
// # yarnsim-frames v1
// frame,node,x,y,z,u,v
// one record per node per frame, %.16e values, u and v empty on boundary
// nodes. Lagrangian-only files drop the u,v columns.

struct FrameData {
  int nodes = 0;
  bool eulerian = true;
  std::vector<VecX> positions;  // per frame, 3 per node
  std::vector<VecX> material;   // per frame, (u, v) per node; NaN where absent
  int frames() const { return static_cast<int>(positions.size()); }
};

FrameData frames_from_trajectory(const Fabric& f, const std::vector<State>& traj, bool eulerian = true);
std::string format_frames(const FrameData& d);
FrameData parse_frames(const std::string& text, const std::string& source = "<frames>");

// Loss target from a frame file; files without Eulerian columns always give a
// Lagrangian-only mask.
TrajectoryTarget target_from_frames(const Fabric& f, const FrameData& d, bool lagrangian_only);

// One `o frame_k` object per frame with rows·cols vertices and rows + cols
// polylines (one per weft row, then one per warp column).
std::string format_obj(const Fabric& f, const FrameData& d);

// ---------------------------------------------------------------- tables

// parameter,lower,upper,initial,learned,truth,rel_error (truth columns blank
// when `truth` is null).
std::string format_report(const ParamLayout& pl, const std::vector<Bound>& bounds, const VecX& initial,
                          const VecX& learned, const VecX* truth);
// epoch,loss with one row per entry.
std::string format_loss(const std::vector<double>& loss);
// frame,node,fx,fy,fz with one row per frame and controlled node.
std::string format_forces(const ControlForces& c);

}  // namespace yarnsim
