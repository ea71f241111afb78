// yarnsim: simulate | estimate | gradcheck | control
//
// Exit codes: 0 ok, 1 usage, 2 configuration or input, 3 numerical failure,
// 4 gradient check failure.

#include <CLI11.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "yarnsim/gradcheck.hpp"
#include "yarnsim/io.hpp"

using namespace yarnsim;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kNumerical = 3, kGradcheck = 4 };

struct Options {
  std::string config, out, gt;
  std::optional<int> frames, steps;
  std::optional<std::uint64_t> seed;
};

std::string sibling(const std::string& out, const char* ext) {
  std::filesystem::path p(out);
  p.replace_extension(ext);
  return p.string();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Config load(const Options& o) {
  Config cfg = load_config(o.config);
  if (o.steps) {
    if (*o.steps < 0) throw InputError("--steps", 0, "must be non-negative");
    cfg.scenario.steps = *o.steps;
  }
  if (o.frames) {
    if (*o.frames < 1) throw InputError("--frames", 0, "must be at least 1");
    cfg.train.frames = *o.frames;
  }
  if (o.seed) {
    cfg.train.seed = *o.seed;
    cfg.control.seed = *o.seed;
  }
  return cfg;
}

int run_simulate(const Options& o) {
  const Config cfg = load(o);
  const Experiment ex(cfg.scenario);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<StepInfo> info;
  const auto traj = ex.sim().simulate(ex.initial_state(), cfg.theta(), cfg.scenario.steps, nullptr, nullptr, &info);
  const double wall = seconds_since(t0);
  double min_du = ex.fabric().min_eulerian_gap(traj.front().q);
  for (const auto& s : info) min_du = std::min(min_du, s.min_gap);
  const FrameData frames = frames_from_trajectory(ex.fabric(), traj);
  write_text_atomic(o.out, format_frames(frames));
  if (cfg.export_obj) write_text_atomic(sibling(o.out, ".obj"), format_obj(ex.fabric(), frames));
  std::printf("simulate: steps=%d frames=%d nodes=%d wall=%.3fs min_du=%.6e\n", cfg.scenario.steps,
              frames.frames(), frames.nodes, wall, min_du);
  return kOk;
}

int run_estimate(const Options& o) {
  const Config cfg = load(o);
  const Experiment ex(cfg.scenario);
  const FrameData gt = parse_frames(read_text(o.gt), o.gt);
  const TrajectoryTarget target = target_from_frames(ex.fabric(), gt, cfg.train.lagrangian_only);
  const VecX reference = cfg.theta();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = estimate(ex, target, cfg.train, reference);
  const double wall = seconds_since(t0);
  const VecX* truth = cfg.report_truth ? &reference : nullptr;
  write_text_atomic(o.out, format_report(ex.param_layout(), cfg.train.bounds, r.initial, r.theta, truth));
  write_text_atomic(sibling(o.out, ".loss.csv"), format_loss(r.loss));
  std::printf("estimate: optimizer=%s epochs=%d frames=%d initial_loss=%.6e final_loss=%.6e wall=%.3fs\n",
              optimizer_name(cfg.train.optimizer).c_str(), cfg.train.epochs, cfg.train.frames,
              r.loss.empty() ? r.final_loss : r.loss.front(), r.final_loss, wall);
  return kOk;
}

int run_gradcheck(const Options& o) {
  const Config cfg = load(o);
  const FabricSpec& spec = cfg.scenario.fabric;
  if (spec.rows > 10 || spec.cols > 10 || cfg.scenario.steps > 10 || cfg.scenario.steps < 1)
    throw InputError(o.config, 0, "gradcheck needs at most 10x10 nodes and 1 to 10 steps");
  JacobianCheckOptions jo;
  if (const char* fault = std::getenv("YARNSIM_GRADCHECK_FAULT")) jo.flip = fault;
  if (o.seed) jo.seed = *o.seed;
  const VecX theta = cfg.theta();
  std::vector<CheckLine> lines = check_force_jacobians(spec, cfg.scenario.constants, theta, jo);
  for (auto& c : check_energy_consistency(spec, cfg.scenario.constants, theta, jo)) lines.push_back(c);
  const Experiment ex(cfg.scenario);
  for (auto& c : check_rollout_gradient(ex, theta)) lines.push_back(c);
  int failed = 0;
  for (const auto& c : lines) {
    std::printf("%s\n", format_check(c).c_str());
    failed += !c.pass();
  }
  std::printf("gradcheck: %s (%d checks, %d failed)\n", failed ? "FAIL" : "PASS", static_cast<int>(lines.size()),
              failed);
  return failed ? kGradcheck : kOk;
}

int run_control(const Options& o) {
  const Config cfg = load(o);
  const Experiment ex(cfg.scenario);
  const auto t0 = std::chrono::steady_clock::now();
  const ControlResult r = learn_control(ex, cfg.theta(), cfg.control);
  const double wall = seconds_since(t0);
  write_text_atomic(o.out, format_forces(r.forces));
  write_text_atomic(sibling(o.out, ".loss.csv"), format_loss(r.loss));
  std::printf("control: epochs=%d initial_loss=%.6e final_loss=%.6e wall=%.3fs\n", cfg.control.epochs,
              r.loss.front(), r.loss.back(), wall);
  return kOk;
}

int apply_thread_cap() {
  const char* env = std::getenv("YARNSIM_THREADS");
  if (!env) return kOk;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    std::fprintf(stderr, "error: YARNSIM_THREADS must be a positive integer\n");
    return kUsage;
  }
  Eigen::setNbThreads(static_cast<int>(n));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable yarn-level cloth simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool out) {
    sub->add_option("--config", o.config, "configuration file (YAML)")->required()->check(CLI::ExistingFile);
    if (out) sub->add_option("--out", o.out, "output path")->required();
    sub->add_option("--steps", o.steps, "override sim.steps");
    sub->add_option("--seed", o.seed, "override the training / control seed");
  };
  CLI::App* sim = app.add_subcommand("simulate", "forward rollout to a frame file");
  add_common(sim, true);
  CLI::App* est = app.add_subcommand("estimate", "learn physical parameters from a frame file");
  add_common(est, true);
  est->add_option("--gt", o.gt, "ground-truth frame file")->required()->check(CLI::ExistingFile);
  est->add_option("--frames", o.frames, "override train.frames");
  CLI::App* gc = app.add_subcommand("gradcheck", "analytic versus finite-difference derivatives");
  add_common(gc, false);
  CLI::App* ctl = app.add_subcommand("control", "learn corner forces for the throwing task");
  add_common(ctl, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (const int rc = apply_thread_cap(); rc != kOk) return rc;

  try {
    if (*sim) return run_simulate(o);
    if (*est) return run_estimate(o);
    if (*gc) return run_gradcheck(o);
    if (*ctl) return run_control(o);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const FabricError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  }
  return kUsage;
}
