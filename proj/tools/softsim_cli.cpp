// softsim command-line front end. Exit codes: 0 ok, 1 check or solver
// failure, 2 input error, 3 data mismatch, 4 domain violation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "softsim/gradcheck.hpp"
#include "softsim/metrics.hpp"
#include "softsim/scene_io.hpp"
#include "softsim/scenes.hpp"
#include "softsim/timestepping.hpp"

namespace {

using namespace softsim;

enum Exit { kOk = 0, kCheckFailed = 1, kInput = 2, kMismatch = 3, kDomain = 4 };

int ExitFor(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::kInput: return kInput;
    case Error::Kind::kMismatch: return kMismatch;
    case Error::Kind::kDomain: return kDomain;
    case Error::Kind::kNumerical: return kCheckFailed;
  }
  return kCheckFailed;
}

// Four significant digits, never in exponent form: 5.000, 0.000, 1414.
std::string FourDigits(double v) {
  if (v == 0.0 || !std::isfinite(v)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
  }
  const int before = static_cast<int>(std::floor(std::log10(std::abs(v)))) + 1;
  const int decimals = std::max(0, 4 - before);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string scene;
  std::string out;
  bool verbose = false;
  std::uint64_t seed = 0;
  std::string diagnostics;
};

int RunSimulate(const SimulateArgs& a) {
  const Scene scene = ParseScene(a.scene);
  std::ofstream out(a.out);
  if (!out) throw InputError("cannot write " + a.out);
  out << std::setprecision(17);

  std::ofstream diag;
  SolverOptions options = scene.solver.options();
  if (!a.diagnostics.empty()) {
    diag.open(a.diagnostics);
    if (!diag) throw InputError("cannot write " + a.diagnostics);
    options.diagnostics = &diag;
  }

  Trajectory header;
  header.scene_hash = SceneHash(scene);
  header.dofs = scene.mesh.num_dofs();
  header.all_vertices = scene.output.record_all_vertices;
  header.markers = MarkerNames(scene);
  header.marker_vertices = MarkerVertices(scene);
  WriteTrajectoryHeader(header, out);
  if (scene.duration == 0.0) {
    // Nothing is integrated, so nothing is recorded.
    if (a.verbose) std::cerr << "duration 0: wrote header only to " << a.out << "\n";
    return kOk;
  }

  SimulateHooks hooks;
  hooks.solver = &options;
  int frames = 0;
  hooks.on_frame = [&](const Frame& f) {
    WriteFrame(f, out);
    out.flush();
    ++frames;
    if (a.verbose)
      std::cerr << "t=" << f.t << " iterations=" << f.iterations
                << " max_penetration=" << f.max_penetration << "\n";
  };
  try {
    Simulate(scene, hooks);
  } catch (const Error& e) {
    std::cerr << a.scene << ": " << e.what() << " (" << frames << " frames written to " << a.out
              << ")\n";
    return ExitFor(e);
  }
  if (a.verbose) std::cerr << "wrote " << frames << " frames to " << a.out << "\n";
  return kOk;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  std::string scene;
  int samples = 10;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
  bool corrupt = false;
};

int RunGradcheck(const GradcheckArgs& a) {
  const Scene scene = ParseScene(a.scene);
  if (a.samples <= 0) {
    std::cerr << "warning: --samples " << a.samples << ", nothing to check\n";
    return kOk;
  }
  const System system = BuildSystem(scene);
  GradCheckOptions o;
  o.samples = a.samples;
  o.seed = a.seed;
  o.corrupt_gradient = a.corrupt;
  bool ok = true;
  std::cout << std::left << std::setw(26) << "term" << std::setw(16) << "gradient" << "hessian\n";
  for (const auto& t : CheckDerivatives(system, scene.duration, o)) {
    const bool pass = t.gradient_error < a.tolerance && t.hessian_error < a.tolerance;
    ok = ok && pass;
    std::cout << std::left << std::setw(26) << t.term << std::setw(16) << std::setprecision(3)
              << std::scientific << t.gradient_error << std::setw(12) << t.hessian_error
              << (pass ? "ok" : "FAIL") << std::defaultfloat << "\n";
  }
  return ok ? kOk : kCheckFailed;
}

// --- metrics ----------------------------------------------------------------

struct MetricsArgs {
  std::vector<std::string> sim;
  std::vector<std::string> ref;
  bool json = false;
  bool grid = false;
};

void CheckAligned(const Trajectory& s, const Trajectory& r, const std::string& which) {
  if (s.frames.size() != r.frames.size())
    throw MismatchError(which + ": " + std::to_string(s.frames.size()) + " vs " +
                        std::to_string(r.frames.size()) + " frames");
  for (std::size_t i = 0; i < s.frames.size(); ++i)
    if (std::abs(s.frames[i].t - r.frames[i].t) > 1e-9 * std::max(1.0, std::abs(r.frames[i].t)))
      throw MismatchError(which + ": frame " + std::to_string(i) + " times differ");
}

int RunMetrics(const std::string& kind, const MetricsArgs& a) {
  if (a.sim.size() != a.ref.size())
    throw MismatchError("need one --ref per --sim");
  double value = 0.0;
  if (kind == "marker") {
    std::vector<MarkerSeries> sim, ref;
    for (std::size_t j = 0; j < a.sim.size(); ++j) {
      const Trajectory s = ReadTrajectory(std::filesystem::path(a.sim[j]));
      const Trajectory r = ReadTrajectory(std::filesystem::path(a.ref[j]));
      CheckAligned(s, r, a.sim[j]);
      MarkerSeries ms, mr;
      for (const auto& f : s.frames) ms.push_back(f.positions);
      for (const auto& f : r.frames) mr.push_back(f.positions);
      sim.push_back(std::move(ms));
      ref.push_back(std::move(mr));
    }
    value = MarkerError(sim, ref);
  } else {
    std::vector<CloudPair> series;
    for (std::size_t j = 0; j < a.sim.size(); ++j) {
      const Trajectory s = ReadTrajectory(std::filesystem::path(a.sim[j]));
      const Trajectory r = ReadTrajectory(std::filesystem::path(a.ref[j]));
      CheckAligned(s, r, a.sim[j]);
      for (std::size_t t = 0; t < s.frames.size(); ++t)
        series.push_back({s.frames[t].positions, r.frames[t].positions});
    }
    value = ChamferError(series, a.grid ? NearestMethod::kGrid : NearestMethod::kBruteForce);
  }
  const double mm = 1e3 * value;
  if (a.json) {
    nlohmann::json j = {{"metric", kind}, {"value_m", value}, {"value_mm", mm}};
    std::cout << j.dump() << "\n";
  } else {
    std::cout << FourDigits(mm) << " mm\n";
  }
  return kOk;
}

// --- objective --------------------------------------------------------------

int RunObjective(const std::string& scene_path, const std::vector<double>& p) {
  if (p.size() != 4) throw InputError("--params needs a_v a_d t_v t_d");
  const char* names[4] = {"a_v", "a_d", "t_v", "t_d"};
  for (int i = 0; i < 4; ++i) {
    const bool amplitude = i < 2;
    const double lo = amplitude ? 0.0 : 0.1, hi = amplitude ? 2.0 : 0.9;
    if (!(p[i] >= lo && p[i] <= hi)) {
      std::ostringstream msg;
      msg << names[i] << " = " << p[i] << " outside [" << lo << ", " << hi << "]";
      throw DomainError(msg.str());
    }
  }
  Scene scene = ParseScene(scene_path);
  int groups = 0;
  for (const auto& m : scene.muscles) groups += m.element_set == "ventral" || m.element_set == "dorsal";
  if (groups != 2) throw InputError(scene_path + ": objective needs 'ventral' and 'dorsal' muscles");
  SetLegActivation(scene, LegActivation{p[0], p[1], p[2], p[3]});
  std::cout << std::setprecision(17) << LegObjective(scene) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softsim: finite-element soft-body simulation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scene and write its trajectory");
  simulate->add_option("--scene", sim.scene, "Scene JSON file")->required();
  simulate->add_option("--out", sim.out, "Trajectory output path")->required();
  simulate->add_flag("--verbose,-v", sim.verbose, "Per-frame progress on stderr");
  simulate->add_option("--seed", sim.seed, "Accepted for interface symmetry; simulation is deterministic");
  simulate->add_option("--diagnostics", sim.diagnostics, "Write per-iteration solver records (JSON lines)");

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference audit of every energy term");
  gradcheck->add_option("--scene", gc.scene, "Scene JSON file")->required();
  gradcheck->add_option("--samples", gc.samples, "Random configurations per term")->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "Random seed")->capture_default_str();
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt)->group("");  // negative-control hook

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "Marker or Chamfer error between trajectories (mm)");
  metrics->require_subcommand(1);
  for (const char* kind : {"marker", "chamfer"}) {
    auto* sub = metrics->add_subcommand(kind, std::string(kind) == "marker"
                                                  ? "Mean marker distance"
                                                  : "Mean per-frame root Chamfer distance");
    sub->add_option("--sim", ma.sim, "Simulated trajectory (repeat for several)")->required();
    sub->add_option("--ref", ma.ref, "Reference trajectory, same order as --sim")->required();
    sub->add_flag("--json", ma.json, "Machine-readable output");
    if (std::string(kind) == "chamfer")
      sub->add_flag("--grid", ma.grid, "Grid-accelerated nearest neighbours (same result)");
  }

  std::string gen_out = "scenes";
  std::vector<std::string> gen_names;
  auto* generate = app.add_subcommand("generate", "Write the bundled example scenes");
  generate->add_option("--out", gen_out, "Output directory")->capture_default_str();
  generate->add_option("--name", gen_names, "Only these scenes")
      ->check(CLI::IsMember(BundledSceneNames()));

  std::string obj_scene;
  std::vector<double> obj_params;
  auto* objective = app.add_subcommand("objective", "Jump height of the leg scene for an activation");
  objective->add_option("--scene", obj_scene, "Leg scene JSON file")->required();
  objective->add_option("--params", obj_params, "a_v a_d t_v t_d")->required()->expected(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*simulate) return RunSimulate(sim);
    if (*gradcheck) return RunGradcheck(gc);
    if (*metrics) return RunMetrics(metrics->get_subcommands().front()->get_name(), ma);
    if (*generate) {
      if (gen_names.empty()) gen_names = BundledSceneNames();
      for (const auto& name : gen_names) {
        WriteBundledScene(BundledScene(name), gen_out, name);
        std::cout << (std::filesystem::path(gen_out) / (name + ".json")).string() << "\n";
      }
      return kOk;
    }
    if (*objective) return RunObjective(obj_scene, obj_params);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kOk;
}
