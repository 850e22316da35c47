#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "softsim/system.hpp"

namespace softsim {

inline constexpr int kSceneSchemaMajor = 1;

struct MaterialRegion {
  std::string element_set;
  Material material;
};

struct StepControl {
  double dt_init = 1e-2;  // s
  double dt_min = 1e-6;
  double dt_max = 1e-2;
  double cfl_coefficient = 0.0;  // 0 disables the CFL cap
  double growth = 1.5;
  int grow_after = 5;  // consecutive successes before growing
  int retry_limit = 8;
  bool adaptive = true;
};

struct SolverConfig {
  double tolerance = 1e-6;
  int max_iterations = 100;
  bool line_search = true;
  double step_size = 1.0;
  double psd_floor = 0.0;

  SolverOptions options() const;
};

// Integrator used before `until`, e.g. backward Euler to settle a loaded
// body before switching to Crank-Nicolson.
struct SettlePhase {
  Scheme scheme = Scheme::kBackwardEuler;
  double until = 0.0;
};

struct PointMass {
  std::string vertex_set;
  double mass = 0.0;  // kg per vertex
};

struct OutputConfig {
  double interval = 0.0;  // s between frames; 0 records every step
  std::vector<std::string> marker_sets;
  bool record_all_vertices = false;
  bool record_energies = false;
};

struct Scene {
  std::string version = "1.0";
  std::string mesh_path;  // resolved; empty when the mesh is inline
  MeshModel mesh;
  std::vector<MaterialRegion> materials;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  double damping = 0.0;
  Scheme integrator = Scheme::kBackwardEuler;
  std::optional<SettlePhase> settle;
  StepControl step;
  SolverConfig solver;
  std::vector<PinSpec> pins;
  std::vector<ContactPlane> planes;
  std::vector<PressureActuator> pressures;
  std::vector<PointLoad> loads;
  std::vector<MuscleSpec> muscles;
  std::vector<PointMass> point_masses;
  double duration = 0.0;
  Vec3 initial_velocity = Vec3::Zero();
  OutputConfig output;

  Scheme SchemeAt(double t) const {
    return settle && t < settle->until ? settle->scheme : integrator;
  }
};

/// Parses and validates a scene. Relative mesh paths resolve against
/// `base_dir`. Unknown keys, dangling set names and out-of-range parameters
/// throw Error with a JSON pointer to the offending value.
Scene ParseSceneJson(const nlohmann::json& j, const std::filesystem::path& base_dir);
Scene ParseScene(const std::filesystem::path& path);

/// Every field with defaults filled in; parsing the dump gives the same scene.
/// The mesh is written by path when it came from a file, inline otherwise.
nlohmann::json NormalizedScene(const Scene& scene);
void SaveScene(const Scene& scene, const std::filesystem::path& path);

std::string SceneHash(const Scene& scene);

System BuildSystem(const Scene& scene);

// Vertex indices and names of the recorded markers, in file order.
std::vector<int> MarkerVertices(const Scene& scene);
std::vector<std::string> MarkerNames(const Scene& scene);

// ---------------------------------------------------------------------------
// Trajectory files: one JSON header line, then one JSON record per frame.

struct EnergyRecord {
  double kinetic = 0.0;
  double elastic = 0.0;
  double gravity = 0.0;
  double muscle = 0.0;

  double total() const { return kinetic + elastic + gravity + muscle; }
  bool operator==(const EnergyRecord&) const = default;
};

struct Frame {
  double t = 0.0;
  std::vector<Vec3> positions;
  std::optional<EnergyRecord> energy;
  double max_penetration = 0.0;
  int iterations = 0;

  bool operator==(const Frame& o) const;
};

struct Trajectory {
  std::string scene_hash;
  int dofs = 0;
  bool all_vertices = false;
  std::vector<std::string> markers;
  std::vector<int> marker_vertices;
  std::vector<Frame> frames;

  bool operator==(const Trajectory& o) const;
};

void WriteTrajectoryHeader(const Trajectory& traj, std::ostream& os);
void WriteFrame(const Frame& frame, std::ostream& os);
void WriteTrajectory(const Trajectory& traj, std::ostream& os);
void WriteTrajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory ReadTrajectory(std::istream& is);
Trajectory ReadTrajectory(const std::filesystem::path& path);

}  // namespace softsim
