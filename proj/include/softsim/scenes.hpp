#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "softsim/scene_io.hpp"

namespace softsim {

using Voxel = Eigen::Array3i;

/// One hex per voxel of edge h, shared lattice vertices, and the triangle
/// set "boundary": every face not shared by two voxels, split in two and
/// oriented out of the solid. Voxel i becomes element i.
MeshModel VoxelMesh(const std::vector<Voxel>& voxels, double h, const Vec3& origin = Vec3::Zero());

/// Box [origin, origin + size] split into cells. Adds vertex sets
/// x_min, x_max, y_min, y_max, z_min, z_max and the triangle set "boundary".
/// The tet variant cuts every cell into six tets that share diagonals.
MeshModel BoxHexMesh(const Vec3& size, const Voxel& cells, const Vec3& origin = Vec3::Zero());
MeshModel BoxTetMesh(const Vec3& size, const Voxel& cells, const Vec3& origin = Vec3::Zero());

/// 3x3x3 voxels of edge h with the centre removed. Triangle sets "outer" and
/// "cavity" are both oriented out of the solid.
MeshModel HollowCubeMesh(double h);

// The cantilever: a 10 x 3 x 3 cm block clamped at x = 0 (vertex set
// "clamp") with a tip mass hanging from the x = L face ("tip"). Backward Euler
// settles the loaded beam, the load is released and Crank-Nicolson follows.
struct CantileverOptions {
  Voxel cells = Voxel(10, 3, 3);
  bool tets = false;
  MaterialModel model = MaterialModel::kNeoHookean;
  double young = 234.9e3;  // Pa
  double poisson = 0.439;
  double density = 1210.0;  // kg/m^3
  double damping = 9.11;    // 1/s
  double tip_mass = 0.21;   // kg, weight spread over the tip face
  bool gravity = true;
  double release_time = 1.0;  // s
  double duration = 2.0;      // s
  double dt = 0.01;           // s
  double output_interval = 0.01;  // 100 Hz
};

Scene CantileverScene(const CantileverOptions& options = {});

// 16 cm cube on the ground poked from above by a pinned patch of top vertices
// that moves down and back up.
Scene PokeCubeScene();

// Jumping leg activation: the ventral group starts at a_v and relaxes at t_v;
// the dorsal group is relaxed until t_d and then contracts at a_d.
struct LegActivation {
  double a_v = 0.0;
  double a_d = 0.0;
  double t_v = 0.5;
  double t_d = 0.5;
};

// Voxel leg, 2 voxels deep (x) by 1 wide (y) by 10 tall (z), edge 5 cm, so
// 0.5 m tall. Front column (+x) is "ventral", back column is "dorsal".
Scene LegScene(const LegActivation& activation = {});
void SetLegActivation(Scene& leg, const LegActivation& activation);

/// Maximum over recorded frames of the lowest vertex height (z).
double LegObjective(const Scene& leg);

// Hollow cube pressurized through its cavity, ramped to `pressure` over 0.1 s.
Scene PressureCubeScene(double pressure = 2e3);

// Cube of 2x2x2 voxels dropped onto z >= 0 from `height`.
Scene DropCubeScene(double height = 0.02);

std::vector<std::string> BundledSceneNames();
Scene BundledScene(const std::string& name);

/// Writes <dir>/<name>.json referencing <dir>/<name>.mesh.json by relative path.
void WriteBundledScene(const Scene& scene, const std::filesystem::path& dir,
                       const std::string& name);

}  // namespace softsim
