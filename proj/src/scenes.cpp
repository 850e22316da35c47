#include "softsim/scenes.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "softsim/timestepping.hpp"

namespace softsim {

namespace {

struct LatticeLess {
  bool operator()(const Voxel& a, const Voxel& b) const {
    if (a.z() != b.z()) return a.z() < b.z();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.x() < b.x();
  }
};

// Hex corner offsets in node order: bottom face counter-clockwise, then top.
const Voxel kCorner[8] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                          {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// Faces as corner offsets, counter-clockwise seen from outside and starting
// at the lowest corner, so the 0-2 split follows the min-max diagonal.
struct Face {
  Voxel neighbour;
  Voxel corners[4];
};
const Face kFaces[6] = {
    {{-1, 0, 0}, {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}}},
    {{1, 0, 0}, {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}}},
    {{0, -1, 0}, {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}}},
    {{0, 1, 0}, {{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}}},
    {{0, 0, -1}, {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}}},
    {{0, 0, 1}, {{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}},
};

struct Lattice {
  std::map<Voxel, int, LatticeLess> index;
  std::vector<Vec3> vertices;

  Lattice(const std::vector<Voxel>& voxels, double h, const Vec3& origin) {
    std::set<Voxel, LatticeLess> points;
    for (const auto& v : voxels)
      for (const auto& c : kCorner) points.insert(v + c);
    for (const auto& p : points) {
      index[p] = static_cast<int>(vertices.size());
      vertices.push_back(origin + h * p.cast<double>().matrix());
    }
  }
  int operator()(const Voxel& p) const { return index.at(p); }
};

// Boundary quads of a voxel set, split into triangles.
std::vector<std::pair<Voxel, Triangle>> BoundaryTriangles(const std::vector<Voxel>& voxels,
                                                          const Lattice& lattice) {
  const std::set<Voxel, LatticeLess> solid(voxels.begin(), voxels.end());
  std::vector<std::pair<Voxel, Triangle>> out;
  for (const auto& v : voxels)
    for (const auto& f : kFaces) {
      if (solid.count(v + f.neighbour)) continue;
      int q[4];
      for (int i = 0; i < 4; ++i) q[i] = lattice(v + f.corners[i]);
      out.push_back({f.neighbour, {q[0], q[1], q[2]}});
      out.push_back({f.neighbour, {q[0], q[2], q[3]}});
    }
  return out;
}

std::vector<Voxel> BoxVoxels(const Voxel& cells) {
  std::vector<Voxel> voxels;
  for (int k = 0; k < cells.z(); ++k)
    for (int j = 0; j < cells.y(); ++j)
      for (int i = 0; i < cells.x(); ++i) voxels.emplace_back(i, j, k);
  return voxels;
}

void AddFaceSets(MeshModel& mesh, const Vec3& lo, const Vec3& hi) {
  const char* names[3][2] = {{"x_min", "x_max"}, {"y_min", "y_max"}, {"z_min", "z_max"}};
  for (int a = 0; a < 3; ++a) {
    const double tol = 1e-9 * (hi(a) - lo(a));
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (std::abs(mesh.vertices[v](a) - lo(a)) <= tol) mesh.vertex_sets[names[a][0]].push_back(v);
      if (std::abs(mesh.vertices[v](a) - hi(a)) <= tol) mesh.vertex_sets[names[a][1]].push_back(v);
    }
  }
}

MeshModel ScaledBox(const Vec3& size, const Voxel& cells, const Vec3& origin) {
  if ((cells < 1).any()) throw DomainError("box needs at least one cell per axis");
  // Build on a unit lattice, then stretch each axis to the requested size.
  MeshModel mesh = VoxelMesh(BoxVoxels(cells), 1.0);
  for (auto& p : mesh.vertices)
    p = origin + p.cwiseProduct(size).cwiseQuotient(cells.cast<double>().matrix());
  AddFaceSets(mesh, origin, origin + size);
  return mesh;
}

Material MakeMaterial(MaterialModel model, double young, double poisson, double density) {
  Material m;
  m.model = model;
  m.young = young;
  m.poisson = poisson;
  m.density = density;
  return m;
}

void FixedStep(Scene& scene, double dt) {
  scene.step.dt_init = dt;
  scene.step.dt_max = dt;
  scene.step.dt_min = dt * 1e-4;
}

}  // namespace

MeshModel VoxelMesh(const std::vector<Voxel>& voxels, double h, const Vec3& origin) {
  if (!(h > 0.0)) throw DomainError("voxel edge must be positive");
  const Lattice lattice(voxels, h, origin);
  MeshModel mesh;
  mesh.vertices = lattice.vertices;
  for (const auto& v : voxels) {
    Hex hex;
    for (int c = 0; c < 8; ++c) hex[c] = lattice(v + kCorner[c]);
    mesh.hexes.push_back(hex);
  }
  for (const auto& [normal, tri] : BoundaryTriangles(voxels, lattice))
    mesh.triangle_sets["boundary"].push_back(tri);
  ValidateMesh(mesh);
  return mesh;
}

MeshModel BoxHexMesh(const Vec3& size, const Voxel& cells, const Vec3& origin) {
  MeshModel mesh = ScaledBox(size, cells, origin);
  ValidateMesh(mesh);
  return mesh;
}

MeshModel BoxTetMesh(const Vec3& size, const Voxel& cells, const Vec3& origin) {
  MeshModel mesh = ScaledBox(size, cells, origin);
  // Six tets per cell along the paths min -> max corner; neighbours agree on
  // every face diagonal because each one runs from a face's min corner.
  static const int kPaths[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<Tet> tets;
  for (const auto& hex : mesh.hexes) {
    auto corner = [&](int dx, int dy, int dz) {
      for (int c = 0; c < 8; ++c)
        if (kCorner[c].x() == dx && kCorner[c].y() == dy && kCorner[c].z() == dz) return hex[c];
      return -1;
    };
    for (const auto& path : kPaths) {
      Voxel p(0, 0, 0);
      Tet t;
      t[0] = corner(0, 0, 0);
      for (int s = 0; s < 3; ++s) {
        p(path[s]) = 1;
        t[s + 1] = corner(p.x(), p.y(), p.z());
      }
      const Vec3& a = mesh.vertices[t[0]];
      Mat3 d;
      d << mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a, mesh.vertices[t[3]] - a;
      if (d.determinant() < 0.0) std::swap(t[2], t[3]);
      tets.push_back(t);
    }
  }
  mesh.hexes.clear();
  mesh.tets = std::move(tets);
  ValidateMesh(mesh);
  return mesh;
}

MeshModel HollowCubeMesh(double h) {
  std::vector<Voxel> voxels;
  for (const auto& v : BoxVoxels(Voxel(3, 3, 3)))
    if (!(v == Voxel(1, 1, 1)).all()) voxels.push_back(v);
  const Lattice lattice(voxels, h, Vec3::Zero());
  MeshModel mesh = VoxelMesh(voxels, h);
  mesh.triangle_sets.clear();
  for (const auto& [normal, tri] : BoundaryTriangles(voxels, lattice)) {
    // Outer faces lie on the box boundary; the rest bound the cavity.
    bool outer = true;
    for (int v : tri) {
      const Vec3 c = mesh.vertices[v] / h;
      const int a = normal.x() != 0 ? 0 : (normal.y() != 0 ? 1 : 2);
      const double side = normal(a) > 0 ? 3.0 : 0.0;
      if (std::abs(c(a) - side) > 1e-9) outer = false;
    }
    mesh.triangle_sets[outer ? "outer" : "cavity"].push_back(tri);
  }
  ValidateMesh(mesh);
  return mesh;
}

Scene CantileverScene(const CantileverOptions& o) {
  const Vec3 size(0.10, 0.03, 0.03);
  Scene scene;
  scene.mesh = o.tets ? BoxTetMesh(size, o.cells) : BoxHexMesh(size, o.cells);
  scene.mesh.vertex_sets["clamp"] = scene.mesh.vertex_sets.at("x_min");
  scene.mesh.vertex_sets["tip"] = scene.mesh.vertex_sets.at("x_max");
  scene.materials.push_back({"all", MakeMaterial(o.model, o.young, o.poisson, o.density)});
  scene.gravity = o.gravity ? Vec3(0, 0, -9.81) : Vec3::Zero();
  scene.damping = o.damping;
  scene.integrator = Scheme::kCrankNicolson;
  scene.settle = SettlePhase{Scheme::kBackwardEuler, o.release_time};
  FixedStep(scene, o.dt);

  PinSpec clamp;
  clamp.vertex_set = "clamp";
  clamp.vertices = scene.mesh.vertex_set("clamp");
  scene.pins.push_back(clamp);

  PointLoad load;
  load.vertex_set = "tip";
  load.vertices = scene.mesh.vertex_set("tip");
  const double per_vertex = o.tip_mass * 9.81 / static_cast<double>(load.vertices.size());
  load.force = VectorSchedule::Constant(Vec3(0, 0, -per_vertex));
  load.release_time = o.release_time;
  scene.loads.push_back(load);

  scene.duration = o.duration;
  scene.output.interval = o.output_interval;
  scene.output.marker_sets = {"tip"};
  scene.output.record_energies = true;
  return scene;
}

Scene PokeCubeScene() {
  const double edge = 0.16;
  Scene scene;
  scene.mesh = BoxHexMesh(Vec3::Constant(edge), Voxel(4, 4, 4));
  // Poker: the 3 x 3 patch of vertices in the middle of the top face.
  for (int v : scene.mesh.vertex_set("z_max")) {
    const Vec3& p = scene.mesh.vertices[v];
    if (std::abs(p.x() - edge / 2) < 0.3 * edge && std::abs(p.y() - edge / 2) < 0.3 * edge)
      scene.mesh.vertex_sets["poker"].push_back(v);
  }
  // Fitted PokeFlex foam values; density is not identified there, 100 kg/m^3 assumed.
  scene.materials.push_back(
      {"all", MakeMaterial(MaterialModel::kStableNeoHookean, 1346.0, 0.018, 100.0)});
  scene.damping = 170.0;
  scene.integrator = Scheme::kCrankNicolson;
  FixedStep(scene, 0.01);

  PinSpec poke;
  poke.vertex_set = "poker";
  poke.vertices = scene.mesh.vertex_set("poker");
  poke.displacement = VectorSchedule(Interpolation::kLinear, {0.0, 0.5, 1.0},
                                     {Vec3::Zero(), Vec3(0, 0, -0.04), Vec3::Zero()});
  scene.pins.push_back(poke);
  scene.planes.push_back(ContactPlane{});

  scene.duration = 1.0;
  scene.output.interval = 0.01;
  scene.output.record_all_vertices = true;
  return scene;
}

void SetLegActivation(Scene& leg, const LegActivation& a) {
  for (auto& m : leg.muscles) {
    if (m.element_set == "ventral")
      m.activation = ScalarSchedule(Interpolation::kConstant, {0.0, a.t_v}, {a.a_v, 0.0});
    else if (m.element_set == "dorsal")
      m.activation = ScalarSchedule(Interpolation::kConstant, {0.0, a.t_d}, {0.0, a.a_d});
  }
}

Scene LegScene(const LegActivation& activation) {
  const double h = 0.05;
  std::vector<Voxel> voxels;
  for (int k = 0; k < 10; ++k) {
    voxels.emplace_back(0, 0, k);  // back
    voxels.emplace_back(1, 0, k);  // front
  }
  Scene scene;
  scene.mesh = VoxelMesh(voxels, h);
  for (int e = 0; e < static_cast<int>(voxels.size()); ++e)
    scene.mesh.element_sets[voxels[e].x() == 0 ? "dorsal" : "ventral"].push_back(e);
  for (int v = 0; v < scene.mesh.num_vertices(); ++v)
    if (scene.mesh.vertices[v].z() < 1e-12) scene.mesh.vertex_sets["foot"].push_back(v);

  // Assumed material (not identified anywhere): stiff rubber, water density.
  scene.materials.push_back(
      {"all", MakeMaterial(MaterialModel::kStableNeoHookean, 8e5, 0.3, 1000.0)});
  for (const char* group : {"dorsal", "ventral"}) {
    MuscleSpec m;
    m.element_set = group;
    m.elements = scene.mesh.element_set(group);
    m.stiffness = 4e5;
    m.direction = Vec3::UnitZ();
    scene.muscles.push_back(m);
  }
  SetLegActivation(scene, activation);

  scene.integrator = Scheme::kBackwardEuler;
  FixedStep(scene, 0.005);
  scene.planes.push_back(ContactPlane{});
  scene.initial_velocity = Vec3(0.5, 0.0, 0.0);
  scene.duration = 1.5;
  scene.output.interval = 0.01;
  scene.output.marker_sets = {"foot"};
  return scene;
}

double LegObjective(const Scene& leg) {
  Scene s = leg;
  s.output.record_all_vertices = true;
  double best = -std::numeric_limits<double>::infinity();
  SimulateHooks hooks;
  hooks.on_frame = [&best](const Frame& f) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& p : f.positions) lowest = std::min(lowest, p.z());
    best = std::max(best, lowest);
  };
  const System system = BuildSystem(s);
  Simulate(s, system, hooks);
  return best;
}

Scene PressureCubeScene(double pressure) {
  Scene scene;
  scene.mesh = HollowCubeMesh(0.02);
  scene.materials.push_back({"all", MakeMaterial(MaterialModel::kNeoHookean, 5e4, 0.3, 1000.0)});
  scene.gravity = Vec3::Zero();
  scene.damping = 5.0;
  FixedStep(scene, 0.01);
  PressureActuator a;
  a.triangle_set = "cavity";
  a.triangles = scene.mesh.triangle_set("cavity");
  a.pressure = ScalarSchedule(Interpolation::kLinear, {0.0, 0.1}, {0.0, pressure});
  scene.pressures.push_back(a);
  scene.duration = 0.5;
  scene.output.interval = 0.01;
  scene.output.record_all_vertices = true;
  scene.output.record_energies = true;
  return scene;
}

Scene DropCubeScene(double height) {
  Scene scene;
  scene.mesh = BoxHexMesh(Vec3::Constant(0.1), Voxel(2, 2, 2), Vec3(0, 0, height));
  scene.materials.push_back({"all", MakeMaterial(MaterialModel::kNeoHookean, 1e5, 0.3, 1000.0)});
  scene.damping = 10.0;
  FixedStep(scene, 0.01);
  scene.planes.push_back(ContactPlane{});
  scene.duration = 2.0;
  scene.output.interval = 0.01;
  scene.output.record_all_vertices = true;
  scene.output.record_energies = true;
  return scene;
}

std::vector<std::string> BundledSceneNames() {
  return {"cantilever", "poke-cube", "leg", "pressure-cube", "drop-cube"};
}

Scene BundledScene(const std::string& name) {
  if (name == "cantilever") return CantileverScene();
  if (name == "poke-cube") return PokeCubeScene();
  if (name == "leg") return LegScene(LegActivation{0.69, 1.05, 0.54, 0.27});
  if (name == "pressure-cube") return PressureCubeScene();
  if (name == "drop-cube") return DropCubeScene();
  throw InputError("unknown bundled scene '" + name + "'");
}

void WriteBundledScene(const Scene& scene, const std::filesystem::path& dir,
                       const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string mesh_file = name + ".mesh.json";
  SaveMesh(scene.mesh, dir / mesh_file);
  nlohmann::json j = NormalizedScene(scene);
  j["mesh"] = mesh_file;
  std::ofstream out(dir / (name + ".json"));
  if (!out) throw InputError("cannot write " + (dir / (name + ".json")).string());
  out << j.dump(2) << "\n";
}

}  // namespace softsim
