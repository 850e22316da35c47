#include "softsim/scene_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace softsim {

using nlohmann::json;

SolverOptions SolverConfig::options() const {
  SolverOptions o;
  o.tolerance = tolerance;
  o.max_iterations = max_iterations;
  o.line_search = line_search;
  o.step_size = step_size;
  o.psd_floor = psd_floor;
  return o;
}

namespace {

// Cursor into the scene document that knows its JSON pointer.
class Node {
 public:
  Node(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {}

  [[noreturn]] void Fail(const std::string& msg) const {
    throw InputError((ptr_.empty() ? "/" : ptr_) + ": " + msg);
  }
  [[noreturn]] void OutOfRange(const std::string& msg) const {
    throw DomainError((ptr_.empty() ? "/" : ptr_) + ": " + msg);
  }

  const json& raw() const { return j_; }
  const std::string& pointer() const { return ptr_; }

  void ExpectKeys(const std::set<std::string>& allowed) const {
    if (!j_.is_object()) Fail("expected an object");
    for (const auto& [key, value] : j_.items())
      if (!allowed.count(key)) Node(value, ptr_ + "/" + key).Fail("unknown key");
  }
  bool Has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  Node operator[](const std::string& key) const {
    if (!Has(key)) Fail("missing required key '" + key + "'");
    return Node(j_.at(key), ptr_ + "/" + key);
  }
  Node operator[](std::size_t i) const { return Node(j_.at(i), ptr_ + "/" + std::to_string(i)); }

  std::size_t ArraySize() const {
    if (!j_.is_array()) Fail("expected an array");
    return j_.size();
  }
  double Number() const {
    if (!j_.is_number()) Fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) Fail("expected a finite number");
    return v;
  }
  int Integer() const {
    if (!j_.is_number_integer()) Fail("expected an integer");
    return j_.get<int>();
  }
  bool Bool() const {
    if (!j_.is_boolean()) Fail("expected true or false");
    return j_.get<bool>();
  }
  std::string String() const {
    if (!j_.is_string()) Fail("expected a string");
    return j_.get<std::string>();
  }
  Vec3 Vector() const {
    if (ArraySize() != 3) Fail("expected 3 numbers");
    return Vec3((*this)[0].Number(), (*this)[1].Number(), (*this)[2].Number());
  }

 private:
  const json& j_;
  std::string ptr_;
};

double Get(const Node& n, const std::string& key, double fallback) {
  return n.Has(key) ? n[key].Number() : fallback;
}

template <typename T>
T ReadValue(const Node& n);
template <>
double ReadValue<double>(const Node& n) {
  return n.Number();
}
template <>
Vec3 ReadValue<Vec3>(const Node& n) {
  return n.Vector();
}

// A bare value means "constant"; otherwise {"times", "values", "interpolation"}.
template <typename T>
Schedule<T> ReadSchedule(const Node& n, Interpolation default_kind) {
  if (!n.raw().is_object()) return Schedule<T>(default_kind, {0.0}, {ReadValue<T>(n)});
  n.ExpectKeys({"times", "values", "interpolation"});
  Interpolation kind = default_kind;
  if (n.Has("interpolation")) {
    const std::string s = n["interpolation"].String();
    if (s == "linear") kind = Interpolation::kLinear;
    else if (s == "constant") kind = Interpolation::kConstant;
    else n["interpolation"].Fail("expected 'linear' or 'constant'");
  }
  const Node times = n["times"];
  const Node values = n["values"];
  std::vector<double> t;
  std::vector<T> v;
  for (std::size_t i = 0; i < times.ArraySize(); ++i) t.push_back(times[i].Number());
  for (std::size_t i = 0; i < values.ArraySize(); ++i) v.push_back(ReadValue<T>(values[i]));
  if (t.empty()) times.Fail("needs at least one knot");
  if (t.size() != v.size()) values.Fail("length differs from times");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) times[i].Fail("times must be strictly increasing");
  return Schedule<T>(kind, std::move(t), std::move(v));
}

json ToJson(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
json ScheduleJson(const Schedule<T>& s) {
  json values = json::array();
  for (const auto& v : s.values()) {
    if constexpr (std::is_same_v<T, Vec3>) values.push_back(ToJson(v));
    else values.push_back(v);
  }
  return {{"times", s.times()},
          {"values", values},
          {"interpolation", s.kind() == Interpolation::kLinear ? "linear" : "constant"}};
}

std::vector<int> VertexSet(const Scene& scene, const Node& n) {
  const std::string name = n.String();
  if (!scene.mesh.has_vertex_set(name)) n.Fail("unknown vertex set '" + name + "'");
  return scene.mesh.vertex_set(name);
}

std::vector<int> ElementSet(const Scene& scene, const Node& n) {
  const std::string name = n.String();
  if (!scene.mesh.has_element_set(name)) n.Fail("unknown element set '" + name + "'");
  return scene.mesh.element_set(name);
}

std::array<bool, 3> Axes(const Node& n) {
  if (n.ArraySize() != 3) n.Fail("expected 3 booleans");
  return {n[0].Bool(), n[1].Bool(), n[2].Bool()};
}

Scheme ReadScheme(const Node& n) {
  try {
    return SchemeFromString(n.String());
  } catch (const Error& e) {
    n.Fail(e.what());
  }
}

void ReadMaterials(Scene& scene, const Node& list) {
  if (list.ArraySize() == 0) list.Fail("at least one material region is required");
  std::vector<int> owner(scene.mesh.num_elements(), -1);
  for (std::size_t i = 0; i < list.ArraySize(); ++i) {
    const Node m = list[i];
    m.ExpectKeys({"element_set", "model", "E", "nu", "density"});
    MaterialRegion region;
    region.element_set = m["element_set"].String();
    try {
      region.material.model = MaterialModelFromString(m["model"].String());
    } catch (const Error& e) {
      m["model"].Fail(e.what());
    }
    region.material.young = m["E"].Number();
    region.material.poisson = m["nu"].Number();
    region.material.density = m["density"].Number();
    if (!(region.material.young > 0.0)) m["E"].OutOfRange("E must be positive");
    if (!(region.material.poisson >= 0.0 && region.material.poisson < 0.5))
      m["nu"].OutOfRange("nu must lie in [0, 0.5)");
    if (!(region.material.density > 0.0)) m["density"].OutOfRange("density must be positive");
    for (int e : ElementSet(scene, m["element_set"])) {
      if (owner[e] >= 0)
        m["element_set"].Fail("element " + std::to_string(e) + " already belongs to material " +
                              std::to_string(owner[e]));
      owner[e] = static_cast<int>(i);
    }
    scene.materials.push_back(region);
  }
  for (int e = 0; e < scene.mesh.num_elements(); ++e)
    if (owner[e] < 0) list.Fail("element " + std::to_string(e) + " has no material");
}

void ReadStepControl(StepControl& s, const Node& n) {
  n.ExpectKeys({"dt_init", "dt_min", "dt_max", "cfl_coefficient", "growth", "grow_after",
                "retry_limit", "adaptive"});
  s.dt_init = Get(n, "dt_init", s.dt_init);
  s.dt_min = Get(n, "dt_min", s.dt_min);
  s.dt_max = Get(n, "dt_max", std::max(s.dt_max, s.dt_init));
  s.cfl_coefficient = Get(n, "cfl_coefficient", s.cfl_coefficient);
  s.growth = Get(n, "growth", s.growth);
  if (n.Has("grow_after")) s.grow_after = n["grow_after"].Integer();
  if (n.Has("retry_limit")) s.retry_limit = n["retry_limit"].Integer();
  if (n.Has("adaptive")) s.adaptive = n["adaptive"].Bool();
  if (!(0.0 < s.dt_min && s.dt_min <= s.dt_init && s.dt_init <= s.dt_max))
    n.OutOfRange("need 0 < dt_min <= dt_init <= dt_max");
  if (s.cfl_coefficient < 0.0) n["cfl_coefficient"].OutOfRange("must be >= 0");
  if (s.growth < 1.0) n["growth"].OutOfRange("must be >= 1");
  if (s.grow_after < 1) n["grow_after"].OutOfRange("must be >= 1");
  if (s.retry_limit < 0) n["retry_limit"].OutOfRange("must be >= 0");
}

void ReadSolver(SolverConfig& s, const Node& n) {
  n.ExpectKeys({"tolerance", "max_iterations", "line_search", "step_size", "psd_floor"});
  s.tolerance = Get(n, "tolerance", s.tolerance);
  if (n.Has("max_iterations")) s.max_iterations = n["max_iterations"].Integer();
  if (n.Has("line_search")) s.line_search = n["line_search"].Bool();
  s.step_size = Get(n, "step_size", s.step_size);
  s.psd_floor = Get(n, "psd_floor", s.psd_floor);
  if (!(s.tolerance > 0.0)) n["tolerance"].OutOfRange("must be positive");
  if (s.max_iterations < 1) n["max_iterations"].OutOfRange("must be >= 1");
  if (!(s.step_size > 0.0 && s.step_size <= 1.0)) n["step_size"].OutOfRange("must lie in (0, 1]");
  if (s.psd_floor < 0.0) n["psd_floor"].OutOfRange("must be >= 0");
}

}  // namespace

Scene ParseSceneJson(const json& j, const std::filesystem::path& base_dir) {
  const Node root(j, "");
  root.ExpectKeys({"version", "mesh", "materials", "gravity", "damping", "integrator", "settle",
                   "step_control", "solver", "pins", "planes", "pressures", "loads", "muscles",
                   "point_masses", "duration", "initial_velocity", "output"});
  Scene scene;
  scene.version = root["version"].String();
  {
    const std::size_t dot = scene.version.find('.');
    int major = -1;
    try {
      major = std::stoi(scene.version.substr(0, dot));
    } catch (const std::exception&) {
      root["version"].Fail("expected \"<major>.<minor>\"");
    }
    if (major != kSceneSchemaMajor)
      root["version"].Fail("unsupported schema major version " + std::to_string(major));
  }

  const Node mesh = root["mesh"];
  if (mesh.raw().is_string()) {
    std::filesystem::path p = mesh.String();
    if (p.is_relative()) p = base_dir / p;
    scene.mesh_path = std::filesystem::weakly_canonical(p).string();
    try {
      scene.mesh = LoadMesh(scene.mesh_path);
    } catch (const Error& e) {
      throw Error(e.kind(), "/mesh: " + std::string(e.what()));
    }
  } else {
    try {
      scene.mesh = MeshFromJson(mesh.raw());
    } catch (const Error& e) {
      throw Error(e.kind(), "/mesh: " + std::string(e.what()));
    }
  }

  ReadMaterials(scene, root["materials"]);
  if (root.Has("gravity")) scene.gravity = root["gravity"].Vector();
  scene.damping = Get(root, "damping", 0.0);
  if (scene.damping < 0.0) root["damping"].OutOfRange("damping must be >= 0");
  if (root.Has("integrator")) scene.integrator = ReadScheme(root["integrator"]);
  if (root.Has("settle")) {
    const Node s = root["settle"];
    s.ExpectKeys({"integrator", "until"});
    SettlePhase phase;
    if (s.Has("integrator")) phase.scheme = ReadScheme(s["integrator"]);
    phase.until = s["until"].Number();
    if (phase.until < 0.0) s["until"].OutOfRange("must be >= 0");
    scene.settle = phase;
  }
  if (root.Has("step_control")) ReadStepControl(scene.step, root["step_control"]);
  if (root.Has("solver")) ReadSolver(scene.solver, root["solver"]);

  if (root.Has("pins")) {
    const Node list = root["pins"];
    for (std::size_t i = 0; i < list.ArraySize(); ++i) {
      const Node n = list[i];
      n.ExpectKeys({"vertex_set", "displacement", "axes"});
      PinSpec pin;
      pin.vertex_set = n["vertex_set"].String();
      pin.vertices = VertexSet(scene, n["vertex_set"]);
      if (n.Has("displacement"))
        pin.displacement = ReadSchedule<Vec3>(n["displacement"], Interpolation::kLinear);
      if (n.Has("axes")) pin.axes = Axes(n["axes"]);
      scene.pins.push_back(std::move(pin));
    }
  }
  if (root.Has("planes")) {
    const Node list = root["planes"];
    for (std::size_t i = 0; i < list.ArraySize(); ++i) {
      const Node n = list[i];
      n.ExpectKeys({"normal", "point", "activation_margin"});
      ContactPlane plane;
      plane.normal = n["normal"].Vector();
      if (std::abs(plane.normal.norm() - 1.0) > 1e-9) n["normal"].OutOfRange("normal must be unit length");
      if (n.Has("point")) plane.point = n["point"].Vector();
      plane.activation_margin = Get(n, "activation_margin", plane.activation_margin);
      if (plane.activation_margin < 0.0) n["activation_margin"].OutOfRange("must be >= 0");
      scene.planes.push_back(plane);
    }
  }
  if (root.Has("pressures")) {
    const Node list = root["pressures"];
    for (std::size_t i = 0; i < list.ArraySize(); ++i) {
      const Node n = list[i];
      n.ExpectKeys({"triangle_set", "pressure"});
      PressureActuator a;
      a.triangle_set = n["triangle_set"].String();
      if (!scene.mesh.has_triangle_set(a.triangle_set))
        n["triangle_set"].Fail("unknown triangle set '" + a.triangle_set + "'");
      a.triangles = scene.mesh.triangle_set(a.triangle_set);
      a.pressure = ReadSchedule<double>(n["pressure"], Interpolation::kLinear);
      scene.pressures.push_back(std::move(a));
    }
  }
  if (root.Has("loads")) {
    const Node list = root["loads"];
    for (std::size_t i = 0; i < list.ArraySize(); ++i) {
      const Node n = list[i];
      n.ExpectKeys({"vertex_set", "force", "release_time"});
      PointLoad load;
      load.vertex_set = n["vertex_set"].String();
      load.vertices = VertexSet(scene, n["vertex_set"]);
      load.force = ReadSchedule<Vec3>(n["force"], Interpolation::kConstant);
      if (n.Has("release_time")) load.release_time = n["release_time"].Number();
      scene.loads.push_back(std::move(load));
    }
  }
  if (root.Has("muscles")) {
    const Node list = root["muscles"];
    for (std::size_t i = 0; i < list.ArraySize(); ++i) {
      const Node n = list[i];
      n.ExpectKeys({"element_set", "stiffness", "direction", "activation"});
      MuscleSpec m;
      m.element_set = n["element_set"].String();
      m.elements = ElementSet(scene, n["element_set"]);
      m.stiffness = n["stiffness"].Number();
      if (m.stiffness < 0.0) n["stiffness"].OutOfRange("stiffness must be >= 0");
      if (n.Has("direction")) m.direction = n["direction"].Vector();
      if (std::abs(m.direction.norm() - 1.0) > 1e-9)
        n["direction"].OutOfRange("direction must be unit length");
      if (n.Has("activation"))
        m.activation = ReadSchedule<double>(n["activation"], Interpolation::kConstant);
      scene.muscles.push_back(std::move(m));
    }
  }
  if (root.Has("point_masses")) {
    const Node list = root["point_masses"];
    for (std::size_t i = 0; i < list.ArraySize(); ++i) {
      const Node n = list[i];
      n.ExpectKeys({"vertex_set", "mass"});
      PointMass pm;
      pm.vertex_set = n["vertex_set"].String();
      VertexSet(scene, n["vertex_set"]);
      pm.mass = n["mass"].Number();
      if (!(pm.mass > 0.0)) n["mass"].OutOfRange("mass must be positive");
      scene.point_masses.push_back(pm);
    }
  }

  scene.duration = root["duration"].Number();
  if (scene.duration < 0.0) root["duration"].OutOfRange("duration must be >= 0");
  if (root.Has("initial_velocity")) scene.initial_velocity = root["initial_velocity"].Vector();

  if (root.Has("output")) {
    const Node n = root["output"];
    n.ExpectKeys({"interval", "marker_sets", "record_all_vertices", "record_energies"});
    scene.output.interval = Get(n, "interval", 0.0);
    if (scene.output.interval < 0.0) n["interval"].OutOfRange("must be >= 0");
    if (n.Has("marker_sets")) {
      const Node sets = n["marker_sets"];
      for (std::size_t i = 0; i < sets.ArraySize(); ++i) {
        VertexSet(scene, sets[i]);
        scene.output.marker_sets.push_back(sets[i].String());
      }
    }
    if (n.Has("record_all_vertices"))
      scene.output.record_all_vertices = n["record_all_vertices"].Bool();
    if (n.Has("record_energies")) scene.output.record_energies = n["record_energies"].Bool();
  }

  // Every vertex needs mass or the step Hessian is singular.
  VecX mass = VecX::Zero(scene.mesh.num_vertices());
  for (int e = 0; e < scene.mesh.num_elements(); ++e)
    for (int v : scene.mesh.element_nodes(e)) mass(v) = 1.0;
  for (const auto& pm : scene.point_masses)
    for (int v : scene.mesh.vertex_set(pm.vertex_set)) mass(v) = 1.0;
  for (int v = 0; v < scene.mesh.num_vertices(); ++v)
    if (mass(v) == 0.0)
      throw InputError("/mesh: vertex " + std::to_string(v) +
                       " belongs to no element and has no point mass");
  return scene;
}

Scene ParseScene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scene file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return ParseSceneJson(j, path.parent_path());
}

namespace {

json SceneJson(const Scene& scene, bool inline_mesh) {
  json j;
  j["version"] = scene.version;
  if (inline_mesh || scene.mesh_path.empty()) {
    j["mesh"] = MeshToJson(scene.mesh);
  } else {
    j["mesh"] = scene.mesh_path;
  }
  j["materials"] = json::array();
  for (const auto& r : scene.materials)
    j["materials"].push_back({{"element_set", r.element_set},
                              {"model", ToString(r.material.model)},
                              {"E", r.material.young},
                              {"nu", r.material.poisson},
                              {"density", r.material.density}});
  j["gravity"] = ToJson(scene.gravity);
  j["damping"] = scene.damping;
  j["integrator"] = ToString(scene.integrator);
  if (scene.settle)
    j["settle"] = {{"integrator", ToString(scene.settle->scheme)}, {"until", scene.settle->until}};
  const StepControl& s = scene.step;
  j["step_control"] = {{"dt_init", s.dt_init},         {"dt_min", s.dt_min},
                       {"dt_max", s.dt_max},           {"cfl_coefficient", s.cfl_coefficient},
                       {"growth", s.growth},           {"grow_after", s.grow_after},
                       {"retry_limit", s.retry_limit}, {"adaptive", s.adaptive}};
  const SolverConfig& o = scene.solver;
  j["solver"] = {{"tolerance", o.tolerance},     {"max_iterations", o.max_iterations},
                 {"line_search", o.line_search}, {"step_size", o.step_size},
                 {"psd_floor", o.psd_floor}};
  j["pins"] = json::array();
  for (const auto& p : scene.pins)
    j["pins"].push_back({{"vertex_set", p.vertex_set},
                         {"displacement", ScheduleJson(p.displacement)},
                         {"axes", p.axes}});
  j["planes"] = json::array();
  for (const auto& p : scene.planes)
    j["planes"].push_back({{"normal", ToJson(p.normal)},
                           {"point", ToJson(p.point)},
                           {"activation_margin", p.activation_margin}});
  j["pressures"] = json::array();
  for (const auto& p : scene.pressures)
    j["pressures"].push_back(
        {{"triangle_set", p.triangle_set}, {"pressure", ScheduleJson(p.pressure)}});
  j["loads"] = json::array();
  for (const auto& l : scene.loads) {
    json load = {{"vertex_set", l.vertex_set}, {"force", ScheduleJson(l.force)}};
    if (l.release_time) load["release_time"] = *l.release_time;
    j["loads"].push_back(load);
  }
  j["muscles"] = json::array();
  for (const auto& m : scene.muscles)
    j["muscles"].push_back({{"element_set", m.element_set},
                            {"stiffness", m.stiffness},
                            {"direction", ToJson(m.direction)},
                            {"activation", ScheduleJson(m.activation)}});
  j["point_masses"] = json::array();
  for (const auto& pm : scene.point_masses)
    j["point_masses"].push_back({{"vertex_set", pm.vertex_set}, {"mass", pm.mass}});
  j["duration"] = scene.duration;
  j["initial_velocity"] = ToJson(scene.initial_velocity);
  j["output"] = {{"interval", scene.output.interval},
                 {"marker_sets", scene.output.marker_sets},
                 {"record_all_vertices", scene.output.record_all_vertices},
                 {"record_energies", scene.output.record_energies}};
  return j;
}

}  // namespace

json NormalizedScene(const Scene& scene) { return SceneJson(scene, false); }

void SaveScene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write scene file " + path.string());
  out << NormalizedScene(scene).dump(2) << "\n";
}

std::string SceneHash(const Scene& scene) {
  // FNV-1a over the normalized scene with the mesh inlined, so moving the
  // mesh file does not change the hash but editing it does.
  const std::string text = SceneJson(scene, true).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

System BuildSystem(const Scene& scene) {
  std::vector<Material> element_material(scene.mesh.num_elements());
  for (const auto& r : scene.materials)
    for (int e : scene.mesh.element_set(r.element_set)) element_material[e] = r.material;
  System system;
  system.energy = MakeEnergyModel(scene.mesh, std::move(element_material), scene.muscles,
                                  scene.gravity);
  for (const auto& pm : scene.point_masses)
    for (int v : scene.mesh.vertex_set(pm.vertex_set)) system.energy.vertex_mass(v) += pm.mass;
  system.pressures = scene.pressures;
  system.loads = scene.loads;
  system.pins = scene.pins;
  system.planes = scene.planes;
  system.damping = scene.damping;
  system.reference = scene.mesh.positions();
  return system;
}

std::vector<int> MarkerVertices(const Scene& scene) {
  std::vector<int> out;
  for (const auto& name : scene.output.marker_sets)
    for (int v : scene.mesh.vertex_set(name)) out.push_back(v);
  return out;
}

std::vector<std::string> MarkerNames(const Scene& scene) {
  std::vector<std::string> out;
  for (const auto& name : scene.output.marker_sets)
    for (int v : scene.mesh.vertex_set(name)) out.push_back(name + "/" + std::to_string(v));
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

namespace {

constexpr const char* kTrajectoryFormat = "softsim-trajectory";
constexpr int kTrajectoryVersion = 1;

}  // namespace

bool Frame::operator==(const Frame& o) const {
  if (t != o.t || energy != o.energy || max_penetration != o.max_penetration ||
      iterations != o.iterations || positions.size() != o.positions.size())
    return false;
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (positions[i] != o.positions[i]) return false;
  return true;
}

bool Trajectory::operator==(const Trajectory& o) const {
  return scene_hash == o.scene_hash && dofs == o.dofs && all_vertices == o.all_vertices &&
         markers == o.markers && marker_vertices == o.marker_vertices && frames == o.frames;
}

void WriteTrajectoryHeader(const Trajectory& traj, std::ostream& os) {
  json h = {{"format", kTrajectoryFormat},
            {"version", kTrajectoryVersion},
            {"scene_hash", traj.scene_hash},
            {"dofs", traj.dofs},
            {"record", traj.all_vertices ? "all" : "markers"},
            {"markers", traj.markers},
            {"marker_vertices", traj.marker_vertices}};
  os << h.dump() << "\n";
}

void WriteFrame(const Frame& frame, std::ostream& os) {
  json x = json::array();
  for (const auto& p : frame.positions) x.push_back(ToJson(p));
  json j = {{"t", frame.t}, {"x", x}};
  if (frame.energy)
    j["energy"] = {{"kinetic", frame.energy->kinetic},
                   {"elastic", frame.energy->elastic},
                   {"gravity", frame.energy->gravity},
                   {"muscle", frame.energy->muscle}};
  j["max_penetration"] = frame.max_penetration;
  j["iterations"] = frame.iterations;
  os << j.dump() << "\n";
}

void WriteTrajectory(const Trajectory& traj, std::ostream& os) {
  WriteTrajectoryHeader(traj, os);
  for (const auto& f : traj.frames) WriteFrame(f, os);
}

void WriteTrajectory(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write trajectory " + path.string());
  WriteTrajectory(traj, out);
}

Trajectory ReadTrajectory(std::istream& is) {
  Trajectory traj;
  std::string line;
  int line_no = 0;
  auto fail = [&line_no](const std::string& msg) -> Error {
    return InputError("trajectory line " + std::to_string(line_no) + ": " + msg);
  };
  auto parse = [&](const std::string& text) {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw fail(e.what());
    }
  };

  if (!std::getline(is, line)) throw InputError("trajectory: empty input, header missing");
  ++line_no;
  try {
    const json h = parse(line);
    if (!h.is_object() || h.value("format", "") != kTrajectoryFormat)
      throw fail("not a trajectory header");
    if (h.at("version").get<int>() != kTrajectoryVersion)
      throw fail("unsupported trajectory version");
    traj.scene_hash = h.at("scene_hash").get<std::string>();
    traj.dofs = h.at("dofs").get<int>();
    const std::string record = h.at("record").get<std::string>();
    if (record != "all" && record != "markers") throw fail("record must be 'all' or 'markers'");
    traj.all_vertices = record == "all";
    traj.markers = h.at("markers").get<std::vector<std::string>>();
    traj.marker_vertices = h.at("marker_vertices").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw fail(e.what());
  }

  if (traj.markers.size() != traj.marker_vertices.size())
    throw fail("markers and marker_vertices differ in length");
  const std::size_t shape = traj.all_vertices ? static_cast<std::size_t>(traj.dofs / 3)
                                              : traj.markers.size();
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse(line);
    Frame f;
    try {
      f.t = j.at("t").get<double>();
      for (const auto& p : j.at("x")) {
        if (p.size() != 3) throw fail("positions must have 3 components");
        f.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
      }
      if (j.contains("energy")) {
        const json& e = j.at("energy");
        f.energy = EnergyRecord{e.at("kinetic").get<double>(), e.at("elastic").get<double>(),
                                e.at("gravity").get<double>(), e.at("muscle").get<double>()};
      }
      f.max_penetration = j.at("max_penetration").get<double>();
      f.iterations = j.at("iterations").get<int>();
    } catch (const json::exception& e) {
      throw fail(e.what());
    }
    if (!traj.frames.empty() && !(f.t > traj.frames.back().t))
      throw fail("frame times must be strictly increasing");
    if (f.positions.size() != shape)
      throw fail("frame has " + std::to_string(f.positions.size()) + " positions, header implies " +
                 std::to_string(shape));
    traj.frames.push_back(std::move(f));
  }
  return traj;
}

Trajectory ReadTrajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trajectory " + path.string());
  try {
    return ReadTrajectory(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace softsim
