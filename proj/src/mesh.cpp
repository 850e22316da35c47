#include "softsim/mesh.hpp"

#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace softsim {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

// Reference-cube corner signs for the hex node ordering.
constexpr int kHexSign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};

constexpr int kHexEdges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                  {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
constexpr int kTetEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

// dN_a/dxi for trilinear shape functions at reference point xi.
Eigen::Matrix<double, 8, 3> HexShapeDerivatives(const Vec3& xi) {
  Eigen::Matrix<double, 8, 3> d;
  for (int a = 0; a < 8; ++a) {
    const double sx = kHexSign[a][0], sy = kHexSign[a][1], sz = kHexSign[a][2];
    const double fx = 1.0 + sx * xi.x(), fy = 1.0 + sy * xi.y(), fz = 1.0 + sz * xi.z();
    d(a, 0) = 0.125 * sx * fy * fz;
    d(a, 1) = 0.125 * fx * sy * fz;
    d(a, 2) = 0.125 * fx * fy * sz;
  }
  return d;
}

Mat3 HexJacobian(const MeshModel& mesh, const Hex& hex, const Eigen::Matrix<double, 8, 3>& dn) {
  Mat3 j = Mat3::Zero();
  for (int a = 0; a < 8; ++a) j += mesh.vertices[hex[a]] * dn.row(a);
  return j;
}

std::array<Vec3, 8> HexGaussPoints() {
  std::array<Vec3, 8> pts;
  for (int a = 0; a < 8; ++a)
    pts[a] = Vec3(kHexSign[a][0] * kGauss, kHexSign[a][1] * kGauss, kHexSign[a][2] * kGauss);
  return pts;
}

Mat3 TetShape(const std::vector<Vec3>& v, const Tet& t) {
  Mat3 dm;
  dm.col(0) = v[t[1]] - v[t[0]];
  dm.col(1) = v[t[2]] - v[t[0]];
  dm.col(2) = v[t[3]] - v[t[0]];
  return dm;
}

MatX BuildDeformationHessian(const MatX& shape_gradients) {
  const int n = static_cast<int>(shape_gradients.rows());
  MatX b = MatX::Zero(9, 3 * n);
  // F_ab = sum_c x_{c,a} G_{c,b}  =>  dF_ab / dx_{c,d} = delta_ad G_{c,b}
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < 3; ++a)
      for (int col = 0; col < 3; ++col) b(3 * a + col, 3 * c + a) = shape_gradients(c, col);
  return b;
}

std::string Ctx(const std::string& what, int e) {
  std::ostringstream os;
  os << what << " (element " << e << ")";
  return os.str();
}

void ValidateTriangleSet(const std::string& name, const std::vector<Triangle>& tris,
                         const std::vector<Vec3>& vertices) {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  }
  bool closed = true;
  bool consistent = true;
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    const int back = rev == directed.end() ? 0 : rev->second;
    if (count + back != 2) closed = false;
    if (count != 1 || back != 1) consistent = false;
  }
  if (!closed) return;  // open surfaces carry no orientation invariant
  if (!consistent)
    throw InputError("triangle set '" + name + "' is closed but inconsistently oriented");
  Vec3 sum = Vec3::Zero();
  double area = 0.0;
  for (const auto& t : tris) {
    const Vec3 n = SurfaceNormal(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    sum += n;
    area += n.norm();
  }
  if (sum.norm() >= 1e-9 * area)
    throw InputError("triangle set '" + name + "' fails the closed-surface normal identity");
}

}  // namespace

std::span<const int> MeshModel::element_nodes(int e) const {
  if (!is_hex(e)) return std::span<const int>(tets[e]);
  return std::span<const int>(hexes[e - tets.size()]);
}

std::vector<int> MeshModel::vertex_set(const std::string& name) const {
  auto it = vertex_sets.find(name);
  if (it != vertex_sets.end()) return it->second;
  if (name == "all") {
    std::vector<int> all(vertices.size());
    for (int i = 0; i < num_vertices(); ++i) all[i] = i;
    return all;
  }
  throw InputError("unknown vertex set '" + name + "'");
}

std::vector<int> MeshModel::element_set(const std::string& name) const {
  auto it = element_sets.find(name);
  if (it != element_sets.end()) return it->second;
  if (name == "all") {
    std::vector<int> all(num_elements());
    for (int i = 0; i < num_elements(); ++i) all[i] = i;
    return all;
  }
  throw InputError("unknown element set '" + name + "'");
}

const std::vector<Triangle>& MeshModel::triangle_set(const std::string& name) const {
  auto it = triangle_sets.find(name);
  if (it == triangle_sets.end()) throw InputError("unknown triangle set '" + name + "'");
  return it->second;
}

bool MeshModel::has_vertex_set(const std::string& name) const {
  return name == "all" || vertex_sets.count(name) > 0;
}
bool MeshModel::has_element_set(const std::string& name) const {
  return name == "all" || element_sets.count(name) > 0;
}
bool MeshModel::has_triangle_set(const std::string& name) const {
  return triangle_sets.count(name) > 0;
}

VecX MeshModel::positions() const {
  VecX x(num_dofs());
  for (int v = 0; v < num_vertices(); ++v) x.segment<3>(3 * v) = vertices[v];
  return x;
}

void ValidateMesh(MeshModel& mesh) {
  const int nv = mesh.num_vertices();
  auto check_index = [nv](int i, const std::string& where) {
    if (i < 0 || i >= nv)
      throw InputError("vertex index " + std::to_string(i) + " out of range in " + where);
  };
  for (const auto& v : mesh.vertices)
    if (!v.allFinite()) throw InputError("non-finite vertex coordinate");

  auto check_distinct = [](std::span<const int> nodes, int e) {
    std::set<int> s(nodes.begin(), nodes.end());
    if (s.size() != nodes.size()) throw InputError(Ctx("repeated vertex in element", e));
  };

  mesh.reordered_tets.clear();
  for (int e = 0; e < static_cast<int>(mesh.tets.size()); ++e) {
    Tet& t = mesh.tets[e];
    for (int i : t) check_index(i, Ctx("tet", e));
    check_distinct(t, e);
    const Mat3 dm = TetShape(mesh.vertices, t);
    const double det = dm.determinant();
    double scale = 0.0;
    for (const auto& ed : kTetEdges)
      scale = std::max(scale, (mesh.vertices[t[ed[0]]] - mesh.vertices[t[ed[1]]]).norm());
    if (std::abs(det) <= 1e-12 * scale * scale * scale)
      throw InputError(Ctx("degenerate (zero-volume) tet", e));
    if (det < 0.0) {
      std::swap(t[2], t[3]);
      mesh.reordered_tets.push_back(e);
    }
  }
  if (!mesh.reordered_tets.empty()) {
    std::clog << "warning: reordered " << mesh.reordered_tets.size()
              << " negatively oriented tet(s)\n";
  }

  const int ntet = static_cast<int>(mesh.tets.size());
  const auto gauss = HexGaussPoints();
  for (int h = 0; h < static_cast<int>(mesh.hexes.size()); ++h) {
    const Hex& hex = mesh.hexes[h];
    const int e = ntet + h;
    for (int i : hex) check_index(i, Ctx("hex", e));
    check_distinct(hex, e);
    double scale = 0.0;
    for (const auto& ed : kHexEdges)
      scale = std::max(scale, (mesh.vertices[hex[ed[0]]] - mesh.vertices[hex[ed[1]]]).norm());
    for (const auto& xi : gauss) {
      const double det = HexJacobian(mesh, hex, HexShapeDerivatives(xi)).determinant();
      if (det <= 1e-12 * scale * scale * scale)
        throw InputError(Ctx("degenerate or inverted hex", e));
    }
  }

  for (const auto& [name, ids] : mesh.vertex_sets)
    for (int i : ids) check_index(i, "vertex set '" + name + "'");
  for (const auto& [name, ids] : mesh.element_sets)
    for (int i : ids)
      if (i < 0 || i >= mesh.num_elements())
        throw InputError("element index " + std::to_string(i) + " out of range in element set '" +
                         name + "'");
  for (const auto& [name, tris] : mesh.triangle_sets) {
    for (const auto& t : tris) {
      for (int i : t) check_index(i, "triangle set '" + name + "'");
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        throw InputError("repeated vertex in triangle set '" + name + "'");
    }
    ValidateTriangleSet(name, tris, mesh.vertices);
  }
}

MeshModel MeshFromJson(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {"vertices",    "tets",          "hexes",
                                              "vertex_sets", "triangle_sets", "element_sets"};
  if (!j.is_object()) throw InputError("mesh: expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kKeys.count(key)) throw InputError("mesh: unknown key '/" + key + "'");
  MeshModel mesh;
  try {
    for (const auto& v : j.at("vertices")) {
      if (v.size() != 3) throw InputError("mesh: vertex must have 3 coordinates");
      mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    if (j.contains("tets")) mesh.tets = j["tets"].get<std::vector<Tet>>();
    if (j.contains("hexes")) mesh.hexes = j["hexes"].get<std::vector<Hex>>();
    if (j.contains("vertex_sets"))
      mesh.vertex_sets = j["vertex_sets"].get<std::map<std::string, std::vector<int>>>();
    if (j.contains("triangle_sets"))
      mesh.triangle_sets =
          j["triangle_sets"].get<std::map<std::string, std::vector<Triangle>>>();
    if (j.contains("element_sets"))
      mesh.element_sets = j["element_sets"].get<std::map<std::string, std::vector<int>>>();
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("mesh: ") + ex.what());
  }
  ValidateMesh(mesh);
  return mesh;
}

nlohmann::json MeshToJson(const MeshModel& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y(), v.z()});
  j["tets"] = mesh.tets;
  j["hexes"] = mesh.hexes;
  j["vertex_sets"] = mesh.vertex_sets;
  j["triangle_sets"] = mesh.triangle_sets;
  j["element_sets"] = mesh.element_sets;
  return j;
}

MeshModel LoadMesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mesh file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw InputError("mesh " + path.string() + ": " + ex.what());
  }
  return MeshFromJson(j);
}

void SaveMesh(const MeshModel& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write mesh file " + path.string());
  out << MeshToJson(mesh).dump() << "\n";
}

RestData RestPrecompute(const MeshModel& mesh, std::span<const double> densities) {
  if (static_cast<int>(densities.size()) != mesh.num_elements())
    throw MismatchError("one density per element required");
  RestData rest;
  rest.vertex_mass = VecX::Zero(mesh.num_vertices());
  rest.elements.resize(mesh.num_elements());

  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!(densities[e] > 0.0)) throw DomainError(Ctx("density must be positive", e));
    ElementRest& er = rest.elements[e];
    const auto nodes = mesh.element_nodes(e);
    if (!mesh.is_hex(e)) {
      const Mat3 dm = TetShape(mesh.vertices, mesh.tets[e]);
      const double det = dm.determinant();
      if (!(det > 0.0)) throw NumericalError(Ctx("singular reference shape matrix", e));
      er.dm_inverse = dm.inverse();
      er.volume = det / 6.0;
      QuadraturePoint qp;
      qp.shape_gradients.resize(4, 3);
      qp.shape_gradients.bottomRows<3>() = er.dm_inverse;
      qp.shape_gradients.row(0) = -er.dm_inverse.colwise().sum();
      qp.volume = er.volume;
      qp.deformation_hessian = BuildDeformationHessian(qp.shape_gradients);
      er.points.push_back(std::move(qp));
    } else {
      const Hex& hex = mesh.hexes[e - mesh.tets.size()];
      for (const auto& xi : HexGaussPoints()) {
        const auto dn = HexShapeDerivatives(xi);
        const Mat3 jac = HexJacobian(mesh, hex, dn);
        const double det = jac.determinant();
        if (!(det > 0.0)) throw NumericalError(Ctx("singular hex Jacobian", e));
        QuadraturePoint qp;
        qp.shape_gradients = dn * jac.inverse();
        qp.volume = det;  // unit Gauss weights
        qp.deformation_hessian = BuildDeformationHessian(qp.shape_gradients);
        er.volume += det;
        er.points.push_back(std::move(qp));
      }
    }
    const double share = densities[e] * er.volume / static_cast<double>(nodes.size());
    for (int v : nodes) rest.vertex_mass(v) += share;
  }
  return rest;
}

Mat3 DeformationGradient(const QuadraturePoint& qp, std::span<const int> nodes, const VecX& x) {
  Mat3 f = Mat3::Zero();
  for (std::size_t a = 0; a < nodes.size(); ++a)
    f += x.segment<3>(3 * nodes[a]) * qp.shape_gradients.row(a);
  return f;
}

std::vector<Mat3> DeformationGradients(const MeshModel& mesh, const RestData& rest, int e,
                                       const VecX& x) {
  std::vector<Mat3> out;
  const auto nodes = mesh.element_nodes(e);
  for (const auto& qp : rest.elements[e].points) out.push_back(DeformationGradient(qp, nodes, x));
  return out;
}

double EnclosedVolume(const std::vector<Triangle>& triangles, const VecX& x) {
  double vol = 0.0;
  for (const auto& t : triangles)
    vol += VertexOf(x, t[0]).dot(VertexOf(x, t[1]).cross(VertexOf(x, t[2])));
  return vol / 6.0;
}

double MinEdgeLength(const MeshModel& mesh, std::span<const int> elements) {
  double h = std::numeric_limits<double>::infinity();
  for (int e : elements) {
    const auto n = mesh.element_nodes(e);
    auto edge = [&](int a, int b) {
      h = std::min(h, (mesh.vertices[n[a]] - mesh.vertices[n[b]]).norm());
    };
    if (mesh.is_hex(e))
      for (const auto& ed : kHexEdges) edge(ed[0], ed[1]);
    else
      for (const auto& ed : kTetEdges) edge(ed[0], ed[1]);
  }
  return h;
}

}  // namespace softsim
