#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "softsim/types.hpp"

namespace softsim {

using Tet = std::array<int, 4>;
using Hex = std::array<int, 8>;
using Triangle = std::array<int, 3>;

/// Volumetric mesh with named vertex, triangle and element sets.
///
/// Elements share one index space: tets occupy [0, tets.size()) and hexes
/// follow. Hex nodes use the usual lexicographic-on-faces order: bottom face
/// (0,1,2,3) counter-clockwise seen from above, top face (4,5,6,7) above it.
/// The set name "all" always resolves to every vertex / element.
struct MeshModel {
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;
  std::vector<Hex> hexes;
  std::map<std::string, std::vector<int>> vertex_sets;
  std::map<std::string, std::vector<Triangle>> triangle_sets;
  std::map<std::string, std::vector<int>> element_sets;

  // Tets whose node order was flipped at load time to get positive volume.
  std::vector<int> reordered_tets;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(tets.size() + hexes.size()); }
  int num_dofs() const { return 3 * num_vertices(); }
  bool is_hex(int e) const { return e >= static_cast<int>(tets.size()); }

  std::span<const int> element_nodes(int e) const;

  std::vector<int> vertex_set(const std::string& name) const;
  std::vector<int> element_set(const std::string& name) const;
  const std::vector<Triangle>& triangle_set(const std::string& name) const;
  bool has_vertex_set(const std::string& name) const;
  bool has_element_set(const std::string& name) const;
  bool has_triangle_set(const std::string& name) const;

  VecX positions() const;
};

// One integration point of an element.
struct QuadraturePoint {
  MatX shape_gradients;      // nodes x 3, dN_a/dX in the rest configuration
  MatX deformation_hessian;  // 9 x 3*nodes, dF_k/dx_i with k row-major
  double volume = 0.0;       // quadrature weight times |det J|
};

struct ElementRest {
  std::vector<QuadraturePoint> points;
  Mat3 dm_inverse = Mat3::Zero();  // tets only
  double volume = 0.0;
};

struct RestData {
  std::vector<ElementRest> elements;
  VecX vertex_mass;  // lumped, kg
};

/// Checks indices, repairs negatively oriented tets, rejects degenerate
/// elements and open/closed inconsistencies in triangle sets. Throws Error.
void ValidateMesh(MeshModel& mesh);

MeshModel MeshFromJson(const nlohmann::json& j);
nlohmann::json MeshToJson(const MeshModel& mesh);
MeshModel LoadMesh(const std::filesystem::path& path);
void SaveMesh(const MeshModel& mesh, const std::filesystem::path& path);

/// Reference-shape inverses, volumes, deformation Hessians and lumped masses.
/// `densities` holds one value per element (kg/m^3), all positive.
RestData RestPrecompute(const MeshModel& mesh, std::span<const double> densities);

Mat3 DeformationGradient(const QuadraturePoint& qp, std::span<const int> nodes, const VecX& x);

/// F at every quadrature point of element `e`.
std::vector<Mat3> DeformationGradients(const MeshModel& mesh, const RestData& rest, int e,
                                       const VecX& x);

/// Area-weighted normal 0.5 (x1 - x0) x (x2 - x0); its norm is the triangle area.
inline Vec3 SurfaceNormal(const Vec3& x0, const Vec3& x1, const Vec3& x2) {
  return 0.5 * (x1 - x0).cross(x2 - x0);
}

// Volume enclosed by a closed, outward-oriented triangle set.
double EnclosedVolume(const std::vector<Triangle>& triangles, const VecX& x);

double MinEdgeLength(const MeshModel& mesh, std::span<const int> elements);

}  // namespace softsim
