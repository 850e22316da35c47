#pragma once

#include <array>
#include <compare>
#include <string>
#include <vector>

#include "softsim/schedule.hpp"
#include "softsim/types.hpp"

namespace softsim {

struct PinConstraint {
  int vertex = 0;
  Vec3 target = Vec3::Zero();
  std::array<bool, 3> axes = {true, true, true};
};

// Pins for a whole vertex set: target = reference position + displacement(t).
struct PinSpec {
  std::string vertex_set;
  std::vector<int> vertices;
  VectorSchedule displacement = VectorSchedule::Constant(Vec3::Zero());  // piecewise linear
  std::array<bool, 3> axes = {true, true, true};
};

std::vector<PinConstraint> PinsAt(const std::vector<PinSpec>& specs, const VecX& reference,
                                  double t);

// Half-space n . (x - p) >= 0.
struct ContactPlane {
  Vec3 normal = Vec3::UnitZ();
  Vec3 point = Vec3::Zero();
  double activation_margin = 1e-3;  // m
};

inline double PlaneGap(const Vec3& x, const ContactPlane& plane) {
  return plane.normal.dot(x - plane.point);
}

struct ContactPair {
  int vertex = 0;
  int plane = 0;
  auto operator<=>(const ContactPair&) const = default;
};

/// Every (vertex, plane) with gap below the plane's activation margin,
/// ordered by vertex then plane. Vertices flagged in `skip` are ignored.
std::vector<ContactPair> DetectActive(const VecX& x, const std::vector<ContactPlane>& planes,
                                      const std::vector<bool>& skip = {});

struct EqualityRow {
  int vertex = 0;
  int axis = 0;
  double target = 0.0;
};

// Linearized constraints J_f dx + f = 0, J_h dx + h >= 0.
struct ConstraintSet {
  std::vector<EqualityRow> equality;
  std::vector<ContactPair> inequality;
  SparseMat jf;
  SparseMat jh;
  VecX f;
  VecX h;

  bool empty() const { return equality.empty() && inequality.empty(); }
};

ConstraintSet Linearize(const std::vector<PinConstraint>& pins,
                        const std::vector<ContactPlane>& planes,
                        const std::vector<ContactPair>& active, const VecX& x);

// Residuals only, for line searches.
VecX EqualityResidual(const ConstraintSet& c, const VecX& x);
VecX InequalityResidual(const ConstraintSet& c, const std::vector<ContactPlane>& planes,
                        const VecX& x);

// Most negative gap over all vertices and planes (0 when nothing penetrates).
double MaxPenetration(const VecX& x, const std::vector<ContactPlane>& planes);

}  // namespace softsim
