#pragma once

#include <optional>
#include <string>
#include <vector>

#include "softsim/mesh.hpp"
#include "softsim/schedule.hpp"
#include "softsim/types.hpp"

namespace softsim {

// Uniform pressure on an oriented surface. Normals point out of the solid, so
// a positive pressure pushes the surface into the material.
struct PressureActuator {
  std::string triangle_set;
  std::vector<Triangle> triangles;
  ScalarSchedule pressure = ScalarSchedule::Constant(0.0);  // Pa, piecewise linear
};

// Force applied to every vertex of a set, piecewise constant in time and
// switched off from `release_time` on.
struct PointLoad {
  std::string vertex_set;
  std::vector<int> vertices;
  VectorSchedule force = VectorSchedule::Constant(Vec3::Zero());  // N per vertex
  std::optional<double> release_time;

  bool active(double t) const { return !release_time || t < *release_time; }
};

/// -p n / 3 on each vertex of every triangle, n the area-weighted normal at x.
VecX PressureForces(const std::vector<Triangle>& triangles, const VecX& x, double pressure);

VecX PointLoadForces(const std::vector<PointLoad>& loads, int num_dofs, double t);

// Pressure part only; depends on the current positions.
VecX PressureForces(const std::vector<PressureActuator>& actuators, const VecX& x, double t);

}  // namespace softsim
