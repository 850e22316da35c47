#include "softsim/forces.hpp"

namespace softsim {

VecX PressureForces(const std::vector<Triangle>& triangles, const VecX& x, double pressure) {
  VecX f = VecX::Zero(x.size());
  if (pressure == 0.0) return f;
  for (const auto& t : triangles) {
    const Vec3 n = SurfaceNormal(VertexOf(x, t[0]), VertexOf(x, t[1]), VertexOf(x, t[2]));
    const Vec3 share = -pressure * n / 3.0;
    for (int v : t) f.segment<3>(3 * v) += share;
  }
  return f;
}

VecX PressureForces(const std::vector<PressureActuator>& actuators, const VecX& x, double t) {
  VecX f = VecX::Zero(x.size());
  for (const auto& a : actuators) f += PressureForces(a.triangles, x, a.pressure(t));
  return f;
}

VecX PointLoadForces(const std::vector<PointLoad>& loads, int num_dofs, double t) {
  VecX f = VecX::Zero(num_dofs);
  for (const auto& load : loads) {
    if (!load.active(t)) continue;
    const Vec3 force = load.force(t);
    for (int v : load.vertices) f.segment<3>(3 * v) += force;
  }
  return f;
}

}  // namespace softsim
