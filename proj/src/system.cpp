#include "softsim/system.hpp"

namespace softsim {

VecX System::ExternalForces(const VecX& x, double t) const {
  return PointLoadForces(loads, num_dofs(), t) + PressureForces(pressures, x, t);
}

std::vector<bool> System::PinnedVertices() const {
  std::vector<bool> pinned(energy.mesh.num_vertices(), false);
  for (const auto& p : pins)
    for (int v : p.vertices) pinned[v] = true;
  return pinned;
}

SqpProblem MakeStepProblem(const System& system, double t, const IntegratorContext* ctx,
                           const SolverOptions& options) {
  const double w = ctx ? InternalWeight(ctx->scheme) : 1.0;
  const VecX loads = PointLoadForces(system.loads, system.num_dofs(), t);
  const bool has_pressure = !system.pressures.empty();

  // Copies below keep the problem valid after `ctx` goes out of scope.
  std::optional<IntegratorContext> context;
  if (ctx) context = *ctx;

  SqpProblem problem;
  problem.energy = [&system, t, context, w, loads](const VecX& x) {
    AssemblyOptions o;
    o.gradient = false;
    o.hessian = false;
    o.internal_weight = w;
    const Assembled a = Assemble(system.energy, x, t, context ? &*context : nullptr, o);
    return a.value - w * loads.dot(x);
  };
  const double psd_floor = options.psd_floor;
  problem.evaluate = [&system, t, context, w, loads, psd_floor](const VecX& x, double& value,
                                                               VecX& gradient, SparseMat& H) {
    AssemblyOptions o;
    o.internal_weight = w;
    o.psd_floor = psd_floor;
    Assembled a = Assemble(system.energy, x, t, context ? &*context : nullptr, o);
    value = a.value - w * loads.dot(x);
    gradient = std::move(a.gradient) - w * (loads + PressureForces(system.pressures, x, t));
    H = std::move(a.hessian);
  };
  if (has_pressure) {
    problem.nonconservative_force = [&system, t, w](const VecX& x) {
      return VecX(w * PressureForces(system.pressures, x, t));
    };
  }
  problem.pins = PinsAt(system.pins, system.reference, t);
  problem.planes = system.planes;
  problem.contact_exempt = system.PinnedVertices();
  return problem;
}

}  // namespace softsim
