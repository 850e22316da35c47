#pragma once

#include <vector>

#include "softsim/constraints.hpp"
#include "softsim/energy.hpp"
#include "softsim/forces.hpp"
#include "softsim/solver.hpp"

namespace softsim {

// A body with everything acting on it: energies, external forces and
// constraints. Built from a scene; immutable while simulating.
struct System {
  EnergyModel energy;
  std::vector<PressureActuator> pressures;
  std::vector<PointLoad> loads;
  std::vector<PinSpec> pins;
  std::vector<ContactPlane> planes;
  double damping = 0.0;  // mass-proportional, 1/s
  VecX reference;        // positions pin displacements are measured from

  int num_dofs() const { return energy.num_dofs(); }

  // Point loads plus pressure at (x, t).
  VecX ExternalForces(const VecX& x, double t) const;
  std::vector<bool> PinnedVertices() const;
};

/// The minimization for one implicit step ending at time `t`, or a static
/// equilibrium when `ctx` is null. Internal terms and external forces are
/// weighted by 1/2 under Crank-Nicolson; the matching previous-step forces
/// enter through the inertia potential.
SqpProblem MakeStepProblem(const System& system, double t, const IntegratorContext* ctx,
                           const SolverOptions& options);

}  // namespace softsim
