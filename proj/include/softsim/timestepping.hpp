#pragma once

#include <functional>
#include <span>
#include <vector>

#include "softsim/scene_io.hpp"
#include "softsim/system.hpp"

namespace softsim {

struct SystemState {
  double t = 0.0;
  VecX x;
  VecX v;
  VecX f_int_prev;  // elastic + muscle + gravity forces at (x, t)
  VecX f_ext_prev;  // point loads + pressure at (x, t)
};

/// C h_min / sqrt((lambda + 2 mu) / rho), minimized over material regions.
/// h_min is the shortest rest edge among the elements of each region.
double CflTimeStep(const MeshModel& mesh, std::span<const Material> element_material, double C);

/// State at time t with velocity v0 everywhere and forces evaluated there.
SystemState InitialState(const System& system, const Vec3& v0, double t = 0.0);

struct StepResult {
  SystemState state;
  SolveResult solve;
  double dt = 0.0;  // the step actually taken
  int retries = 0;
};

/// One implicit step of size dt (or less after retries). A failed solve
/// halves dt and tries again up to `control.retry_limit` times; throws
/// Error (numerical) when dt would fall below control.dt_min.
StepResult Step(const System& system, const SystemState& state, double dt, Scheme scheme,
                const SolverOptions& options, const StepControl& control);

/// Static equilibrium (no inertia, no damping) at time t, starting from x0.
SolveResult SolveStatic(const System& system, const VecX& x0, double t,
                        const SolverOptions& options);

/// Mechanical energy split of a state (kinetic, elastic, gravity, muscle).
EnergyRecord Energies(const System& system, const SystemState& state);

struct SimulateHooks {
  std::function<void(const Frame&)> on_frame;           // every recorded frame, in order
  std::function<void(const SystemState&)> on_state;     // after every accepted step
  SolverOptions* solver = nullptr;                       // overrides scene.solver
};

/// Runs the scene to its duration. Frames land exactly on multiples of the
/// output interval (every step when the interval is 0). Step failures throw
/// Error (numerical) with the simulation time in the message; frames
/// recorded before the failure have already gone through `on_frame`.
Trajectory Simulate(const Scene& scene, const SimulateHooks& hooks = {});
Trajectory Simulate(const Scene& scene, const System& system, const SimulateHooks& hooks = {});

}  // namespace softsim
