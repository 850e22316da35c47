#include "softsim/timestepping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace softsim {

double CflTimeStep(const MeshModel& mesh, std::span<const Material> element_material, double C) {
  if (static_cast<int>(element_material.size()) != mesh.num_elements())
    throw MismatchError("one material per element required");
  // Within a region the wave speed is constant, so the per-element minimum
  // equals the minimum over regions of C h_min / c_p.
  double dt = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Material& m = element_material[e];
    if (!(m.density > 0.0)) throw DomainError("density must be positive");
    const Lame l = m.lame();
    const double wave_speed = std::sqrt((l.lambda + 2.0 * l.mu) / m.density);
    const int elements[1] = {e};
    dt = std::min(dt, C * MinEdgeLength(mesh, elements) / wave_speed);
  }
  return dt;
}

SystemState InitialState(const System& system, const Vec3& v0, double t) {
  SystemState s;
  s.t = t;
  s.x = system.energy.mesh.positions();
  s.v = VecX(system.num_dofs());
  for (int i = 0; i < system.energy.mesh.num_vertices(); ++i) s.v.segment<3>(3 * i) = v0;
  // Pinned vertices start at rest.
  const auto pinned = system.PinnedVertices();
  for (int i = 0; i < static_cast<int>(pinned.size()); ++i)
    if (pinned[i]) s.v.segment<3>(3 * i).setZero();
  s.f_int_prev = InternalForces(system.energy, s.x, t);
  s.f_ext_prev = system.ExternalForces(s.x, t);
  return s;
}

namespace {

SolveResult TryStep(const System& system, const SystemState& state, double dt, Scheme scheme,
                    const SolverOptions& options, IntegratorContext& ctx) {
  ctx.dt = dt;
  ctx.x_prev = state.x;
  ctx.v_prev = state.v;
  ctx.scheme = scheme;
  ctx.damping = system.damping;
  ctx.mass = system.energy.dof_mass();
  if (scheme == Scheme::kCrankNicolson) ctx.previous_force = state.f_int_prev + state.f_ext_prev;
  const SqpProblem problem = MakeStepProblem(system, state.t + dt, &ctx, options);
  // x_prev is admissible (no inverted elements), so it is a safe start.
  return SqpMinimize(problem, state.x, options);
}

}  // namespace

StepResult Step(const System& system, const SystemState& state, double dt, Scheme scheme,
                const SolverOptions& options, const StepControl& control) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  StepResult r;
  for (int attempt = 0;; ++attempt) {
    IntegratorContext ctx;
    r.solve = TryStep(system, state, dt, scheme, options, ctx);
    if (r.solve.converged) {
      r.dt = dt;
      r.retries = attempt;
      SystemState& s = r.state;
      s.t = state.t + dt;
      s.x = r.solve.x;
      s.v = VelocityUpdate(s.x, ctx);
      s.f_int_prev = InternalForces(system.energy, s.x, s.t);
      s.f_ext_prev = system.ExternalForces(s.x, s.t);
      return r;
    }
    if (attempt >= control.retry_limit || 0.5 * dt < control.dt_min) {
      std::ostringstream msg;
      msg << "step from t=" << state.t << " failed at dt=" << dt << " after " << attempt
          << " retries: " << r.solve.failure;
      throw NumericalError(msg.str());
    }
    dt *= 0.5;
  }
}

SolveResult SolveStatic(const System& system, const VecX& x0, double t,
                        const SolverOptions& options) {
  return SqpMinimize(MakeStepProblem(system, t, nullptr, options), x0, options);
}

EnergyRecord Energies(const System& system, const SystemState& state) {
  const EnergyBreakdown parts = InternalEnergies(system.energy, state.x, state.t);
  EnergyRecord e;
  e.kinetic = KineticEnergy(system.energy, state.v);
  e.elastic = parts.elastic;
  e.gravity = parts.gravity;
  e.muscle = parts.muscle;
  return e;
}

namespace {

Frame MakeFrame(const Scene& scene, const System& system, const SystemState& s,
                const std::vector<int>& markers, const SolveResult* solve) {
  Frame f;
  f.t = s.t;
  if (scene.output.record_all_vertices) {
    for (int v = 0; v < system.energy.mesh.num_vertices(); ++v) f.positions.push_back(VertexOf(s.x, v));
  } else {
    for (int v : markers) f.positions.push_back(VertexOf(s.x, v));
  }
  if (scene.output.record_energies) f.energy = Energies(system, s);
  if (solve) {
    f.max_penetration = solve->max_penetration;
    f.iterations = solve->iterations;
  } else {
    const auto exempt = system.PinnedVertices();
    double pen = 0.0;
    for (int v = 0; v < system.energy.mesh.num_vertices(); ++v) {
      if (exempt[v]) continue;
      for (const auto& p : system.planes) pen = std::max(pen, -PlaneGap(VertexOf(s.x, v), p));
    }
    f.max_penetration = pen;
  }
  return f;
}

}  // namespace

Trajectory Simulate(const Scene& scene, const SimulateHooks& hooks) {
  const System system = BuildSystem(scene);
  return Simulate(scene, system, hooks);
}

Trajectory Simulate(const Scene& scene, const System& system, const SimulateHooks& hooks) {
  const SolverOptions options = hooks.solver ? *hooks.solver : scene.solver.options();
  const StepControl& control = scene.step;

  Trajectory traj;
  traj.scene_hash = SceneHash(scene);
  traj.dofs = system.num_dofs();
  traj.all_vertices = scene.output.record_all_vertices;
  traj.markers = MarkerNames(scene);
  traj.marker_vertices = MarkerVertices(scene);

  auto emit = [&](Frame f) {
    if (hooks.on_frame) hooks.on_frame(f);
    traj.frames.push_back(std::move(f));
  };

  SystemState state = InitialState(system, scene.initial_velocity);
  emit(MakeFrame(scene, system, state, traj.marker_vertices, nullptr));
  if (hooks.on_state) hooks.on_state(state);

  double cfl = std::numeric_limits<double>::infinity();
  if (control.cfl_coefficient > 0.0 && system.energy.mesh.num_elements() > 0)
    cfl = CflTimeStep(system.energy.mesh, system.energy.element_material, control.cfl_coefficient);
  double dt = std::min(control.dt_init, cfl);

  const double interval = scene.output.interval;
  const double end = scene.duration;
  // Times closer than this are treated as equal so frames land on the grid.
  const double eps = 1e-9 * std::max(1.0, end);
  long next_frame = 1;
  int successes = 0;

  while (state.t < end - eps) {
    double target = std::min(end, state.t + dt);
    bool on_frame = interval <= 0.0;
    if (interval > 0.0) {
      const double frame_time = std::min(end, next_frame * interval);
      if (target >= frame_time - eps) {
        target = frame_time;
        on_frame = true;
      }
    }
    if (target >= end - eps) {
      target = end;
      on_frame = true;
    }
    if (scene.settle && state.t < scene.settle->until - eps && target > scene.settle->until + eps) {
      target = scene.settle->until;
      on_frame = interval <= 0.0 ||
                 std::abs(target - std::min(end, next_frame * interval)) <= eps;
    }

    StepResult r;
    try {
      r = Step(system, state, target - state.t, scene.SchemeAt(state.t), options, control);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "simulation failed at t=" << state.t << ": " << e.what();
      throw Error(e.kind(), msg.str());
    }
    const bool reached = r.retries == 0;
    state = std::move(r.state);
    if (reached) state.t = target;  // exact grid time, no round-off drift
    if (hooks.on_state) hooks.on_state(state);

    if (interval <= 0.0 || (reached && on_frame)) {
      emit(MakeFrame(scene, system, state, traj.marker_vertices, &r.solve));
      if (interval > 0.0)
        while (next_frame * interval <= state.t + eps) ++next_frame;
    }

    if (!control.adaptive) continue;
    if (r.retries > 0) {
      dt = r.dt;
      successes = 0;
    } else if (++successes >= control.grow_after) {
      dt = std::min({dt * control.growth, control.dt_max, cfl});
      successes = 0;
    }
  }
  return traj;
}

}  // namespace softsim
