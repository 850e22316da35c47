#include <gtest/gtest.h>

#include <cmath>

#include "scenarios.hpp"
#include "softsim/timestepping.hpp"
#include "test_util.hpp"

namespace softsim {
namespace {

using testing::MechanicalEnergy;
using testing::OscillatingTet;
using testing::PointMassScene;

StepResult FreeFallStep(Scheme scheme) {
  const Scene s = PointMassScene(1.0, Vec3(0, 0, -10), scheme, 0.1, 0.1);
  const System sys = BuildSystem(s);
  return Step(sys, InitialState(sys, Vec3::Zero()), 0.1, scheme, s.solver.options(), s.step);
}

TEST(Step, FreeFallBackwardEuler) {
  const StepResult r = FreeFallStep(Scheme::kBackwardEuler);
  EXPECT_NEAR(r.state.x(2), -0.1, 1e-12);
  EXPECT_NEAR(r.state.v(2), -1.0, 1e-12);
  EXPECT_EQ(r.retries, 0);
}

TEST(Step, FreeFallCrankNicolson) {
  const StepResult r = FreeFallStep(Scheme::kCrankNicolson);
  EXPECT_NEAR(r.state.x(2), -0.05, 1e-12);
  EXPECT_NEAR(r.state.v(2), -1.0, 1e-12);
}

TEST(Step, RestingOnPlane) {
  for (Scheme scheme : {Scheme::kBackwardEuler, Scheme::kCrankNicolson}) {
    Scene s = PointMassScene(2.0, Vec3(0, 0, -9.81), scheme, 0.01, 1.0);
    s.planes = {ContactPlane{}};
    const System sys = BuildSystem(s);
    SystemState state = InitialState(sys, Vec3::Zero());
    for (int k = 0; k < 5; ++k) {
      const StepResult r = Step(sys, state, 0.01, scheme, s.solver.options(), s.step);
      ASSERT_TRUE(r.solve.converged);
      EXPECT_LT(r.state.x.norm(), 1e-12);
      EXPECT_LT(r.state.v.norm(), 1e-10);
      EXPECT_LE(r.solve.max_penetration, 0.0 + 1e-12);
      state = r.state;
    }
  }
}

TEST(Cfl, ClosedForm) {
  // mu = lambda = rho = 1 gives E = 2.5, nu = 0.25.
  const MeshModel m = testing::UnitCubeHex();
  const std::vector<Material> mat = {testing::MakeMat(MaterialModel::kNeoHookean, 2.5, 0.25, 1.0)};
  EXPECT_NEAR(CflTimeStep(m, mat, 1.0), 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(Step, BackwardEulerDissipatesEveryStep) {
  const auto o = OscillatingTet();
  StepControl control;
  SolverOptions options;
  options.tolerance = 1e-10;
  SystemState s = o.state;
  const double e0 = MechanicalEnergy(o.system, s);
  double prev = e0;
  for (int k = 0; k < 200; ++k) {
    s = Step(o.system, s, 0.0025, Scheme::kBackwardEuler, options, control).state;
    const double e = MechanicalEnergy(o.system, s);
    EXPECT_LE(e, prev + 1e-9 * e0) << k;
    prev = e;
  }
  EXPECT_LT(prev, 0.9 * e0);
}

TEST(Step, CrankNicolsonConservesEnergy) {
  const auto o = OscillatingTet();
  StepControl control;
  SolverOptions options;
  options.tolerance = 1e-10;
  SystemState s = o.state;
  const double e0 = MechanicalEnergy(o.system, s);
  double drift = 0.0;
  for (int k = 0; k < 1000; ++k) {
    s = Step(o.system, s, 0.0025, Scheme::kCrankNicolson, options, control).state;
    drift = std::max(drift, std::abs(MechanicalEnergy(o.system, s) - e0));
  }
  EXPECT_LT(drift, 0.01 * e0);
}

TEST(Step, CrankNicolsonIsSecondOrder) {
  const double ratio = testing::ConvergenceRatio(OscillatingTet(), Scheme::kCrankNicolson, 0.004, 40);
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
  // Backward Euler is first order: about 2 per halving.
  const double be = testing::ConvergenceRatio(OscillatingTet(), Scheme::kBackwardEuler, 0.004, 40);
  EXPECT_NEAR(be, 2.0, 0.5);
}

TEST(Step, FailedSolveHalvesThenGivesUp) {
  const Scene s = PointMassScene(1.0, Vec3(0, 0, -10), Scheme::kBackwardEuler, 0.1, 0.1);
  const System sys = BuildSystem(s);
  SolverOptions o;
  o.max_iterations = 0;  // every attempt fails
  StepControl c;
  c.retry_limit = 3;
  try {
    Step(sys, InitialState(sys, Vec3::Zero()), 0.1, Scheme::kBackwardEuler, o, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("3 retries"), std::string::npos) << e.what();
  }
}

TEST(Simulate, ZeroDurationGivesInitialFrameOnly) {
  const Scene s = PointMassScene(1.0, Vec3(0, 0, -10), Scheme::kBackwardEuler, 0.1, 0.0);
  const Trajectory t = Simulate(s);
  ASSERT_EQ(t.frames.size(), 1u);
  EXPECT_EQ(t.frames[0].t, 0.0);
}

TEST(Simulate, PinnedRestMeshStaysPut) {
  Scene s;
  s.mesh = BoxHexMesh(Vec3(0.1, 0.1, 0.1), Voxel(2, 2, 2));
  s.materials = {{"all", testing::MakeMat(MaterialModel::kNeoHookean, 1e4, 0.3, 1000)}};
  s.gravity = Vec3::Zero();
  PinSpec pin;
  pin.vertex_set = "z_min";
  pin.vertices = s.mesh.vertex_set("z_min");
  s.pins = {pin};
  s.duration = 0.1;
  s.output.record_all_vertices = true;
  const Trajectory t = Simulate(s);
  ASSERT_EQ(t.frames.size(), 11u);
  for (const Frame& f : t.frames)
    for (int v = 0; v < s.mesh.num_vertices(); ++v)
      EXPECT_LT((f.positions[v] - s.mesh.vertices[v]).norm(), 1e-12);
}

TEST(Simulate, FramesLandOnTheOutputGrid) {
  Scene s = PointMassScene(1.0, Vec3(0, 0, -10), Scheme::kBackwardEuler, 0.003, 0.1);
  s.step.dt_max = 0.007;
  s.output.interval = 0.01;
  const Trajectory t = Simulate(s);
  ASSERT_EQ(t.frames.size(), 11u);
  for (std::size_t i = 0; i < t.frames.size(); ++i)
    EXPECT_NEAR(t.frames[i].t, 0.01 * static_cast<double>(i), 1e-12);
}

TEST(Simulate, EveryStepWhenIntervalIsZero) {
  Scene s = PointMassScene(1.0, Vec3(0, 0, -10), Scheme::kBackwardEuler, 0.02, 0.1);
  s.step.adaptive = false;
  const Trajectory t = Simulate(s);
  EXPECT_EQ(t.frames.size(), 6u);
  for (std::size_t i = 1; i < t.frames.size(); ++i) EXPECT_GT(t.frames[i].t, t.frames[i - 1].t);
}

TEST(Simulate, SettlePhaseSwitchesScheme) {
  // Under gravity alone both schemes are exact for position after the first
  // step; the switch is visible in the CN velocity-averaged update.
  Scene s = PointMassScene(1.0, Vec3(0, 0, -10), Scheme::kCrankNicolson, 0.1, 0.3);
  s.settle = SettlePhase{Scheme::kBackwardEuler, 0.1};
  s.step.adaptive = false;
  EXPECT_EQ(s.SchemeAt(0.05), Scheme::kBackwardEuler);
  EXPECT_EQ(s.SchemeAt(0.1), Scheme::kCrankNicolson);
  const Trajectory t = Simulate(s);
  ASSERT_EQ(t.frames.size(), 4u);
  EXPECT_NEAR(t.frames[1].positions[0].z(), -0.1, 1e-12);   // BE: dt^2 g
  EXPECT_NEAR(t.frames[2].positions[0].z(), -0.25, 1e-12);  // CN: + dt v + dt^2 g / 2
}

TEST(Simulate, PinnedVerticesStartAtRest) {
  Scene s = PointMassScene(1.0, Vec3::Zero(), Scheme::kBackwardEuler, 0.1, 0.0);
  s.pins = {PinSpec{"p", {0}}};
  const System sys = BuildSystem(s);
  EXPECT_EQ(InitialState(sys, Vec3(1, 0, 0)).v.norm(), 0.0);
}

TEST(Simulate, FailureNamesTheTime) {
  Scene s = PointMassScene(1.0, Vec3(0, 0, -10), Scheme::kBackwardEuler, 0.1, 0.3);
  SolverOptions o;
  o.max_iterations = 0;
  SimulateHooks hooks;
  hooks.solver = &o;
  int frames = 0;
  hooks.on_frame = [&](const Frame&) { ++frames; };
  try {
    Simulate(s, hooks);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("simulation failed at t=0"), std::string::npos);
  }
  EXPECT_EQ(frames, 1);
}

TEST(Simulate, AdaptiveStepsRespectCfl) {
  Scene s;
  s.mesh = BoxHexMesh(Vec3(0.1, 0.1, 0.1), Voxel(1, 1, 1));
  s.materials = {{"all", testing::MakeMat(MaterialModel::kNeoHookean, 1e4, 0.3, 1000)}};
  s.gravity = Vec3::Zero();
  s.step.cfl_coefficient = 1.0;
  s.duration = 0.05;
  const System sys = BuildSystem(s);
  const double cfl = CflTimeStep(sys.energy.mesh, sys.energy.element_material, 1.0);
  SimulateHooks hooks;
  double last = 0.0, worst = 0.0;
  hooks.on_state = [&](const SystemState& st) {
    worst = std::max(worst, st.t - last);
    last = st.t;
  };
  Simulate(s, sys, hooks);
  EXPECT_LE(worst, cfl * (1 + 1e-9));
}

}  // namespace
}  // namespace softsim
