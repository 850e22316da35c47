#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "scenarios.hpp"
#include "softsim/qp.hpp"
#include "softsim/solver.hpp"
#include "test_util.hpp"

namespace softsim {
namespace {

SparseMat Sparse(const MatX& m) { return m.sparseView(); }

QpProblem Qp(const MatX& H, const VecX& g) {
  QpProblem qp;
  qp.H = Sparse(H);
  qp.g = g;
  qp.jf.resize(0, g.size());
  qp.f.resize(0);
  qp.jh.resize(0, g.size());
  qp.h.resize(0);
  return qp;
}

TEST(ProjectPsd, Examples) {
  const MatX psd = (MatX(2, 2) << 2, 1, 1, 2).finished();
  EXPECT_LT((ProjectPsd(psd) - psd).norm(), 1e-10);
  const MatX d = Vec3(1, -2, 0).head(2).asDiagonal();
  EXPECT_LT((ProjectPsd(d) - MatX(Vec3(1, 0, 0).head(2).asDiagonal())).norm(), 1e-15);
}

TEST(ProjectPsd, RandomSymmetricBecomesPsd) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    MatX a = MatX::NullaryExpr(12, 12, [&] { return n(rng); });
    a = 0.5 * (a + a.transpose());
    const MatX p = ProjectPsd(a);
    EXPECT_GE(testing::MinEigen(p), -1e-12 * p.norm());
    EXPECT_LT((p - p.transpose()).norm(), 1e-12 * p.norm());
    // Nearest PSD matrix in Frobenius norm: a - p is negative semidefinite.
    EXPECT_LE(testing::MinEigen(p - a), 1e-10 * a.norm());
  }
}

TEST(Qp, Unconstrained) {
  const QpResult r = SolveQp(Qp(MatX::Identity(1, 1), VecX::Constant(1, -1.0)));
  ASSERT_EQ(r.status, QpStatus::kSolved);
  EXPECT_NEAR(r.dx(0), 1.0, 1e-8);
}

TEST(Qp, ActiveInequality) {
  QpProblem qp = Qp(MatX::Identity(1, 1), VecX::Constant(1, -1.0));
  qp.jh = Sparse(MatX::Ones(1, 1));
  qp.h = VecX::Constant(1, -2.0);
  const QpResult r = SolveQp(qp);
  ASSERT_EQ(r.status, QpStatus::kSolved);
  EXPECT_NEAR(r.dx(0), 2.0, 1e-8);
  EXPECT_NEAR(r.ineq_duals(0), 1.0, 1e-8);
  EXPECT_LT(KktAudit(qp, r.dx, r.eq_duals, r.ineq_duals).worst(), 1e-8);
}

TEST(Qp, Equality) {
  QpProblem qp = Qp(MatX::Identity(2, 2), VecX::Zero(2));
  qp.jf = Sparse(MatX::Ones(1, 2));
  qp.f = VecX::Constant(1, -1.0);
  const QpResult r = SolveQp(qp);
  ASSERT_EQ(r.status, QpStatus::kSolved);
  EXPECT_NEAR(r.dx(0), 0.5, 1e-8);
  EXPECT_NEAR(r.dx(1), 0.5, 1e-8);
  EXPECT_LT(KktAudit(qp, r.dx, r.eq_duals, r.ineq_duals).worst(), 1e-8);
}

TEST(Qp, InfeasibleIsReported) {
  QpProblem qp = Qp(MatX::Identity(1, 1), VecX::Zero(1));
  qp.jh = Sparse((MatX(2, 1) << 1, -1).finished());
  qp.h = (VecX(2) << -2, -2).finished();  // dx >= 2 and dx <= -2
  EXPECT_NE(SolveQp(qp).status, QpStatus::kSolved);
}

TEST(Qp, RandomProblemsSatisfyKkt) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    const int nv = 6, p = trial % 3, m = 4 + trial % 5;
    MatX a = MatX::NullaryExpr(nv, nv, [&] { return n(rng); });
    QpProblem qp = Qp(a * a.transpose() + 0.1 * MatX::Identity(nv, nv),
                      VecX::NullaryExpr(nv, [&] { return n(rng); }));
    // Feasible by construction: x_feas satisfies every row.
    const VecX x_feas = VecX::NullaryExpr(nv, [&] { return n(rng); });
    const MatX jf = MatX::NullaryExpr(p, nv, [&] { return n(rng); });
    const MatX jh = MatX::NullaryExpr(m, nv, [&] { return n(rng); });
    qp.jf = Sparse(jf);
    qp.f = -jf * x_feas;
    qp.jh = Sparse(jh);
    qp.h = -jh * x_feas + VecX::NullaryExpr(m, [&] { return std::abs(n(rng)); });
    const QpResult r = SolveQp(qp);
    ASSERT_EQ(r.status, QpStatus::kSolved) << trial;
    EXPECT_LT(KktAudit(qp, r.dx, r.eq_duals, r.ineq_duals).worst(), 1e-7) << trial;
  }
}

TEST(Qp, UnconstrainedMatchesNewton) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  MatX a = MatX::NullaryExpr(9, 9, [&] { return n(rng); });
  const MatX H = a * a.transpose() + MatX::Identity(9, 9);
  const VecX g = VecX::NullaryExpr(9, [&] { return n(rng); });
  const QpResult r = SolveQp(Qp(H, g));
  const VecX newton = H.ldlt().solve(-g);
  EXPECT_LT((r.dx - newton).cwiseAbs().maxCoeff(), 1e-8);
}

// E = 1/2 |x - c|^2 for one vertex.
SqpProblem Bowl(const Vec3& c) {
  SqpProblem p;
  p.energy = [c](const VecX& x) { return 0.5 * (x - c).squaredNorm(); };
  p.evaluate = [c](const VecX& x, double& v, VecX& g, SparseMat& H) {
    v = 0.5 * (x - c).squaredNorm();
    g = x - c;
    H = Sparse(MatX::Identity(3, 3));
  };
  return p;
}

TEST(Sqp, QuadraticConvergesInOneIteration) {
  const Vec3 c(0.3, -2.0, 5.0);
  const SolveResult r = SqpMinimize(Bowl(c), Vec3(1, 1, 1), {});
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LT((r.x - c).norm(), 1e-12);
}

TEST(Sqp, ProjectionOntoHalfSpace) {
  SqpProblem p = Bowl(Vec3(0, 0, -1));
  p.planes = {ContactPlane{}};
  const SolveResult r = SqpMinimize(p, Vec3(0, 0, 0.5), {});
  ASSERT_TRUE(r.converged) << r.failure;
  EXPECT_LT(r.x.norm(), 1e-9);
  EXPECT_EQ(r.active_set_size, 1);
  EXPECT_NEAR(r.ineq_duals(0), 1.0, 1e-8);
}

TEST(Sqp, PinsAreSatisfied) {
  SqpProblem p = Bowl(Vec3(1, 2, 3));
  p.pins = {{0, Vec3(0, 0, 0), {true, false, true}}};
  const SolveResult r = SqpMinimize(p, Vec3(5, 5, 5), {});
  ASSERT_TRUE(r.converged);
  EXPECT_LT((r.x - Vec3(0, 2, 0)).norm(), 1e-9);
}

// Newton overshoots on sqrt(1 + x^2) from |x| > 1.
SqpProblem Overshoot() {
  SqpProblem p;
  p.energy = [](const VecX& x) { return std::sqrt(1.0 + x(0) * x(0)) + 0.5 * x.tail(2).squaredNorm(); };
  p.evaluate = [](const VecX& x, double& v, VecX& g, SparseMat& H) {
    const double s = std::sqrt(1.0 + x(0) * x(0));
    v = s + 0.5 * x.tail(2).squaredNorm();
    g = x;
    g(0) = x(0) / s;
    MatX h = MatX::Identity(3, 3);
    h(0, 0) = 1.0 / (s * s * s);
    H = Sparse(h);
  };
  return p;
}

TEST(LineSearch, FullStepOnBowl) {
  const SqpProblem p = Bowl(Vec3::Zero());
  const VecX x = Vec3(1, 1, 1);
  const LineSearchResult ls =
      MeritLineSearch(p, x, -x, p.energy(x), x, ConstraintSet{}, 10.0, SolverOptions{});
  EXPECT_TRUE(ls.accepted);
  EXPECT_EQ(ls.alpha, 1.0);
}

TEST(LineSearch, OvershootIsCut) {
  const SqpProblem p = Overshoot();
  const VecX x = Vec3(2, 0, 0);
  double v;
  VecX g;
  SparseMat H;
  p.evaluate(x, v, g, H);
  const VecX dx = Vec3(-2 * 5, 0, 0);  // Newton: -x (1 + x^2)
  EXPECT_GT(p.energy(x + dx), v);
  const LineSearchResult ls = MeritLineSearch(p, x, dx, v, g, ConstraintSet{}, 10.0, SolverOptions{});
  ASSERT_TRUE(ls.accepted);
  EXPECT_LT(ls.alpha, 1.0);
  EXPECT_LT(p.energy(x + ls.alpha * dx), v);
  const SolveResult r = SqpMinimize(p, x, {});
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.x.norm(), 1e-6);
}

TEST(LineSearch, InvertingStepIsHalvedUntilAdmissible) {
  // Heavy load on the apex of a soft tet; the trial step drives it through
  // the base.
  Scene s;
  s.mesh = testing::UnitTet();
  s.mesh.vertex_sets["apex"] = {3};
  s.materials = {{"all", testing::MakeMat(MaterialModel::kNeoHookean, 1.0, 0.0, 1.0)}};
  s.gravity = Vec3::Zero();
  PointLoad load;
  load.vertices = {3};
  load.force = VectorSchedule::Constant(Vec3(0, 0, -100));
  s.loads = {load};
  const System sys = BuildSystem(s);
  SolverOptions o;
  const SqpProblem p = MakeStepProblem(sys, 0.0, nullptr, o);
  const VecX x = sys.energy.mesh.positions();
  double v;
  VecX g;
  SparseMat H;
  p.evaluate(x, v, g, H);
  VecX dx = VecX::Zero(12);
  dx(11) = -2.0;
  const LineSearchResult ls = MeritLineSearch(p, x, dx, v, g, ConstraintSet{}, 10.0, o);
  ASSERT_TRUE(ls.accepted);
  EXPECT_EQ(ls.alpha, 0.25);
  const VecX y = x + ls.alpha * dx;
  EXPECT_GT(DeformationGradients(sys.energy.mesh, sys.energy.rest, 0, y)[0].determinant(), 0.0);
}

TEST(Sqp, FixedStepModeFollowsTheUpdateRule) {
  SolverOptions o;
  o.line_search = false;
  o.step_size = 0.5;
  const SolveResult r = SqpMinimize(Bowl(Vec3::Zero()), Vec3(1, 0, 0), o);
  ASSERT_TRUE(r.converged);
  // Each step halves the distance; |dx| < 1e-6 after 20 halvings.
  EXPECT_EQ(r.iterations, 20);
}

TEST(Sqp, RandomContactScenesSatisfyKkt) {
  for (std::uint64_t seed = 100; seed < 106; ++seed) {
    const testing::KktCase c = testing::RandomKktCase(seed);
    SolverOptions o = c.scene.solver.options();
    o.tolerance = testing::kAuditSolverTolerance;
    SolveResult r;
    const testing::KktReport k = testing::AuditStep(c, o, &r);
    ASSERT_TRUE(k.converged) << seed << ": " << r.failure;
    EXPECT_LT(k.worst(), 1e-6) << "seed " << seed << " stat " << k.stationarity << " pin "
                               << k.pin_residual << " pen " << k.penetration << " dual " << k.dual
                               << " comp " << k.complementarity;
  }
}

TEST(Sqp, MeritIsNonIncreasingAndRunsAreDeterministic) {
  const testing::KktCase c = testing::RandomKktCase(7);
  std::ostringstream d1, d2;
  SolverOptions o = c.scene.solver.options();
  o.diagnostics = &d1;
  SolveResult a, b;
  testing::AuditStep(c, o, &a);
  o.diagnostics = &d2;
  testing::AuditStep(c, o, &b);
  EXPECT_EQ(d1.str(), d2.str());
  EXPECT_EQ(a.x, b.x);
  ASSERT_FALSE(d1.str().empty());
  int searched = 0;
  for (const auto& rec : a.history) {
    if (rec.merit == 0.0 && rec.initial_merit == 0.0) continue;  // converged check, no search
    ++searched;
    EXPECT_LE(rec.merit, rec.initial_merit + 1e-12 * std::abs(rec.initial_merit));
  }
  EXPECT_GT(searched, 0);
}

}  // namespace
}  // namespace softsim
