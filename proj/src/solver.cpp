#include "softsim/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "json.hpp"

namespace softsim {

MatX ProjectPsd(const MatX& h, double floor) {
  Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (h + h.transpose()));
  const VecX& lambda = eig.eigenvalues();
  if (lambda.minCoeff() >= floor) return h;
  const VecX clamped = lambda.cwiseMax(floor);
  return eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

double PenaltyNorm(const ConstraintSet& c, const std::vector<ContactPlane>& planes,
                   const VecX& x) {
  double s = 0.0;
  if (!c.equality.empty()) s += EqualityResidual(c, x).cwiseAbs().sum();
  if (!c.inequality.empty()) s += (-InequalityResidual(c, planes, x)).cwiseMax(0.0).sum();
  return s;
}

bool NewtonSolve(const SparseMat& H, const VecX& g, VecX& dx) {
  Eigen::SimplicialLDLT<SparseMat> ldlt(H);
  if (ldlt.info() == Eigen::Success) {
    dx = ldlt.solve(-g);
    if (ldlt.info() == Eigen::Success && dx.allFinite()) return true;
  }
  Eigen::SparseLU<SparseMat> lu(H);
  if (lu.info() != Eigen::Success) return false;
  dx = lu.solve(-g);
  return lu.info() == Eigen::Success && dx.allFinite();
}

void WriteRecord(std::ostream& os, const IterationRecord& r) {
  nlohmann::json j = {{"iteration", r.iteration}, {"energy", r.energy},
                      {"gradient_inf", r.gradient_norm}, {"step_inf", r.step_norm},
                      {"active_set", r.active_set}, {"alpha", r.alpha}, {"merit", r.merit},
                      {"qp_status", ToString(r.qp_status)}};
  os << j.dump() << "\n";
}

}  // namespace

double Merit(const SqpProblem& problem, const VecX& x, const VecX& x_ref, const VecX& frozen_force,
             const ConstraintSet& constraints, double rho) {
  double e = problem.energy(x);
  if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
  if (frozen_force.size()) e -= frozen_force.dot(x - x_ref);
  return e + rho * PenaltyNorm(constraints, problem.planes, x);
}

LineSearchResult MeritLineSearch(const SqpProblem& problem, const VecX& x, const VecX& dx,
                                 double energy, const VecX& gradient,
                                 const ConstraintSet& constraints, double rho,
                                 const SolverOptions& options) {
  const VecX frozen =
      problem.nonconservative_force ? problem.nonconservative_force(x) : VecX();
  const double violation = PenaltyNorm(constraints, problem.planes, x);
  const double phi0 = energy + rho * violation;
  const double slope = gradient.dot(dx) - rho * violation;
  const double noise = 1e-12 * std::max(1.0, std::abs(phi0));

  LineSearchResult r;
  r.initial_merit = phi0;
  double alpha = options.line_search ? 1.0 : options.step_size;
  for (int k = 0; k <= options.max_halvings; ++k, alpha *= 0.5) {
    const VecX trial = x + alpha * dx;
    const double phi = Merit(problem, trial, x, frozen, constraints, rho);
    r.halvings = k;
    if (!std::isfinite(phi)) continue;  // inverted element: shrink
    const bool armijo = phi <= phi0 + 1e-4 * alpha * std::min(slope, 0.0) + noise;
    if (!options.line_search || armijo) {
      r.alpha = alpha;
      r.accepted = true;
      r.merit = phi;
      return r;
    }
  }
  return r;
}

SolveResult SqpMinimize(const SqpProblem& problem, const VecX& x0, const SolverOptions& options) {
  if (!x0.allFinite()) throw DomainError("initial guess must be finite");
  SolveResult result;
  VecX x = x0;
  std::set<ContactPair> sticky;

  for (int k = 0; k < options.max_iterations; ++k) {
    result.iterations = k + 1;
    double value = 0.0;
    VecX g;
    SparseMat H;
    try {
      problem.evaluate(x, value, g, H);
    } catch (const Error& e) {
      result.failure = e.what();
      break;
    }
    if (!std::isfinite(value) || !g.allFinite()) {
      result.failure = "non-finite energy or gradient";
      break;
    }

    for (const auto& pair : DetectActive(x, problem.planes, problem.contact_exempt))
      sticky.insert(pair);
    const std::vector<ContactPair> active(sticky.begin(), sticky.end());
    ConstraintSet cs = Linearize(problem.pins, problem.planes, active, x);

    IterationRecord rec;
    rec.iteration = k;
    rec.energy = value;
    rec.gradient_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    rec.active_set = static_cast<int>(active.size());

    VecX dx;
    double max_dual = 0.0;
    if (cs.empty()) {
      if (!NewtonSolve(H, g, dx)) {
        result.failure = "singular Newton system";
        break;
      }
      result.eq_duals.resize(0);
      result.ineq_duals.resize(0);
    } else {
      QpProblem qp{H, g, cs.jf, cs.f, cs.jh, cs.h};
      const QpResult q = SolveQp(qp, options.qp);
      rec.qp_status = q.status;
      if (q.status != QpStatus::kSolved) {
        result.failure = "QP subproblem " + ToString(q.status);
        if (options.diagnostics) WriteRecord(*options.diagnostics, rec);
        result.history.push_back(rec);
        break;
      }
      dx = q.dx;
      result.eq_duals = q.eq_duals;
      result.ineq_duals = q.ineq_duals;
      if (q.eq_duals.size()) max_dual = std::max(max_dual, q.eq_duals.cwiseAbs().maxCoeff());
      if (q.ineq_duals.size()) max_dual = std::max(max_dual, q.ineq_duals.cwiseAbs().maxCoeff());
    }
    result.active_set_size = static_cast<int>(active.size());
    rec.step_norm = dx.size() ? dx.cwiseAbs().maxCoeff() : 0.0;
    result.step_norm = rec.step_norm;

    if (rec.step_norm < options.tolerance) {
      const VecX trial = x + dx;
      // Pairs that the linearization missed get forced into the next subproblem.
      bool missed = false;
      const int nv = static_cast<int>(trial.size() / 3);
      for (int v = 0; v < nv; ++v) {
        if (!problem.contact_exempt.empty() && problem.contact_exempt[v]) continue;
        for (int p = 0; p < static_cast<int>(problem.planes.size()); ++p)
          if (PlaneGap(VertexOf(trial, v), problem.planes[p]) < -options.penetration_tolerance &&
              sticky.insert({v, p}).second)
            missed = true;
      }
      rec.alpha = 1.0;
      if (options.diagnostics) WriteRecord(*options.diagnostics, rec);
      result.history.push_back(rec);
      x = trial;
      result.constraints = std::move(cs);
      if (!missed) {
        // The solve that certifies convergence is not counted as a step.
        result.iterations = k;
        result.converged = true;
        break;
      }
      continue;
    }

    const double rho = 10.0 * (1.0 + max_dual);
    const LineSearchResult ls = MeritLineSearch(problem, x, dx, value, g, cs, rho, options);
    rec.alpha = ls.alpha;
    rec.merit = ls.merit;
    rec.initial_merit = ls.initial_merit;
    if (options.diagnostics) WriteRecord(*options.diagnostics, rec);
    result.history.push_back(rec);
    result.constraints = std::move(cs);
    if (!ls.accepted) {
      result.failure = "line search found no acceptable step";
      break;
    }
    x += ls.alpha * dx;
  }
  if (!result.converged && result.failure.empty()) result.failure = "iteration limit reached";
  result.x = x;
  const std::vector<bool>& exempt = problem.contact_exempt;
  double pen = 0.0;
  for (int v = 0; v < static_cast<int>(x.size() / 3); ++v) {
    if (!exempt.empty() && exempt[v]) continue;
    for (const auto& plane : problem.planes) pen = std::max(pen, -PlaneGap(VertexOf(x, v), plane));
  }
  result.max_penetration = pen;
  return result;
}

}  // namespace softsim
