#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "softsim/constraints.hpp"
#include "softsim/qp.hpp"
#include "softsim/types.hpp"

namespace softsim {

/// Eigenvalues of a symmetric matrix clamped to >= floor, then reassembled.
MatX ProjectPsd(const MatX& h, double floor = 0.0);

struct SolverOptions {
  double tolerance = 1e-6;  // on |dx|_inf, m
  int max_iterations = 100;
  bool line_search = true;  // false: x += step_size * dx
  double step_size = 1.0;
  double psd_floor = 0.0;
  double penetration_tolerance = 1e-6;  // m
  int max_halvings = 20;
  QpOptions qp;
  std::ostream* diagnostics = nullptr;  // one JSON record per iteration
};

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double gradient_norm = 0.0;  // inf-norm
  double step_norm = 0.0;      // inf-norm
  int active_set = 0;
  double alpha = 0.0;
  QpStatus qp_status = QpStatus::kSolved;
  double merit = 0.0;          // at the accepted point
  double initial_merit = 0.0;  // at the iterate, same penalty weight
};

struct SolveResult {
  VecX x;
  int iterations = 0;  // steps taken; the final check with |dx| < tol is not counted
  bool converged = false;
  double step_norm = 0.0;
  double max_penetration = 0.0;
  int active_set_size = 0;
  std::vector<IterationRecord> history;
  std::string failure;  // empty on success

  // Multipliers and constraint rows of the last subproblem.
  ConstraintSet constraints;
  VecX eq_duals;
  VecX ineq_duals;
};

// The nonlinear program handed to the SQP loop.
struct SqpProblem {
  // Objective value; +inf marks an inadmissible point (inverted element).
  std::function<double(const VecX&)> energy;
  // Value, gradient and PSD Hessian at x. The gradient already contains any
  // non-conservative forces (as -f). May throw Error.
  std::function<void(const VecX& x, double& value, VecX& gradient, SparseMat& hessian)> evaluate;
  // Optional position-dependent force without a potential. The line search
  // freezes it at the iterate and treats it as a linear potential.
  std::function<VecX(const VecX&)> nonconservative_force;

  std::vector<PinConstraint> pins;
  std::vector<ContactPlane> planes;
  std::vector<bool> contact_exempt;  // per vertex; pinned vertices skip contact
};

struct LineSearchResult {
  double alpha = 0.0;
  bool accepted = false;
  double merit = 0.0;
  double initial_merit = 0.0;
  int halvings = 0;
};

/// Backtracking on phi(x) = E(x) - f_nc(x_k).(x - x_k) + rho (|f(x)|_1 + |min(h(x),0)|_1)
/// with Armijo constant 1e-4 and alpha in {1, 1/2, 1/4, ...}.
LineSearchResult MeritLineSearch(const SqpProblem& problem, const VecX& x, const VecX& dx,
                                 double energy, const VecX& gradient,
                                 const ConstraintSet& constraints, double rho,
                                 const SolverOptions& options);

double Merit(const SqpProblem& problem, const VecX& x, const VecX& x_ref, const VecX& frozen_force,
             const ConstraintSet& constraints, double rho);

/// Sequential quadratic programming on the problem. Contact pairs are
/// re-detected at every iterate and stay in the subproblem once seen.
/// Without constraints each iteration is a Newton step H dx = -g.
SolveResult SqpMinimize(const SqpProblem& problem, const VecX& x0, const SolverOptions& options);

}  // namespace softsim
