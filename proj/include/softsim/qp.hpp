#pragma once

#include <string>
#include <vector>

#include "softsim/types.hpp"

namespace softsim {

/// min 1/2 dx^T H dx + g^T dx  s.t.  J_f dx + f = 0,  J_h dx + h >= 0.
/// H must be symmetric positive semidefinite and stored in full (both
/// triangles).
struct QpProblem {
  SparseMat H;
  VecX g;
  SparseMat jf;
  VecX f;
  SparseMat jh;
  VecX h;

  int num_variables() const { return static_cast<int>(g.size()); }
  int num_equalities() const { return static_cast<int>(f.size()); }
  int num_inequalities() const { return static_cast<int>(h.size()); }
};

struct QpOptions {
  double primal_tolerance = 1e-8;
  double dual_tolerance = 1e-8;
  double complementarity_tolerance = 1e-8;
  int max_iterations = 0;  // 0: 10 (p + m) + 50
};

enum class QpStatus { kSolved, kInfeasible, kIterationLimit, kNumericalFailure };

std::string ToString(QpStatus s);

// Duals follow H dx + g + J_f^T eq_duals - J_h^T ineq_duals = 0, ineq_duals >= 0.
struct QpResult {
  QpStatus status = QpStatus::kNumericalFailure;
  VecX dx;
  VecX eq_duals;
  VecX ineq_duals;
  std::vector<int> working_set;  // inequality rows held active at the solution
  int iterations = 0;
  int factorizations = 0;
};

/// Dual active-set method (Goldfarb-Idnani) on the sparse KKT system.
/// Starts from the minimizer under the equalities and adds violated rows one
/// at a time; needs no feasible start and reports kInfeasible exactly when
/// no point satisfies all rows. H must be positive definite on the null
/// space of the equality rows.
QpResult SolveQp(const QpProblem& qp, const QpOptions& options = {});

struct KktResiduals {
  double stationarity = 0.0;     // |H dx + g + J_f^T mu - J_h^T zeta|_inf
  double equality = 0.0;         // |J_f dx + f|_inf
  double inequality = 0.0;       // max(0, -min(J_h dx + h))
  double dual = 0.0;             // max(0, -min zeta)
  double complementarity = 0.0;  // max |zeta_i (J_h dx + h)_i|

  double worst() const;
};

KktResiduals KktAudit(const QpProblem& qp, const VecX& dx, const VecX& eq_duals,
                      const VecX& ineq_duals);

}  // namespace softsim
