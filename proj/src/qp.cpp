#include "softsim/qp.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace softsim {

namespace {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Solutions of  H x + J_f^T mu + A_W^T nu = top,  J_f x = bottom_f,  A_W x = bottom_w
// where A_W are the working rows of J_h.
struct KktSolution {
  VecX x;
  VecX mu;
  VecX nu;
};

class KktSystem {
 public:
  explicit KktSystem(const QpProblem& qp) : qp_(qp), jf_(qp.jf), jh_(qp.jh) {
    for (int k = 0; k < qp.H.outerSize(); ++k)
      for (SparseMat::InnerIterator it(qp.H, k); it; ++it)
        h_scale_ = std::max(h_scale_, std::abs(it.value()));
  }

  int factorizations() const { return factorizations_; }

  // Factors the KKT matrix of working set `working`; retries with a tiny
  // regularization when the matrix is singular.
  bool Factor(const std::vector<int>& working) {
    working_ = working;
    if (Assemble(0.0)) return true;
    return Assemble(1e-12 * h_scale_);
  }

  bool Solve(const VecX& top, const VecX& bottom_f, const VecX& bottom_w, KktSolution& out) const {
    const int n = qp_.num_variables(), p = qp_.num_equalities(), w = static_cast<int>(working_.size());
    VecX rhs(n + p + w);
    rhs << top, bottom_f, bottom_w;
    VecX z = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success || !z.allFinite()) return false;
    const VecX dz = lu_.solve(rhs - kkt_ * z);  // one step of iterative refinement
    if (dz.allFinite()) z += dz;
    out.x = z.head(n);
    out.mu = z.segment(n, p);
    out.nu = z.tail(w);
    return true;
  }

 private:
  bool Assemble(double reg) {
    const int n = qp_.num_variables(), p = qp_.num_equalities(), w = static_cast<int>(working_.size());
    const int size = n + p + w;
    std::vector<Triplet> t;
    t.reserve(qp_.H.nonZeros() + 2 * (jf_.nonZeros() + 3 * w) + size);
    for (int k = 0; k < qp_.H.outerSize(); ++k)
      for (SparseMat::InnerIterator it(qp_.H, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < p; ++i)
      for (RowSparse::InnerIterator it(jf_, i); it; ++it) {
        t.emplace_back(n + i, it.col(), it.value());
        t.emplace_back(it.col(), n + i, it.value());
      }
    for (int k = 0; k < w; ++k)
      for (RowSparse::InnerIterator it(jh_, working_[k]); it; ++it) {
        t.emplace_back(n + p + k, it.col(), it.value());
        t.emplace_back(it.col(), n + p + k, it.value());
      }
    if (reg > 0.0) {
      for (int i = 0; i < n; ++i) t.emplace_back(i, i, reg);
      for (int i = n; i < size; ++i) t.emplace_back(i, i, -reg);
    }
    kkt_.resize(size, size);
    kkt_.setFromTriplets(t.begin(), t.end());
    ++factorizations_;
    lu_.compute(kkt_);
    return lu_.info() == Eigen::Success;
  }

  const QpProblem& qp_;
  RowSparse jf_;
  RowSparse jh_;
  double h_scale_ = 1.0;
  int factorizations_ = 0;
  std::vector<int> working_;
  SparseMat kkt_;
  Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace

std::string ToString(QpStatus s) {
  switch (s) {
    case QpStatus::kSolved: return "solved";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kIterationLimit: return "iteration-limit";
    case QpStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

double KktResiduals::worst() const {
  return std::max({stationarity, equality, inequality, dual, complementarity});
}

KktResiduals KktAudit(const QpProblem& qp, const VecX& dx, const VecX& eq_duals,
                      const VecX& ineq_duals) {
  KktResiduals r;
  VecX st = qp.H * dx + qp.g;
  if (qp.num_equalities() > 0) st += qp.jf.transpose() * eq_duals;
  if (qp.num_inequalities() > 0) st -= qp.jh.transpose() * ineq_duals;
  r.stationarity = st.size() ? st.cwiseAbs().maxCoeff() : 0.0;
  if (qp.num_equalities() > 0) r.equality = (qp.jf * dx + qp.f).cwiseAbs().maxCoeff();
  if (qp.num_inequalities() > 0) {
    const VecX slack = qp.jh * dx + qp.h;
    r.inequality = std::max(0.0, -slack.minCoeff());
    r.dual = std::max(0.0, -ineq_duals.minCoeff());
    r.complementarity = ineq_duals.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  return r;
}

QpResult SolveQp(const QpProblem& qp, const QpOptions& options) {
  const int n = qp.num_variables();
  const int p = qp.num_equalities();
  const int m = qp.num_inequalities();
  if (qp.H.rows() != n || qp.H.cols() != n || qp.jf.rows() != p || qp.jh.rows() != m ||
      (p > 0 && qp.jf.cols() != n) || (m > 0 && qp.jh.cols() != n))
    throw MismatchError("QP dimensions are inconsistent");

  // Dual active-set method (Goldfarb-Idnani). Starts at the minimizer under
  // the equalities alone and adds the most violated inequality each round,
  // keeping the working-set multipliers non-negative throughout, so no
  // feasible starting point is needed and infeasibility is detected exactly.
  QpResult result;
  result.eq_duals = VecX::Zero(p);
  result.ineq_duals = VecX::Zero(m);
  const int max_iter = options.max_iterations > 0 ? options.max_iterations : 10 * (p + m) + 50;
  const RowSparse jh(qp.jh);

  KktSystem kkt(qp);
  std::vector<int> working;
  VecX zeta;  // multipliers of `working`, >= 0

  auto solve_eqp = [&](KktSolution& s) {
    VecX hw(working.size());
    for (std::size_t k = 0; k < working.size(); ++k) hw(k) = -qp.h(working[k]);
    return kkt.Solve(-qp.g, -qp.f, hw, s);
  };
  auto finish = [&](QpStatus status, const VecX& x) {
    result.status = status;
    result.dx = x;
    result.working_set = working;
    std::sort(result.working_set.begin(), result.working_set.end());
    result.factorizations = kkt.factorizations();
    return result;
  };

  KktSolution s;
  if (!kkt.Factor(working) || !solve_eqp(s)) return finish(QpStatus::kNumericalFailure, VecX::Zero(n));
  VecX x = s.x;
  result.eq_duals = s.mu;
  if (m == 0) return finish(QpStatus::kSolved, x);

  VecX row_norm(m);
  for (int i = 0; i < m; ++i) row_norm(i) = std::max(jh.row(i).norm(), 1e-300);

  for (int iter = 0; iter < max_iter; ++iter) {
    result.iterations = iter + 1;
    // Most violated constraint, scaled by its row norm.
    const VecX slack = jh * x + qp.h;
    int q = -1;
    double worst = -options.primal_tolerance;
    for (int i = 0; i < m; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double v = slack(i) / row_norm(i);
      if (v < worst) {
        worst = v;
        q = i;
      }
    }
    if (q < 0) {
      // Clean up accumulated round-off with one exact solve on the final set.
      if (!solve_eqp(s)) return finish(QpStatus::kNumericalFailure, x);
      x = s.x;
      result.eq_duals = s.mu;
      for (std::size_t k = 0; k < working.size(); ++k) result.ineq_duals(working[k]) = std::max(0.0, -s.nu(k));
      return finish(QpStatus::kSolved, x);
    }

    // Raise the multiplier t of row q until q becomes active (full step) or
    // a working multiplier reaches zero (partial step, drop that row).
    const VecX aq = VecX(jh.row(q).transpose());
    double t_q = 0.0;
    for (;;) {
      KktSolution d;
      if (!kkt.Solve(aq, VecX::Zero(p), VecX::Zero(working.size()), d))
        return finish(QpStatus::kNumericalFailure, x);
      const VecX& z = d.x;            // primal change per unit t
      const VecX dzeta = -d.nu;       // working multiplier change per unit t
      double t_partial = std::numeric_limits<double>::infinity();
      int blocking = -1;
      for (std::size_t k = 0; k < working.size(); ++k)
        if (dzeta(k) < 0.0 && zeta(k) / -dzeta(k) < t_partial) {
          t_partial = zeta(k) / -dzeta(k);
          blocking = static_cast<int>(k);
        }
      const double curvature = aq.dot(z);
      const bool degenerate = z.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + aq.cwiseAbs().maxCoeff()) ||
                              !(curvature > 0.0);
      const double s_q = aq.dot(x) + qp.h(q);
      const double t_full = degenerate ? std::numeric_limits<double>::infinity() : -s_q / curvature;
      if (std::isinf(t_partial) && std::isinf(t_full)) return finish(QpStatus::kInfeasible, x);
      const double t = std::min(t_partial, t_full);
      if (!degenerate) x += t * z;
      if (working.size()) zeta += t * dzeta;
      t_q += t;
      if (t_full <= t_partial) {
        working.push_back(q);
        zeta.conservativeResize(working.size());
        zeta(working.size() - 1) = t_q;
        if (!kkt.Factor(working)) return finish(QpStatus::kNumericalFailure, x);
        break;
      }
      working.erase(working.begin() + blocking);
      for (int k = blocking; k + 1 < zeta.size(); ++k) zeta(k) = zeta(k + 1);
      zeta.conservativeResize(working.size());
      if (!kkt.Factor(working)) return finish(QpStatus::kNumericalFailure, x);
      if (++iter >= max_iter) return finish(QpStatus::kIterationLimit, x);
    }
  }
  return finish(QpStatus::kIterationLimit, x);
}

}  // namespace softsim
