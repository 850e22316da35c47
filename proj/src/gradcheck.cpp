#include "softsim/gradcheck.hpp"

#include <algorithm>
#include <functional>
#include <random>

namespace softsim {

double RelativeError(const MatX& analytic, const MatX& numeric, double floor) {
  const double scale = std::max({analytic.norm(), numeric.norm(), floor});
  return (analytic - numeric).norm() / scale;
}

namespace {

using ValueFn = std::function<double(const VecX&)>;
using GradientFn = std::function<VecX(const VecX&)>;

VecX FdGradient(const ValueFn& f, VecX x, double h) {
  VecX g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    x(i) = xi + h;
    const double plus = f(x);
    x(i) = xi - h;
    const double minus = f(x);
    x(i) = xi;
    g(i) = (plus - minus) / (2.0 * h);
  }
  return g;
}

MatX FdHessian(const GradientFn& g, VecX x, double h) {
  MatX H(x.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    x(i) = xi + h;
    const VecX plus = g(x);
    x(i) = xi - h;
    const VecX minus = g(x);
    x(i) = xi;
    H.col(i) = (plus - minus) / (2.0 * h);
  }
  return H;
}

// Element term over local coordinates (3 per node, node order of the element).
using ElementFn = std::function<EnergyEval(const VecX& local)>;

struct Checker {
  TermCheck result;
  bool corrupt = false;

  void Add(const ElementFn& fn, const VecX& x, double h) {
    const EnergyEval a = fn(x);
    VecX grad = a.gradient;
    if (corrupt) grad *= 1.0 + 1e-3;
    const VecX fd_g = FdGradient([&](const VecX& y) { return fn(y).value; }, x, h);
    const MatX fd_h = FdHessian([&](const VecX& y) { return fn(y).gradient; }, x, h);
    result.gradient_error = std::max(result.gradient_error, RelativeError(grad, fd_g));
    result.hessian_error = std::max(result.hessian_error, RelativeError(a.hessian, fd_h));
    ++result.samples;
  }
};

VecX Gather(const VecX& x, std::span<const int> nodes) {
  VecX local(3 * nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) local.segment<3>(3 * a) = x.segment<3>(3 * nodes[a]);
  return local;
}

Mat3 LocalF(const QuadraturePoint& qp, const VecX& local) {
  Mat3 F = Mat3::Zero();
  for (int a = 0; a < qp.shape_gradients.rows(); ++a)
    F += local.segment<3>(3 * a) * qp.shape_gradients.row(a);
  return F;
}

EnergyEval SumOverPoints(const ElementRest& rest, const VecX& local,
                         const std::function<EnergyEval(const Mat3&, const QuadraturePoint&)>& fn) {
  EnergyEval sum;
  sum.gradient = VecX::Zero(local.size());
  sum.hessian = MatX::Zero(local.size(), local.size());
  for (const auto& qp : rest.points) {
    const EnergyEval e = fn(LocalF(qp, local), qp);
    sum.value += e.value;
    sum.gradient += e.gradient;
    sum.hessian += e.hessian;
  }
  return sum;
}

EnergyEval FromDiagonal(const DiagonalEval& d) {
  EnergyEval e;
  e.value = d.value;
  e.gradient = d.gradient;
  e.hessian = d.hessian_diagonal.asDiagonal();
  return e;
}

}  // namespace

std::vector<TermCheck> CheckDerivatives(const System& system, double duration,
                                        const GradCheckOptions& options) {
  std::vector<TermCheck> out;
  if (options.samples <= 0) return out;
  const EnergyModel& model = system.energy;
  const MeshModel& mesh = model.mesh;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_vec = [&](int n) {
    VecX v(n);
    for (int i = 0; i < n; ++i) v(i) = unit(rng);
    return v;
  };

  std::vector<int> all(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) all[e] = e;
  const VecX X = mesh.positions();
  double size = 0.0;
  for (int v = 0; v < mesh.num_vertices(); ++v) size = std::max(size, (mesh.vertices[v] - mesh.vertices[0]).norm());
  const double h_min = all.empty() ? std::max(size, 1.0) : MinEdgeLength(mesh, all);
  const double amp = options.perturbation * h_min;

  Checker elastic{{"elastic"}, options.corrupt_gradient};
  Checker muscle{{"muscle"}, options.corrupt_gradient};
  for (int s = 0; s < options.samples && mesh.num_elements() > 0; ++s) {
    const int e = std::uniform_int_distribution<int>(0, mesh.num_elements() - 1)(rng);
    const auto nodes = mesh.element_nodes(e);
    const VecX local = Gather(X, nodes) + amp * random_vec(3 * static_cast<int>(nodes.size()));
    const ElementRest& rest = model.rest.elements[e];
    const Lame lame = model.element_lame[e];
    const bool stable = model.element_material[e].model == MaterialModel::kStableNeoHookean;
    elastic.Add(
        [&](const VecX& y) {
          return SumOverPoints(rest, y, [&](const Mat3& F, const QuadraturePoint& qp) {
            return stable ? StableNeoHookean(F, lame, qp.volume, qp.deformation_hessian)
                          : NeoHookean(F, lame, qp.volume, qp.deformation_hessian);
          });
        },
        local, options.fd_step * h_min);

    for (const auto& m : model.muscles) {
      if (m.elements.empty()) continue;
      const int me = m.elements[std::uniform_int_distribution<std::size_t>(0, m.elements.size() - 1)(rng)];
      const auto mnodes = mesh.element_nodes(me);
      const VecX mlocal = Gather(X, mnodes) + amp * random_vec(3 * static_cast<int>(mnodes.size()));
      const double a = m.activation(std::uniform_real_distribution<double>(0.0, std::max(duration, 0.0))(rng));
      const ElementRest& mrest = model.rest.elements[me];
      muscle.Add(
          [&](const VecX& y) {
            return SumOverPoints(mrest, y, [&](const Mat3& F, const QuadraturePoint& qp) {
              return Muscle(F, a, m.direction, m.stiffness, qp.volume, qp.deformation_hessian);
            });
          },
          mlocal, options.fd_step * h_min);
    }
  }
  if (elastic.result.samples) out.push_back(elastic.result);
  if (muscle.result.samples) out.push_back(muscle.result);

  // System-level terms act on all coordinates.
  const int n = model.num_dofs();
  const double h_sys = options.fd_step * std::max(size, h_min);
  Checker gravity{{"gravity"}, options.corrupt_gradient};
  Checker inertia_be{{"inertia-backward-euler"}, options.corrupt_gradient};
  Checker inertia_cn{{"inertia-crank-nicolson"}, options.corrupt_gradient};
  Checker damping{{"damping"}, options.corrupt_gradient};
  for (int s = 0; s < options.samples; ++s) {
    const VecX x = X + amp * random_vec(n);
    if (model.gravity.squaredNorm() > 0.0)
      gravity.Add([&](const VecX& y) { return FromDiagonal(Gravity(model.vertex_mass, model.gravity, y)); },
                  x, h_sys);
    IntegratorContext ctx;
    ctx.dt = 0.01;
    ctx.x_prev = X + amp * random_vec(n);
    ctx.v_prev = random_vec(n);
    ctx.previous_force = random_vec(n);
    ctx.mass = model.dof_mass();
    ctx.damping = system.damping > 0.0 ? system.damping : 1.0;
    ctx.scheme = Scheme::kBackwardEuler;
    inertia_be.Add([&](const VecX& y) { return FromDiagonal(InertiaPotential(y, ctx)); }, x, h_sys);
    damping.Add([&](const VecX& y) { return FromDiagonal(DampingPotential(y, ctx)); }, x, h_sys);
    IntegratorContext cn = ctx;
    cn.scheme = Scheme::kCrankNicolson;
    inertia_cn.Add([&](const VecX& y) { return FromDiagonal(InertiaPotential(y, cn)); }, x, h_sys);
  }
  for (auto* c : {&gravity, &inertia_be, &inertia_cn, &damping})
    if (c->result.samples) out.push_back(c->result);
  return out;
}

}  // namespace softsim
