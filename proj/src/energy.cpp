#include "softsim/energy.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

#include "softsim/solver.hpp"

namespace softsim {

namespace {

double LeviCivita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  return ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
}

Mat3 Cofactor(const Mat3& F) {
  Mat3 c;
  c.col(0) = F.col(1).cross(F.col(2));
  c.col(1) = F.col(2).cross(F.col(0));
  c.col(2) = F.col(0).cross(F.col(1));
  return c;
}

// d2(det F) / dF_ab dF_cd = eps_ace eps_bdf F_ef
Mat9 DeterminantHessian(const Mat3& F) {
  Mat9 h = Mat9::Zero();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double s = 0.0;
          for (int e = 0; e < 3; ++e)
            for (int f = 0; f < 3; ++f) s += LeviCivita(a, c, e) * LeviCivita(b, d, f) * F(e, f);
          h(3 * a + b, 3 * c + d) = s;
        }
  return h;
}

}  // namespace

std::string ToString(MaterialModel m) {
  return m == MaterialModel::kNeoHookean ? "neo-hookean" : "stable-neo-hookean";
}

MaterialModel MaterialModelFromString(const std::string& s) {
  if (s == "neo-hookean") return MaterialModel::kNeoHookean;
  if (s == "stable-neo-hookean") return MaterialModel::kStableNeoHookean;
  throw InputError("unknown material model '" + s + "'");
}

std::string ToString(Scheme s) {
  return s == Scheme::kBackwardEuler ? "backward-euler" : "crank-nicolson";
}

Scheme SchemeFromString(const std::string& s) {
  if (s == "backward-euler") return Scheme::kBackwardEuler;
  if (s == "crank-nicolson") return Scheme::kCrankNicolson;
  throw InputError("unknown integrator '" + s + "'");
}

Lame LameFromMaterial(double young, double poisson) {
  if (!(young > 0.0)) throw DomainError("Young's modulus must be positive");
  if (!(poisson >= 0.0 && poisson < 0.5))
    throw DomainError("Poisson's ratio must lie in [0, 0.5)");
  Lame l;
  l.mu = young / (2.0 * (1.0 + poisson));
  l.lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  return l;
}

std::optional<DensityEval> NeoHookeanDensity(const Mat3& F, const Lame& lame) {
  const double J = F.determinant();
  if (!(J > 0.0)) return std::nullopt;
  const double logJ = std::log(J);
  const double mu = lame.mu, lambda = lame.lambda;
  const Mat3 FinvT = F.inverse().transpose();
  const double c = lambda * logJ - mu;

  DensityEval d;
  d.psi = 0.5 * mu * (F.squaredNorm() - 3.0) - mu * logJ + 0.5 * lambda * logJ * logJ;
  d.stress = mu * F + c * FinvT;

  const Vec9 g = FlattenRowMajor(FinvT);
  d.hessian = mu * Mat9::Identity() + lambda * g * g.transpose();
  // d(F^-T)_ab / dF_cd = -(F^-T)_ad (F^-T)_cb
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int cc = 0; cc < 3; ++cc)
        for (int dd = 0; dd < 3; ++dd)
          d.hessian(3 * a + b, 3 * cc + dd) -= c * FinvT(a, dd) * FinvT(cc, b);
  return d;
}

DensityEval StableNeoHookeanDensity(const Mat3& F, const Lame& lame) {
  const double mu = 4.0 / 3.0 * lame.mu;
  const double lambda = lame.lambda + 5.0 / 6.0 * lame.mu;
  const double alpha = 1.0 + mu / lambda - mu / (4.0 * lambda);

  const double ic = F.squaredNorm();
  const double J = F.determinant();
  const Mat3 cof = Cofactor(F);

  DensityEval d;
  d.psi = 0.5 * mu * (ic - 3.0) - 0.5 * mu * std::log(ic + 1.0) +
          0.5 * lambda * (J - alpha) * (J - alpha);
  d.stress = mu * (1.0 - 1.0 / (ic + 1.0)) * F + lambda * (J - alpha) * cof;

  const Vec9 f = FlattenRowMajor(F);
  const Vec9 g = FlattenRowMajor(cof);
  d.hessian = mu * (1.0 - 1.0 / (ic + 1.0)) * Mat9::Identity() +
              (2.0 * mu / ((ic + 1.0) * (ic + 1.0))) * f * f.transpose() +
              lambda * g * g.transpose() + lambda * (J - alpha) * DeterminantHessian(F);
  return d;
}

DensityEval MuscleDensity(const Mat3& F, double activation, const Vec3& direction,
                          double stiffness) {
  const double s = (1.0 - activation) * (1.0 - activation) * stiffness;
  const Vec3 fm = F * direction;
  DensityEval d;
  d.psi = 0.5 * s * fm.squaredNorm();
  d.stress = s * fm * direction.transpose();
  const Mat3 mm = direction * direction.transpose();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int dd = 0; dd < 3; ++dd) d.hessian(3 * a + b, 3 * a + dd) = s * mm(b, dd);
  return d;
}

EnergyEval ContractDensity(const DensityEval& d, double volume, const MatX& deformation_hessian,
                           bool with_hessian) {
  EnergyEval out;
  out.value = d.psi * volume;
  out.gradient = deformation_hessian.transpose() * FlattenRowMajor(d.stress) * volume;
  if (with_hessian)
    out.hessian = deformation_hessian.transpose() * d.hessian * deformation_hessian * volume;
  return out;
}

EnergyEval NeoHookean(const Mat3& F, const Lame& lame, double volume,
                      const MatX& deformation_hessian) {
  const auto d = NeoHookeanDensity(F, lame);
  if (!d) throw NumericalError("inverted element: det F <= 0 under the log Neo-Hookean model");
  return ContractDensity(*d, volume, deformation_hessian);
}

EnergyEval StableNeoHookean(const Mat3& F, const Lame& lame, double volume,
                            const MatX& deformation_hessian) {
  return ContractDensity(StableNeoHookeanDensity(F, lame), volume, deformation_hessian);
}

EnergyEval Muscle(const Mat3& F, double activation, const Vec3& direction, double stiffness,
                  double volume, const MatX& deformation_hessian) {
  return ContractDensity(MuscleDensity(F, activation, direction, stiffness), volume,
                         deformation_hessian);
}

double InternalWeight(Scheme scheme) { return scheme == Scheme::kCrankNicolson ? 0.5 : 1.0; }

DiagonalEval Gravity(const VecX& masses, const Vec3& g, const VecX& x) {
  DiagonalEval out;
  out.gradient.resize(x.size());
  out.hessian_diagonal = VecX::Zero(x.size());
  for (int v = 0; v < masses.size(); ++v) {
    const Vec3 f = masses(v) * g;
    out.value -= f.dot(x.segment<3>(3 * v));
    out.gradient.segment<3>(3 * v) = -f;
  }
  return out;
}

DiagonalEval InertiaPotential(const VecX& x, const IntegratorContext& ctx) {
  if (!(ctx.dt > 0.0)) throw DomainError("time step must be positive");
  if (x.size() != ctx.x_prev.size() || x.size() != ctx.v_prev.size() ||
      x.size() != ctx.mass.size())
    throw MismatchError("integrator context size does not match the state");
  const VecX d = x - ctx.x_prev - ctx.dt * ctx.v_prev;
  const double inv_dt2 = 1.0 / (ctx.dt * ctx.dt);
  DiagonalEval out;
  if (ctx.scheme == Scheme::kBackwardEuler) {
    out.value = 0.5 * inv_dt2 * d.dot(ctx.mass.cwiseProduct(d));
    out.gradient = inv_dt2 * ctx.mass.cwiseProduct(d);
    out.hessian_diagonal = inv_dt2 * ctx.mass;
  } else {
    if (!ctx.previous_force || ctx.previous_force->size() != x.size())
      throw InputError("Crank-Nicolson needs the previous-step forces");
    out.value = inv_dt2 * d.dot(ctx.mass.cwiseProduct(d)) - 0.5 * ctx.previous_force->dot(x);
    out.gradient = 2.0 * inv_dt2 * ctx.mass.cwiseProduct(d) - 0.5 * *ctx.previous_force;
    out.hessian_diagonal = 2.0 * inv_dt2 * ctx.mass;
  }
  return out;
}

DiagonalEval DampingPotential(const VecX& x, const IntegratorContext& ctx) {
  const VecX d = x - ctx.x_prev;
  const double c = ctx.damping / ctx.dt;
  DiagonalEval out;
  out.value = 0.5 * c * d.dot(ctx.mass.cwiseProduct(d));
  out.gradient = c * ctx.mass.cwiseProduct(d);
  out.hessian_diagonal = c * ctx.mass;
  return out;
}

VecX VelocityUpdate(const VecX& x_new, const IntegratorContext& ctx) {
  if (ctx.scheme == Scheme::kBackwardEuler) return (x_new - ctx.x_prev) / ctx.dt;
  return 2.0 * (x_new - ctx.x_prev) / ctx.dt - ctx.v_prev;
}

VecX EnergyModel::dof_mass() const {
  VecX m(3 * vertex_mass.size());
  for (int v = 0; v < vertex_mass.size(); ++v) m.segment<3>(3 * v).setConstant(vertex_mass(v));
  return m;
}

EnergyModel MakeEnergyModel(MeshModel mesh, std::vector<Material> element_material,
                            std::vector<MuscleSpec> muscles, const Vec3& gravity) {
  if (static_cast<int>(element_material.size()) != mesh.num_elements())
    throw MismatchError("one material per element required");
  EnergyModel model;
  std::vector<double> densities;
  for (const auto& m : element_material) {
    model.element_lame.push_back(m.lame());
    densities.push_back(m.density);
  }
  model.rest = RestPrecompute(mesh, densities);
  model.vertex_mass = model.rest.vertex_mass;
  model.mesh = std::move(mesh);
  model.element_material = std::move(element_material);
  for (auto& m : muscles) {
    if (std::abs(m.direction.norm() - 1.0) > 1e-9)
      throw DomainError("muscle direction must be a unit vector");
    if (m.stiffness < 0.0) throw DomainError("muscle stiffness must be non-negative");
    for (int e : m.elements)
      if (e < 0 || e >= model.mesh.num_elements())
        throw InputError("muscle element index out of range");
  }
  model.muscles = std::move(muscles);
  model.gravity = gravity;
  return model;
}

Assembled Assemble(const EnergyModel& model, const VecX& x, double t,
                   const IntegratorContext* ctx, const AssemblyOptions& options) {
  const MeshModel& mesh = model.mesh;
  const int n = mesh.num_dofs();
  if (x.size() != n) throw MismatchError("state size does not match the mesh");
  const double w = options.internal_weight;

  Assembled out;
  if (options.gradient) out.gradient = VecX::Zero(n);

  // Muscle activations per element (superposed on the passive material).
  std::vector<std::vector<int>> element_muscles(mesh.num_elements());
  std::vector<double> activation(model.muscles.size());
  for (std::size_t k = 0; k < model.muscles.size(); ++k) {
    activation[k] = model.muscles[k].activation(t);
    for (int e : model.muscles[k].elements) element_muscles[e].push_back(static_cast<int>(k));
  }

  std::vector<Triplet> triplets;
  VecX diagonal = VecX::Zero(n);
  const bool derivs = options.gradient || options.hessian;

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    const int ne = static_cast<int>(nodes.size()) * 3;
    const Material& mat = model.element_material[e];
    const Lame& lame = model.element_lame[e];
    VecX ge = VecX::Zero(ne);
    MatX he;
    if (options.hessian) he = MatX::Zero(ne, ne);

    for (const auto& qp : model.rest.elements[e].points) {
      const Mat3 F = DeformationGradient(qp, nodes, x);
      DensityEval d;
      if (mat.model == MaterialModel::kNeoHookean) {
        auto nh = NeoHookeanDensity(F, lame);
        if (!nh) {
          if (derivs)
            throw NumericalError("inverted element " + std::to_string(e) +
                                 ": det F <= 0 under the log Neo-Hookean model");
          out.value = std::numeric_limits<double>::infinity();
          out.inverted_element = e;
          return out;
        }
        d = *nh;
      } else {
        d = StableNeoHookeanDensity(F, lame);
      }
      out.parts.elastic += d.psi * qp.volume;
      for (int k : element_muscles[e]) {
        const auto& ms = model.muscles[k];
        const DensityEval dm = MuscleDensity(F, activation[k], ms.direction, ms.stiffness);
        out.parts.muscle += dm.psi * qp.volume;
        d.stress += dm.stress;
        d.hessian += dm.hessian;
      }
      if (derivs) {
        const EnergyEval ev = ContractDensity(d, qp.volume, qp.deformation_hessian, options.hessian);
        ge += ev.gradient;
        if (options.hessian) he += ev.hessian;
      }
    }

    if (options.gradient)
      for (std::size_t a = 0; a < nodes.size(); ++a)
        out.gradient.segment<3>(3 * nodes[a]) += w * ge.segment<3>(3 * a);
    if (options.hessian) {
      if (options.project_psd) he = ProjectPsd(he, options.psd_floor);
      for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = 0; b < nodes.size(); ++b)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const double v = w * he(3 * a + i, 3 * b + j);
              if (v != 0.0) triplets.emplace_back(3 * nodes[a] + i, 3 * nodes[b] + j, v);
            }
    }
  }

  const DiagonalEval grav = Gravity(model.vertex_mass, model.gravity, x);
  out.parts.gravity = grav.value;
  out.value += w * (out.parts.elastic + out.parts.muscle + out.parts.gravity);
  if (options.gradient) out.gradient += w * grav.gradient;

  if (ctx) {
    const DiagonalEval inertia = InertiaPotential(x, *ctx);
    const DiagonalEval damping = DampingPotential(x, *ctx);
    out.value += inertia.value + damping.value;
    if (options.gradient) out.gradient += inertia.gradient + damping.gradient;
    diagonal += inertia.hessian_diagonal + damping.hessian_diagonal;
  }

  if (options.hessian) {
    for (int i = 0; i < n; ++i)
      if (diagonal(i) != 0.0) triplets.emplace_back(i, i, diagonal(i));
    out.hessian.resize(n, n);
    out.hessian.setFromTriplets(triplets.begin(), triplets.end());
  }
  return out;
}

VecX InternalForces(const EnergyModel& model, const VecX& x, double t) {
  AssemblyOptions opts;
  opts.hessian = false;
  return -Assemble(model, x, t, nullptr, opts).gradient;
}

EnergyBreakdown InternalEnergies(const EnergyModel& model, const VecX& x, double t) {
  AssemblyOptions opts;
  opts.gradient = false;
  opts.hessian = false;
  return Assemble(model, x, t, nullptr, opts).parts;
}

double KineticEnergy(const EnergyModel& model, const VecX& v) {
  return 0.5 * v.dot(model.dof_mass().cwiseProduct(v));
}

}  // namespace softsim
