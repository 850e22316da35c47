#pragma once

#include <optional>
#include <string>
#include <vector>

#include "softsim/mesh.hpp"
#include "softsim/schedule.hpp"
#include "softsim/types.hpp"

namespace softsim {

// ---------------------------------------------------------------------------
// Materials

enum class MaterialModel { kNeoHookean, kStableNeoHookean };

std::string ToString(MaterialModel m);
MaterialModel MaterialModelFromString(const std::string& s);

struct Lame {
  double mu = 0.0;      // Pa
  double lambda = 0.0;  // Pa
};

/// Isotropic conversion from Young's modulus and Poisson's ratio.
/// Rejects E <= 0 and nu outside [0, 0.5).
Lame LameFromMaterial(double young, double poisson);

struct Material {
  MaterialModel model = MaterialModel::kNeoHookean;
  double young = 0.0;    // Pa
  double poisson = 0.0;  // -
  double density = 0.0;  // kg/m^3

  Lame lame() const { return LameFromMaterial(young, poisson); }
};

// ---------------------------------------------------------------------------
// Element-level energies

// Strain energy density and its first two derivatives with respect to the
// row-major flattened deformation gradient.
struct DensityEval {
  double psi = 0.0;
  Mat3 stress = Mat3::Zero();  // dpsi/dF
  Mat9 hessian = Mat9::Zero();  // d2psi/dF2
};

// Value, gradient and Hessian over element nodal coordinates.
struct EnergyEval {
  double value = 0.0;
  VecX gradient;
  MatX hessian;
};

/// Log-based compressible Neo-Hookean density
///   psi = mu/2 (tr(F^T F) - 3) - mu ln J + lambda/2 (ln J)^2.
/// Returns std::nullopt when det F <= 0.
std::optional<DensityEval> NeoHookeanDensity(const Mat3& F, const Lame& lame);

/// Inversion-robust Neo-Hookean density
///   psi = mu'/2 (I_C - 3) - mu'/2 ln(I_C + 1) + lambda'/2 (J - alpha)^2
/// with mu' = 4/3 mu, lambda' = lambda + 5/6 mu and alpha = 1 + mu'/lambda' - mu'/(4 lambda').
/// The reparameterization makes the rest state stress free and matches the
/// linearized response of the log model with the same (mu, lambda).
DensityEval StableNeoHookeanDensity(const Mat3& F, const Lame& lame);

/// Fiber contraction density psi = k/2 |(1 - a) F m|^2.
DensityEval MuscleDensity(const Mat3& F, double activation, const Vec3& direction,
                          double stiffness);

/// Chain rule through the deformation Hessian B (9 x 3n):
/// value = psi V, gradient = B^T vec(P) V, Hessian = B^T d2psi B V.
EnergyEval ContractDensity(const DensityEval& d, double volume, const MatX& deformation_hessian,
                           bool with_hessian = true);

/// Throws Error (numerical) when det F <= 0.
EnergyEval NeoHookean(const Mat3& F, const Lame& lame, double volume,
                      const MatX& deformation_hessian);
EnergyEval StableNeoHookean(const Mat3& F, const Lame& lame, double volume,
                            const MatX& deformation_hessian);
EnergyEval Muscle(const Mat3& F, double activation, const Vec3& direction, double stiffness,
                  double volume, const MatX& deformation_hessian);

// ---------------------------------------------------------------------------
// System-level (diagonal) energies

struct DiagonalEval {
  double value = 0.0;
  VecX gradient;
  VecX hessian_diagonal;
};

enum class Scheme { kBackwardEuler, kCrankNicolson };

std::string ToString(Scheme s);
Scheme SchemeFromString(const std::string& s);

// Everything a time-integration potential needs from the previous step.
// `previous_force` is the total non-inertial, non-damping force at x_prev
// (internal plus external); only Crank-Nicolson reads it.
struct IntegratorContext {
  double dt = 0.0;
  VecX x_prev;
  VecX v_prev;
  std::optional<VecX> previous_force;
  Scheme scheme = Scheme::kBackwardEuler;
  double damping = 0.0;  // alpha, 1/s
  VecX mass;             // per degree of freedom, kg
};

// 1 for backward Euler, 1/2 for Crank-Nicolson.
double InternalWeight(Scheme scheme);

/// E = -sum m_v g . x_v. `masses` is per vertex.
DiagonalEval Gravity(const VecX& masses, const Vec3& g, const VecX& x);

/// Backward Euler:  1/(2 dt^2) |x - x_hat|_M^2
/// Crank-Nicolson:  1/dt^2 |x - x_hat|_M^2 - 1/2 f_prev . x
/// with x_hat = x_prev + dt v_prev.
DiagonalEval InertiaPotential(const VecX& x, const IntegratorContext& ctx);

/// alpha/(2 dt) |x - x_prev|_M^2; its gradient is alpha M v at the implicit velocity.
DiagonalEval DampingPotential(const VecX& x, const IntegratorContext& ctx);

VecX VelocityUpdate(const VecX& x_new, const IntegratorContext& ctx);

// ---------------------------------------------------------------------------
// Assembly

struct MuscleSpec {
  std::string element_set;
  std::vector<int> elements;
  double stiffness = 0.0;
  Vec3 direction = Vec3::UnitZ();
  ScalarSchedule activation = ScalarSchedule::Constant(0.0);
};

// Immutable description of every energy term of a body.
struct EnergyModel {
  MeshModel mesh;
  RestData rest;
  std::vector<Material> element_material;  // one per element
  std::vector<Lame> element_lame;
  std::vector<MuscleSpec> muscles;
  Vec3 gravity = Vec3::Zero();
  VecX vertex_mass;  // lumped element mass plus point masses

  int num_dofs() const { return mesh.num_dofs(); }
  VecX dof_mass() const;
};

EnergyModel MakeEnergyModel(MeshModel mesh, std::vector<Material> element_material,
                            std::vector<MuscleSpec> muscles, const Vec3& gravity);

struct AssemblyOptions {
  bool gradient = true;
  bool hessian = true;
  bool project_psd = true;
  double psd_floor = 0.0;
  // Multiplies elastic, muscle and gravity terms (1/2 under Crank-Nicolson).
  double internal_weight = 1.0;
};

struct EnergyBreakdown {
  double elastic = 0.0;
  double muscle = 0.0;
  double gravity = 0.0;
};

struct Assembled {
  double value = 0.0;  // +inf if a log-model element is inverted
  VecX gradient;
  SparseMat hessian;
  EnergyBreakdown parts;  // unweighted
  int inverted_element = -1;
};

/// Internal energies (elastic, muscle, gravity) at time t, scaled by
/// options.internal_weight, plus inertia and damping when `ctx` is given.
/// Element Hessians are PSD-projected before scatter when requested.
/// Throws Error on an inverted log-model element when derivatives are
/// requested; value-only calls report +inf instead.
Assembled Assemble(const EnergyModel& model, const VecX& x, double t,
                   const IntegratorContext* ctx, const AssemblyOptions& options);

/// -(gradient of elastic + muscle + gravity) at (x, t).
VecX InternalForces(const EnergyModel& model, const VecX& x, double t);

EnergyBreakdown InternalEnergies(const EnergyModel& model, const VecX& x, double t);

double KineticEnergy(const EnergyModel& model, const VecX& v);

}  // namespace softsim
