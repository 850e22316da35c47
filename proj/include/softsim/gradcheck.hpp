#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "softsim/system.hpp"

namespace softsim {

struct GradCheckOptions {
  int samples = 10;
  std::uint64_t seed = 1;
  double perturbation = 0.1;  // random displacement, fraction of the shortest edge
  double fd_step = 1e-6;      // fraction of the shortest edge (or of the body size)
  bool corrupt_gradient = false;  // negative control: scales analytic gradients by 1 + 1e-3
};

// Worst relative error of one energy term over all samples.
struct TermCheck {
  std::string term;
  double gradient_error = 0.0;
  double hessian_error = 0.0;
  int samples = 0;
};

/// Compares analytic gradients and (unprojected) Hessians of every energy
/// term present in the system against central differences at random
/// configurations near the rest shape. Terms: elastic, muscle, gravity,
/// inertia (both schemes) and damping.
std::vector<TermCheck> CheckDerivatives(const System& system, double duration,
                                        const GradCheckOptions& options);

// |a - b| / max(|a|, |b|, floor), Frobenius/Euclidean norms.
double RelativeError(const MatX& analytic, const MatX& numeric, double floor = 1e-300);

}  // namespace softsim
