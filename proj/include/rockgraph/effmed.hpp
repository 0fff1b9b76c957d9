#pragma once

#include <array>
#include <span>
#include <vector>

namespace rockgraph {

// Isotropic bulk and shear moduli in GPa.
struct ElasticModuli {
  double k = 0.0;
  double mu = 0.0;

  bool operator==(const ElasticModuli&) const = default;
};

// 6x6 stiffness in Voigt notation, GPa.
using StiffnessMatrix = std::array<std::array<double, 6>, 6>;

StiffnessMatrix isotropic_stiffness(const ElasticModuli& m);

// Voigt-average isotropic moduli of an arbitrary stiffness matrix.
ElasticModuli voigt_average(const StiffnessMatrix& c);

struct Bounds {
  ElasticModuli upper;
  ElasticModuli lower;
};

// Arithmetic (Voigt) and harmonic (Reuss) volume averages. `phi` is the pore
// fraction; a zero pore modulus drives the Reuss value to 0 for phi > 0.
Bounds voigt_reuss_bounds(const ElasticModuli& mineral, const ElasticModuli& pore, double phi);

// Two-phase Hashin-Shtrikman bounds for a mineral stiffer than the pore fill.
// Singular vacuum terms are evaluated by their limits.
Bounds hashin_shtrikman(const ElasticModuli& mineral, const ElasticModuli& pore, double phi);

struct DemParams {
  ElasticModuli mineral;
  ElasticModuli inclusion{0.0, 0.0};  // vacuum
  double aspect_ratio = 0.25;
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double max_step = 0.01;

  void validate() const;
};

// Penny-crack geometric factors of inclusion `i` embedded in background `m`.
double penny_crack_p(const ElasticModuli& m, const ElasticModuli& i, double aspect_ratio);
double penny_crack_q(const ElasticModuli& m, const ElasticModuli& i, double aspect_ratio);

// Right-hand side of the DEM system in porosity y:
//   dK/dy = (K2 - K) P / (1 - y),  dmu/dy = (mu2 - mu) Q / (1 - y).
ElasticModuli dem_rhs(const DemParams& params, const ElasticModuli& state, double y);

// Effective moduli after adding inclusions up to pore fraction `phi` in [0, 1),
// integrated with an adaptive Dormand-Prince 5(4) pair. Throws NumericError on
// step-size underflow.
ElasticModuli dem_moduli(const DemParams& params, double phi);

// Sweep convenience: one integration pass, values reported at each sorted phi.
std::vector<ElasticModuli> dem_curve(const DemParams& params, std::span<const double> phis);

struct PorosityModuli {
  double phi = 0.0;
  ElasticModuli moduli;
};

struct AspectRatioFit {
  double aspect_ratio = 0.0;
  double r2_k = 0.0;
  double r2_mu = 0.0;
};

// Grid search over `alpha_grid` maximizing (R2_K + R2_mu) / 2 of DEM
// predictions; ties go to the smaller aspect ratio.
AspectRatioFit fit_aspect_ratio(std::span<const PorosityModuli> samples, std::span<const double> alpha_grid,
                                const DemParams& base);

}  // namespace rockgraph
