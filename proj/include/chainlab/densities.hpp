#pragma once

#include "chainlab/chain.hpp"
#include "chainlab/grid.hpp"

#include <complex>
#include <string>
#include <vector>

namespace chainlab {

enum class DensityKind { number, momentum, energy };

const char* to_string(DensityKind kind);

// One Fourier mode of a local density: first and second moments in a
// Gaussian state, at the Wigner-symbol (classical-moment) level.
struct SpectralMoment {
  double wavenumber = 0.0;
  std::complex<double> mean;
  double variance = 0.0;
  DensityKind which = DensityKind::number;
};

// n(k) = sum_j e^{i k q_j}
SpectralMoment spectral_number(const GaussianState& state, double k);

// g(k) = sum_j p_j e^{i k q_j}
SpectralMoment spectral_momentum(const GaussianState& state, double k);

// h(k) = sum_j (p_j^2/2m + (K/2)(q_j - b_j)^2) e^{i k q_j}; the
// nearest-neighbour interaction term is excluded.
SpectralMoment spectral_energy(const GaussianState& state,
                               const ChainParams& params, double k);

// Diagonal (j = n) and cross (j != n) parts of the number variance.
struct VarianceSplit {
  double diagonal = 0.0;
  double cross = 0.0;
};

VarianceSplit number_variance_split(const GaussianState& state, double k);

// Coarse-grained real-space densities: every delta(q_j - x) is replaced by a
// Gaussian window of width `window`; all moments are then closed-form.
struct DensityField {
  Grid1D grid;
  double window = 0.0;
  VectorXd n, g, h, tau, j;
  VectorXd temperature; // NaN where n is below the mask floor
  VectorXd b_kernel;    // sum_j b_j * kernel_j(x), the binding source term
  double n_floor = 0.0; // absolute mask threshold used for temperature
};

struct FieldOptions {
  double n_floor_rel = 1e-8; // temperature mask, relative to max n
  bool raw_momentum_variance = false; // Var(p_j) instead of Var(p_j | q_j = x)
};

DensityField real_space_fields(const GaussianState& state,
                               const ChainParams& params, const Grid1D& grid,
                               double window, const FieldOptions& opts = {});

// theta(x) = kT(x); NaN where masked.
VectorXd temperature_field(const GaussianState& state, const ChainParams& params,
                           const Grid1D& grid, double window,
                           const FieldOptions& opts = {});

struct CorrelationProfile {
  VectorXd profile;        // offset r = 0 .. N/2, averaged over sites
  double corr_length = 0.0; // first |profile| < 1/e crossing, interpolated
  bool resolved = false;    // false when no crossing exists on the chain
  int excluded_sites = 0;   // sites with degenerate position variance
};

CorrelationProfile correlation_profile(const GaussianState& state);

// Discrete residuals of the local conservation laws along a trajectory of
// states with uniform spacing dt, via centred differences in t and x.
struct ResidualNorm {
  double l2 = 0.0;        // absolute L2 of the residual, interior cells
  double term_scale = 0.0; // max L2 over the individual terms
  double relative() const { return term_scale > 0.0 ? l2 / term_scale : 0.0; }
};

struct ConservationResiduals {
  ResidualNorm number;   // d_t n + (1/m) d_x g
  ResidualNorm momentum; // d_t g + d_x tau + K x n - K sum_j b_j kernel_j
  ResidualNorm energy;   // d_t h + d_x j
};

ConservationResiduals conservation_residual(
    const std::vector<GaussianState>& states, const ChainParams& params,
    const Grid1D& grid, double window, double dt,
    const FieldOptions& opts = {});

ConservationResiduals conservation_residual(
    const std::vector<DensityField>& fields, const ChainParams& params,
    double dt);

} // namespace chainlab
