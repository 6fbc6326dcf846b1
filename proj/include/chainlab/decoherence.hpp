#pragma once

#include "chainlab/densities.hpp"

#include <limits>
#include <vector>

namespace chainlab {

// (Delta Q)^2 / |<Q>|^2.  Saturates to +inf instead of dividing by a
// vanishing mean.
double peaking_ratio(const SpectralMoment& moment);

inline constexpr double kSaturatedRatio = std::numeric_limits<double>::infinity();

// Leading small-k form k^2 (Delta X)^2 / N^2 with X = sum_j q_j.
double smallk_asymptote(const GaussianState& state, double k);

// Largest grid wavenumber below which every requested density stays peaked.
struct DecoherenceScale {
  double k_star = 0.0;
  bool resolved = false; // false: ratio exceeds tolerance at the first k > 0
  std::vector<DensityKind> saturated; // kinds with |mean|^2 ~ 0 somewhere
};

DecoherenceScale decoherence_scale(const GaussianState& state,
                                   const ChainParams& params, double tolerance,
                                   const std::vector<double>& k_grid,
                                   const std::vector<DensityKind>& kinds);

// Peaking ratios of one density over a (time x wavenumber) grid.
struct PeakingReport {
  DensityKind which = DensityKind::number;
  std::vector<double> times;
  std::vector<double> k_grid;
  MatrixXd ratio;         // times x k
  MatrixXd ratio_smallk;  // k^2 (Delta X(t))^2 / N^2
  VectorXd k_star;        // per time, at the report tolerance
  double tolerance = 0.0;
};

PeakingReport peaking_report(const std::vector<GaussianState>& states,
                             const std::vector<double>& times,
                             const ChainParams& params,
                             const std::vector<double>& k_grid,
                             DensityKind kind, double tolerance);

} // namespace chainlab
