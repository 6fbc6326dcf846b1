#pragma once

#include "chainlab/chain.hpp"
#include "chainlab/densities.hpp"
#include "chainlab/grid.hpp"

#include <cstdint>
#include <vector>

namespace chainlab {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;

  double distance_in_se(double reference) const {
    if (std_error == 0.0) return value == reference ? 0.0 : kLargeDistance;
    return std::abs(value - reference) / std_error;
  }
  static constexpr double kLargeDistance = 1e30;
};

// Classical Wigner sampling of the Gaussian state: sample i draws its 2N
// standard normals from Philox stream i, mapped through the PSD square root
// of the covariance.
class GaussianSampler {
 public:
  GaussianSampler(const GaussianState& state, uint64_t seed);
  // phase-space point of sample i: (q_1..q_N, p_1..p_N)
  VectorXd sample(uint64_t i) const;

 private:
  VectorXd mean_;
  MatrixXd root_;
  uint64_t seed_;
};

struct SpectralMcResult {
  McEstimate mean_re, mean_im, variance;
};

SpectralMcResult mc_spectral(const GaussianState& state,
                             const ChainParams& params, DensityKind kind,
                             double k, long samples, uint64_t seed);

struct FieldsMcResult {
  std::vector<McEstimate> n, g, h, tau, j;
};

FieldsMcResult mc_fields(const GaussianState& state, const ChainParams& params,
                         const Grid1D& grid, double window, long samples,
                         uint64_t seed);

McEstimate mc_energy(const GaussianState& state, const ChainParams& params,
                     long samples, uint64_t seed);

// Classic fixed-step 4th-order integration of the mean equations of motion;
// the independent check for the exact propagator.
struct OdeTrajectory {
  std::vector<double> times;
  MatrixXd states; // 2N x (steps+1)
};

OdeTrajectory ode_oracle(const ChainParams& params, const VectorXd& initial,
                         double t_final, double dt);

} // namespace chainlab
