#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace chainlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// hbar = 1 throughout; Boltzmann constant absorbed into theta = kT.
inline constexpr double kHbar = 1.0;

// Physical constants of a periodic chain of oscillators:
//   H = sum_n [ p_n^2/2m + (nu2/2)(q_n - q_{n-1})^2 + (K/2)(q_n - b_n)^2 ]
// with q_{N+1} = q_1.
struct ChainParams {
  int n = 1;             // number of particles N
  double mass = 1.0;     // m
  double coupling = 0.0; // nu^2, nearest-neighbour spring constant
  double binding = 0.0;  // K, on-site binding constant
  VectorXd centers;      // b_n; empty means all zero
  bool allow_free = false; // permit K = nu2 = 0 (free particles)

  // Throws std::invalid_argument on violated invariants.
  void validate() const;
  VectorXd centers_or_zero() const;
  bool has_centers() const;
};

struct DerivedParams {
  double omega = 0.0;  // sqrt((K + 2 nu2)/m)
  double gamma = 0.0;  // nu2/(m omega^2), in [0, 1/2]
  VectorXd mode_freqs; // N normal-mode angular frequencies, ascending
};

// Eigen-decomposition of the spring-constant matrix A = K I + nu2 L,
// L the periodic graph Laplacian.  A = U diag(m w^2) U^T, U orthogonal.
struct NormalModes {
  VectorXd omega; // ascending, >= 0
  MatrixXd basis; // columns are mode vectors
};

// Linear-affine phase-space map x(t) = S x(0) + d in (q_1..q_N, p_1..p_N)
// ordering.  Exact propagators satisfy S^T J S = J.
struct AffinePropagator {
  MatrixXd matrix;
  VectorXd drift;
  double time = 0.0;

  int n() const { return static_cast<int>(drift.size()) / 2; }
};

// Gaussian phase-space state: mean and covariance over (q_1..q_N, p_1..p_N).
struct GaussianState {
  VectorXd mean;
  MatrixXd cov;

  int n() const { return static_cast<int>(mean.size()) / 2; }
  double mean_q(int j) const { return mean(j); }
  double mean_p(int j) const { return mean(n() + j); }
  double var_q(int j) const { return cov(j, j); }
  double var_p(int j) const { return cov(n() + j, n() + j); }
  double cov_qq(int i, int j) const { return cov(i, j); }
  double cov_qp(int i, int j) const { return cov(i, n() + j); }
  double cov_pp(int i, int j) const { return cov(n() + i, n() + j); }

  // Throws std::invalid_argument when the symmetry/PSD invariants fail.
  void validate() const;
};

struct StateDiagnostics {
  double symmetry_defect = 0.0; // max |cov - cov^T| relative to max |cov|
  double min_eigenvalue = 0.0;
  VectorXd symplectic_eigenvalues; // N values, ascending
  bool classical_point = false;
  std::vector<std::string> errors;   // PSD/symmetry violations
  std::vector<std::string> warnings; // sub-Heisenberg states etc.

  bool ok() const { return errors.empty(); }
};

// Spring-constant matrix A = K I + nu2 L (periodic Laplacian; L = 0 for N = 1).
MatrixXd coupling_matrix(const ChainParams& params);

// Omega, gamma and the circulant mode frequencies
// w_j^2 = (K + 4 nu2 sin^2(pi j / N)) / m.  Rejects Omega = 0 unless
// params.allow_free is set.
DerivedParams derived_params(const ChainParams& params);

NormalModes normal_modes(const ChainParams& params);

// Exact flow of xdot = A x + c over time t, built from the normal modes.
// The K b_n forcing is folded into the drift via the fixed point when K > 0;
// for K = 0 the centers exert no force and are ignored (note emitted).
AffinePropagator exact_propagator(const ChainParams& params, double t,
                                  std::vector<std::string>* notes = nullptr);
AffinePropagator exact_propagator(const ChainParams& params,
                                  const NormalModes& modes, double t,
                                  std::vector<std::string>* notes = nullptr);

GaussianState evolve(const GaussianState& state, const AffinePropagator& prop);

double energy_expectation(const GaussianState& state, const ChainParams& params);

StateDiagnostics validate_state(const GaussianState& state);

// Standard antisymmetric form J = [[0, I], [-I, 0]] in (q, p) ordering.
MatrixXd symplectic_form(int n);

// ||S^T J S - J||_max
double symplectic_defect(const MatrixXd& s);

// Symplectic eigenvalues of a (PSD) covariance matrix, ascending.
VectorXd symplectic_eigenvalues(const MatrixXd& cov);

} // namespace chainlab
