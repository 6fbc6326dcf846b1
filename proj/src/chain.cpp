#include "chainlab/chain.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace chainlab {

namespace {

double sinc_over_omega(double omega, double t) {
  // sin(w t)/w, finite at w = 0
  if (omega * std::abs(t) < 1e-8) return t * (1.0 - omega * omega * t * t / 6.0);
  return std::sin(omega * t) / omega;
}

} // namespace

void ChainParams::validate() const {
  if (n < 1) throw std::invalid_argument("ChainParams: N must be >= 1");
  if (!(mass > 0.0)) throw std::invalid_argument("ChainParams: mass must be > 0");
  if (coupling < 0.0) throw std::invalid_argument("ChainParams: coupling nu^2 must be >= 0");
  if (binding < 0.0) throw std::invalid_argument("ChainParams: binding K must be >= 0");
  if (centers.size() != 0 && centers.size() != n)
    throw std::invalid_argument("ChainParams: centers must have N entries");
  if (n > 1 && coupling == 0.0 && binding == 0.0 && !allow_free)
    throw std::invalid_argument(
        "ChainParams: K = nu^2 = 0 requires explicit free evolution");
}

VectorXd ChainParams::centers_or_zero() const {
  if (centers.size() == n) return centers;
  return VectorXd::Zero(n);
}

bool ChainParams::has_centers() const {
  return centers.size() == n && centers.cwiseAbs().maxCoeff() > 0.0;
}

MatrixXd coupling_matrix(const ChainParams& params) {
  params.validate();
  const int n = params.n;
  MatrixXd a = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = params.binding;
  if (n > 1) {
    for (int i = 0; i < n; ++i) {
      const int next = (i + 1) % n;
      const int prev = (i + n - 1) % n;
      a(i, i) += 2.0 * params.coupling;
      a(i, next) -= params.coupling;
      a(i, prev) -= params.coupling;
    }
  }
  // N = 1: the neighbour is the particle itself, the interaction term vanishes.
  return a;
}

DerivedParams derived_params(const ChainParams& params) {
  params.validate();
  DerivedParams out;
  const double omega_sq = (params.binding + 2.0 * params.coupling) / params.mass;
  if (omega_sq <= 0.0 && !params.allow_free)
    throw std::invalid_argument("derived_params: no confining scale (K = nu^2 = 0)");
  out.omega = std::sqrt(std::max(omega_sq, 0.0));
  out.gamma = omega_sq > 0.0 ? params.coupling / (params.mass * omega_sq) : 0.0;
  out.mode_freqs.resize(params.n);
  for (int j = 0; j < params.n; ++j) {
    const double s = std::sin(M_PI * j / params.n);
    out.mode_freqs(j) =
        std::sqrt((params.binding + 4.0 * params.coupling * s * s) / params.mass);
  }
  std::sort(out.mode_freqs.begin(), out.mode_freqs.end());
  return out;
}

NormalModes normal_modes(const ChainParams& params) {
  const MatrixXd a = coupling_matrix(params);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("normal_modes: eigensolver failed");
  NormalModes modes;
  modes.basis = es.eigenvectors();
  modes.omega = es.eigenvalues()
                    .cwiseMax(0.0) // clamp -1e-16 round-off on the zero mode
                    .cwiseQuotient(VectorXd::Constant(params.n, params.mass))
                    .cwiseSqrt();
  return modes;
}

AffinePropagator exact_propagator(const ChainParams& params, double t,
                                  std::vector<std::string>* notes) {
  return exact_propagator(params, normal_modes(params), t, notes);
}

AffinePropagator exact_propagator(const ChainParams& params,
                                  const NormalModes& modes, double t,
                                  std::vector<std::string>* notes) {
  params.validate();
  if (!std::isfinite(t)) throw std::invalid_argument("exact_propagator: t not finite");
  const int n = params.n;
  const double m = params.mass;

  VectorXd c(n), s_qp(n), s_pq(n);
  for (int j = 0; j < n; ++j) {
    const double w = modes.omega(j);
    c(j) = std::cos(w * t);
    s_qp(j) = sinc_over_omega(w, t) / m; // -> t/m for the free mode
    s_pq(j) = -m * w * std::sin(w * t);
  }

  const MatrixXd& u = modes.basis;
  AffinePropagator prop;
  prop.time = t;
  prop.matrix.resize(2 * n, 2 * n);
  const MatrixXd block_c = u * c.asDiagonal() * u.transpose();
  prop.matrix.topLeftCorner(n, n) = block_c;
  prop.matrix.topRightCorner(n, n) = u * s_qp.asDiagonal() * u.transpose();
  prop.matrix.bottomLeftCorner(n, n) = u * s_pq.asDiagonal() * u.transpose();
  prop.matrix.bottomRightCorner(n, n) = block_c;

  prop.drift = VectorXd::Zero(2 * n);
  if (params.has_centers()) {
    if (params.binding > 0.0) {
      // fixed point q* = K A^{-1} b, see the mode basis
      const VectorXd b_modes = u.transpose() * params.centers_or_zero();
      VectorXd qstar_modes(n);
      for (int j = 0; j < n; ++j) {
        const double lam = m * modes.omega(j) * modes.omega(j);
        qstar_modes(j) = params.binding * b_modes(j) / lam;
      }
      VectorXd xstar = VectorXd::Zero(2 * n);
      xstar.head(n) = u * qstar_modes;
      prop.drift = xstar - prop.matrix * xstar;
    } else if (notes) {
      notes->push_back("K = 0: centers exert no force and are ignored");
    }
  }
  return prop;
}

void GaussianState::validate() const {
  if (mean.size() % 2 != 0 || mean.size() == 0)
    throw std::invalid_argument("GaussianState: mean must have 2N entries");
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw std::invalid_argument("GaussianState: covariance must be 2N x 2N");
  const StateDiagnostics diag = validate_state(*this);
  if (!diag.ok()) {
    std::string msg = "GaussianState: invalid covariance:";
    for (const auto& e : diag.errors) msg += " " + e;
    throw std::invalid_argument(msg);
  }
}

GaussianState evolve(const GaussianState& state, const AffinePropagator& prop) {
  if (prop.matrix.rows() != state.mean.size())
    throw std::invalid_argument("evolve: dimension mismatch");
  GaussianState out;
  out.mean = prop.matrix * state.mean + prop.drift;
  MatrixXd cov = prop.matrix * state.cov * prop.matrix.transpose();
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

double energy_expectation(const GaussianState& state, const ChainParams& params) {
  params.validate();
  const int n = params.n;
  if (state.n() != n)
    throw std::invalid_argument("energy_expectation: state/params size mismatch");
  const VectorXd b = params.centers_or_zero();
  double energy = 0.0;
  for (int j = 0; j < n; ++j) {
    energy += (state.var_p(j) + state.mean_p(j) * state.mean_p(j)) /
              (2.0 * params.mass);
    const double dq = state.mean_q(j) - b(j);
    energy += 0.5 * params.binding * (state.var_q(j) + dq * dq);
  }
  if (n > 1 && params.coupling > 0.0) {
    for (int j = 0; j < n; ++j) {
      const int prev = (j + n - 1) % n;
      const double dmean = state.mean_q(j) - state.mean_q(prev);
      const double dvar = state.var_q(j) + state.var_q(prev) -
                          2.0 * state.cov_qq(j, prev);
      energy += 0.5 * params.coupling * (dvar + dmean * dmean);
    }
  }
  return energy;
}

MatrixXd symplectic_form(int n) {
  MatrixXd j = MatrixXd::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = MatrixXd::Identity(n, n);
  j.bottomLeftCorner(n, n) = -MatrixXd::Identity(n, n);
  return j;
}

double symplectic_defect(const MatrixXd& s) {
  const int n = static_cast<int>(s.rows()) / 2;
  const MatrixXd j = symplectic_form(n);
  return (s.transpose() * j * s - j).cwiseAbs().maxCoeff();
}

VectorXd symplectic_eigenvalues(const MatrixXd& cov) {
  const int n2 = static_cast<int>(cov.rows());
  const int n = n2 / 2;
  const MatrixXd sym = 0.5 * (cov + cov.transpose());
  const MatrixXd jm = symplectic_form(n) * sym;
  Eigen::EigenSolver<MatrixXd> es(jm, /*computeEigenvectors=*/false);
  std::vector<double> mags(n2);
  for (int i = 0; i < n2; ++i) mags[i] = std::abs(es.eigenvalues()(i).imag());
  std::sort(mags.begin(), mags.end());
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = mags[2 * i]; // pairs (v, v)
  return out;
}

StateDiagnostics validate_state(const GaussianState& state) {
  StateDiagnostics diag;
  const MatrixXd& cov = state.cov;
  const double scale = cov.size() > 0 ? cov.cwiseAbs().maxCoeff() : 0.0;

  if (scale == 0.0) {
    diag.classical_point = true;
    diag.symplectic_eigenvalues = VectorXd::Zero(state.n());
    diag.warnings.push_back("classical point distribution (zero covariance)");
    return diag;
  }

  diag.symmetry_defect = (cov - cov.transpose()).cwiseAbs().maxCoeff() / scale;
  if (diag.symmetry_defect > 1e-12)
    diag.errors.push_back("covariance not symmetric to 1e-12 relative");

  const MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  diag.min_eigenvalue = es.eigenvalues().minCoeff();
  const double trace = sym.trace();
  if (diag.min_eigenvalue < -1e-10 * std::max(trace, 0.0))
    diag.errors.push_back("covariance not positive semidefinite");
  for (int j = 0; j < state.n(); ++j) {
    if (state.var_q(j) < 0.0 || state.var_p(j) < 0.0) {
      diag.errors.push_back("negative diagonal variance");
      break;
    }
  }

  diag.symplectic_eigenvalues = symplectic_eigenvalues(sym);
  // Physicality is a warning only: classical Wigner-sampled Gaussians with
  // symplectic eigenvalues below hbar/2 are first-class citizens here.
  if (diag.symplectic_eigenvalues.minCoeff() < 0.5 * kHbar - 1e-9)
    diag.warnings.push_back("sub-Heisenberg covariance (classical regime)");
  return diag;
}

} // namespace chainlab
