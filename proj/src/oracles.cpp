#include "chainlab/oracles.hpp"

#include "chainlab/philox.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace chainlab {

GaussianSampler::GaussianSampler(const GaussianState& state, uint64_t seed)
    : mean_(state.mean), seed_(seed) {
  const MatrixXd sym = 0.5 * (state.cov + state.cov.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("GaussianSampler: eigensolver failed");
  root_ = es.eigenvectors() *
          es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

VectorXd GaussianSampler::sample(uint64_t i) const {
  NormalStream stream(seed_, i);
  VectorXd z(mean_.size());
  for (int j = 0; j < z.size(); ++j) z(j) = stream.next();
  return mean_ + root_ * z;
}

namespace {

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return sum / count; }
  double variance() const {
    const double m = mean();
    return std::max(0.0, sum_sq / count - m * m);
  }
  McEstimate estimate() const {
    return {mean(), std::sqrt(variance() / count)};
  }
};

// density observable A = sum_j a_j e^{i k q_j} evaluated on one sample
std::complex<double> spectral_observable(const VectorXd& x, int n,
                                         const ChainParams& params,
                                         const VectorXd& b, DensityKind kind,
                                         double k) {
  std::complex<double> acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double q = x(j);
    const double p = x(n + j);
    double weight = 1.0;
    switch (kind) {
      case DensityKind::number: weight = 1.0; break;
      case DensityKind::momentum: weight = p; break;
      case DensityKind::energy:
        weight = p * p / (2.0 * params.mass) +
                 0.5 * params.binding * (q - b(j)) * (q - b(j));
        break;
    }
    acc += weight * std::exp(std::complex<double>(0.0, k * q));
  }
  return acc;
}

} // namespace

SpectralMcResult mc_spectral(const GaussianState& state,
                             const ChainParams& params, DensityKind kind,
                             double k, long samples, uint64_t seed) {
  if (samples < 1000)
    throw std::invalid_argument("mc_spectral: need at least 10^3 samples");
  const int n = state.n();
  const VectorXd b = params.centers_or_zero();
  GaussianSampler sampler(state, seed);

  Accumulator re, im;
  std::vector<std::complex<double>> values(samples);
  for (long i = 0; i < samples; ++i) {
    values[i] = spectral_observable(sampler.sample(i), n, params, b, kind, k);
    re.add(values[i].real());
    im.add(values[i].imag());
  }
  const std::complex<double> mean(re.mean(), im.mean());

  // variance of the complex observable and the delta-method error of the
  // variance estimate (fourth central moment)
  double var = 0.0, m4 = 0.0;
  for (long i = 0; i < samples; ++i) {
    const double dev = std::norm(values[i] - mean);
    var += dev;
    m4 += dev * dev;
  }
  var /= samples;
  m4 /= samples;
  const double var_se = std::sqrt(std::max(0.0, m4 - var * var) / samples);

  SpectralMcResult out;
  out.mean_re = re.estimate();
  out.mean_im = im.estimate();
  out.variance = {var, var_se};
  return out;
}

FieldsMcResult mc_fields(const GaussianState& state, const ChainParams& params,
                         const Grid1D& grid, double window, long samples,
                         uint64_t seed) {
  if (samples < 1000)
    throw std::invalid_argument("mc_fields: need at least 10^3 samples");
  const int n = state.n();
  const VectorXd b = params.centers_or_zero();
  const double m = params.mass;
  const double kk = params.binding;
  GaussianSampler sampler(state, seed);

  const int nx = grid.count;
  std::vector<Accumulator> an(nx), ag(nx), ah(nx), atau(nx), aj(nx);
  const double norm = 1.0 / std::sqrt(2.0 * M_PI * window * window);
  VectorXd row_n(nx), row_g(nx), row_h(nx), row_tau(nx), row_j(nx);
  for (long s = 0; s < samples; ++s) {
    const VectorXd x = sampler.sample(s);
    row_n.setZero();
    row_g.setZero();
    row_h.setZero();
    row_tau.setZero();
    row_j.setZero();
    for (int jdx = 0; jdx < n; ++jdx) {
      const double q = x(jdx);
      const double p = x(n + jdx);
      const double e = p * p / (2.0 * m) +
                       0.5 * kk * (q - b(jdx)) * (q - b(jdx));
      for (int i = 0; i < nx; ++i) {
        const double d = grid.x(i) - q;
        const double kern =
            norm * std::exp(-0.5 * d * d / (window * window));
        row_n(i) += kern;
        row_g(i) += kern * p;
        row_h(i) += kern * e;
        row_tau(i) += kern * p * p / m;
        row_j(i) += kern * p / m * e;
      }
    }
    for (int i = 0; i < nx; ++i) {
      an[i].add(row_n(i));
      ag[i].add(row_g(i));
      ah[i].add(row_h(i));
      atau[i].add(row_tau(i));
      aj[i].add(row_j(i));
    }
  }

  FieldsMcResult out;
  for (int i = 0; i < nx; ++i) {
    out.n.push_back(an[i].estimate());
    out.g.push_back(ag[i].estimate());
    out.h.push_back(ah[i].estimate());
    out.tau.push_back(atau[i].estimate());
    out.j.push_back(aj[i].estimate());
  }
  return out;
}

McEstimate mc_energy(const GaussianState& state, const ChainParams& params,
                     long samples, uint64_t seed) {
  if (samples < 1000)
    throw std::invalid_argument("mc_energy: need at least 10^3 samples");
  const int n = state.n();
  const VectorXd b = params.centers_or_zero();
  GaussianSampler sampler(state, seed);
  Accumulator acc;
  for (long s = 0; s < samples; ++s) {
    const VectorXd x = sampler.sample(s);
    double e = 0.0;
    for (int j = 0; j < n; ++j) {
      e += x(n + j) * x(n + j) / (2.0 * params.mass) +
           0.5 * params.binding * (x(j) - b(j)) * (x(j) - b(j));
      if (n > 1) {
        const int prev = (j + n - 1) % n;
        const double d = x(j) - x(prev);
        e += 0.5 * params.coupling * d * d;
      }
    }
    acc.add(e);
  }
  return acc.estimate();
}

OdeTrajectory ode_oracle(const ChainParams& params, const VectorXd& initial,
                         double t_final, double dt) {
  params.validate();
  const int n = params.n;
  if (initial.size() != 2 * n)
    throw std::invalid_argument("ode_oracle: initial mean must have 2N entries");
  const DerivedParams d = derived_params(params);
  if (d.omega > 0.0 && dt > 0.01 / d.omega)
    throw std::invalid_argument("ode_oracle: dt must resolve the dynamics");
  const VectorXd b = params.centers_or_zero();

  auto deriv = [&](const VectorXd& x, VectorXd& out) {
    for (int j = 0; j < n; ++j) {
      out(j) = x(n + j) / params.mass;
      double force = -params.binding * (x(j) - b(j));
      if (n > 1) {
        const int next = (j + 1) % n;
        const int prev = (j + n - 1) % n;
        force += params.coupling * (x(next) - 2.0 * x(j) + x(prev));
      }
      out(n + j) = force;
    }
  };

  const long steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  OdeTrajectory traj;
  traj.states.resize(2 * n, steps + 1);
  traj.times.resize(steps + 1);
  VectorXd x = initial, k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n), tmp(2 * n);
  traj.states.col(0) = x;
  traj.times[0] = 0.0;
  for (long s = 1; s <= steps; ++s) {
    const double h = std::min(dt, t_final - (s - 1) * dt);
    deriv(x, k1);
    tmp = x + 0.5 * h * k1;
    deriv(tmp, k2);
    tmp = x + 0.5 * h * k2;
    deriv(tmp, k3);
    tmp = x + h * k3;
    deriv(tmp, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    traj.states.col(s) = x;
    traj.times[s] = std::min(s * dt, t_final);
  }
  return traj;
}

} // namespace chainlab
