#include "chainlab/densities.hpp"

#include <cmath>
#include <stdexcept>

namespace chainlab {

namespace {

using std::complex;
constexpr complex<double> kI{0.0, 1.0};

// exp(x) - 1 without overflow for the large exponents that appear when the
// pair covariance nearly cancels the single-particle widths.
complex<double> pair_term(const complex<double>& mj_mn_conj, double expo) {
  if (expo < 600.0) return mj_mn_conj * std::expm1(expo);
  return mj_mn_conj * std::exp(expo) - mj_mn_conj;
}

double clamp_variance(double var, double scale) {
  if (var >= 0.0) return var;
  if (var >= -1e-10 * std::max(scale, 1e-300)) return 0.0;
  throw std::runtime_error("spectral moment: variance negative beyond the numerical floor");
}

// <e^{i k q_j}> for every particle.
std::vector<complex<double>> phase_means(const GaussianState& state, double k) {
  const int n = state.n();
  std::vector<complex<double>> m(n);
  for (int j = 0; j < n; ++j) {
    m[j] = std::exp(kI * (k * state.mean_q(j)) -
                    0.5 * k * k * state.var_q(j));
  }
  return m;
}

// E[x^2 y^2] for jointly Gaussian (x, y) with complex shifted means (a, b):
// the Isserlis expansion continues analytically in the means.
complex<double> quartic_moment(const complex<double>& a, const complex<double>& b,
                               double sxx, double syy, double sxy) {
  return a * a * b * b + a * a * syy + b * b * sxx + 4.0 * a * b * sxy +
         sxx * syy + 2.0 * sxy * sxy;
}

} // namespace

const char* to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::number: return "number";
    case DensityKind::momentum: return "momentum";
    case DensityKind::energy: return "energy";
  }
  return "?";
}

SpectralMoment spectral_number(const GaussianState& state, double k) {
  const int n = state.n();
  SpectralMoment out;
  out.wavenumber = k;
  out.which = DensityKind::number;
  if (k == 0.0) {
    out.mean = static_cast<double>(n); // exactly conserved
    out.variance = 0.0;
    return out;
  }
  const auto m = phase_means(state, k);
  complex<double> mean = 0.0;
  for (int j = 0; j < n; ++j) mean += m[j];
  out.mean = mean;

  double var = 0.0, diag_scale = 0.0;
  for (int j = 0; j < n; ++j) {
    const double d = std::norm(m[j]) * std::expm1(k * k * state.var_q(j));
    var += d;
    diag_scale += d;
    for (int i = j + 1; i < n; ++i) {
      // (i, j) and (j, i) are conjugate: sum as twice the real part
      var += 2.0 * pair_term(m[j] * std::conj(m[i]),
                             k * k * state.cov_qq(j, i)).real();
    }
  }
  out.variance = clamp_variance(var, std::norm(mean) + diag_scale);
  return out;
}

VarianceSplit number_variance_split(const GaussianState& state, double k) {
  const int n = state.n();
  VarianceSplit split;
  if (k == 0.0) return split;
  const auto m = phase_means(state, k);
  for (int j = 0; j < n; ++j) {
    split.diagonal += std::norm(m[j]) * std::expm1(k * k * state.var_q(j));
    for (int i = j + 1; i < n; ++i) {
      split.cross += 2.0 * pair_term(m[j] * std::conj(m[i]),
                                     k * k * state.cov_qq(j, i)).real();
    }
  }
  return split;
}

SpectralMoment spectral_momentum(const GaussianState& state, double k) {
  const int n = state.n();
  SpectralMoment out;
  out.wavenumber = k;
  out.which = DensityKind::momentum;
  if (k == 0.0) {
    // total momentum: moments follow from the covariance without the
    // characteristic-function detour (and without its cancellation error)
    double mean = 0.0, var = 0.0;
    for (int j = 0; j < n; ++j) {
      mean += state.mean_p(j);
      for (int i = 0; i < n; ++i) var += state.cov_pp(j, i);
    }
    out.mean = mean;
    out.variance = clamp_variance(var, std::abs(var) + mean * mean);
    return out;
  }

  const auto m = phase_means(state, k);
  complex<double> mean = 0.0;
  for (int j = 0; j < n; ++j) {
    mean += (state.mean_p(j) + kI * (k * state.cov_qp(j, j))) * m[j];
  }
  out.mean = mean;

  // <g\dag g>: E[p_j p_i e^{ik(q_j - q_i)}] over the joint Gaussian of
  // (q_j, p_j, q_i, p_i); shifted means carry the phase covariances.
  double second = 0.0;
  for (int j = 0; j < n; ++j) {
    second += state.mean_p(j) * state.mean_p(j) + state.var_p(j);
    for (int i = j + 1; i < n; ++i) {
      const double var_phi =
          k * k * (state.var_q(j) + state.var_q(i) - 2.0 * state.cov_qq(j, i));
      const complex<double> ephi =
          std::exp(kI * (k * (state.mean_q(j) - state.mean_q(i))) - 0.5 * var_phi);
      const complex<double> pj =
          state.mean_p(j) + kI * (k * (state.cov_qp(j, j) - state.cov_qp(j, i)));
      const complex<double> pi =
          state.mean_p(i) + kI * (k * (state.cov_qp(i, j) - state.cov_qp(i, i)));
      second += 2.0 * (ephi * (pj * pi + state.cov_pp(j, i))).real();
    }
  }
  out.variance = clamp_variance(second - std::norm(mean),
                                second + std::norm(mean));
  return out;
}

SpectralMoment spectral_energy(const GaussianState& state,
                               const ChainParams& params, double k) {
  params.validate();
  const int n = state.n();
  if (n != params.n)
    throw std::invalid_argument("spectral_energy: state/params size mismatch");
  const VectorXd b = params.centers_or_zero();
  const double m_inv2 = 1.0 / (2.0 * params.mass);
  const double k_half = 0.5 * params.binding;

  SpectralMoment out;
  out.wavenumber = k;
  out.which = DensityKind::energy;
  if (k == 0.0) {
    // total (non-interacting) energy; Cov(x^2, y^2) = 2 s_xy^2 + 4 xbar ybar s_xy
    double mean_e = 0.0, var = 0.0;
    for (int j = 0; j < n; ++j) {
      mean_e += m_inv2 * (state.mean_p(j) * state.mean_p(j) + state.var_p(j)) +
                k_half * ((state.mean_q(j) - b(j)) * (state.mean_q(j) - b(j)) +
                          state.var_q(j));
      for (int i = 0; i < n; ++i) {
        const double ubj = state.mean_q(j) - b(j);
        const double ubi = state.mean_q(i) - b(i);
        auto cov_sq = [](double sxy, double xb, double yb) {
          return 2.0 * sxy * sxy + 4.0 * xb * yb * sxy;
        };
        var += m_inv2 * m_inv2 *
                   cov_sq(state.cov_pp(j, i), state.mean_p(j), state.mean_p(i)) +
               m_inv2 * k_half *
                   cov_sq(state.cov_qp(i, j), state.mean_p(j), ubi) +
               k_half * m_inv2 *
                   cov_sq(state.cov_qp(j, i), ubj, state.mean_p(i)) +
               k_half * k_half * cov_sq(state.cov_qq(j, i), ubj, ubi);
      }
    }
    out.mean = mean_e;
    out.variance = clamp_variance(var, std::abs(var) + mean_e * mean_e);
    return out;
  }

  const auto m = phase_means(state, k);
  complex<double> mean = 0.0;
  for (int j = 0; j < n; ++j) {
    const complex<double> pj = state.mean_p(j) + kI * (k * state.cov_qp(j, j));
    const complex<double> uj =
        state.mean_q(j) - b(j) + kI * (k * state.var_q(j));
    mean += m[j] * (m_inv2 * (pj * pj + state.var_p(j)) +
                    k_half * (uj * uj + state.var_q(j)));
  }
  out.mean = mean;

  double second = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      const double shift_pj = k * (state.cov_qp(j, j) - state.cov_qp(j, i));
      const double shift_pi = k * (state.cov_qp(i, j) - state.cov_qp(i, i));
      const double shift_uj = k * (state.var_q(j) - state.cov_qq(j, i));
      const double shift_ui = k * (state.cov_qq(i, j) - state.var_q(i));
      const complex<double> pj = state.mean_p(j) + kI * shift_pj;
      const complex<double> pi = state.mean_p(i) + kI * shift_pi;
      const complex<double> uj = state.mean_q(j) - b(j) + kI * shift_uj;
      const complex<double> ui = state.mean_q(i) - b(i) + kI * shift_ui;

      const complex<double> ee =
          m_inv2 * m_inv2 *
              quartic_moment(pj, pi, state.var_p(j), state.var_p(i),
                             state.cov_pp(j, i)) +
          m_inv2 * k_half *
              quartic_moment(pj, ui, state.var_p(j), state.var_q(i),
                             state.cov_qp(i, j)) +
          k_half * m_inv2 *
              quartic_moment(uj, pi, state.var_q(j), state.var_p(i),
                             state.cov_qp(j, i)) +
          k_half * k_half *
              quartic_moment(uj, ui, state.var_q(j), state.var_q(i),
                             state.cov_qq(j, i));

      const double var_phi =
          k * k * (state.var_q(j) + state.var_q(i) - 2.0 * state.cov_qq(j, i));
      const complex<double> ephi =
          std::exp(kI * (k * (state.mean_q(j) - state.mean_q(i))) - 0.5 * var_phi);
      const double contrib = (ephi * ee).real();
      second += (i == j) ? contrib : 2.0 * contrib;
    }
  }
  out.variance = clamp_variance(second - std::norm(mean),
                                second + std::norm(mean));
  return out;
}

DensityField real_space_fields(const GaussianState& state,
                               const ChainParams& params, const Grid1D& grid,
                               double window, const FieldOptions& opts) {
  params.validate();
  if (!(window > 0.0)) throw std::invalid_argument("real_space_fields: window <= 0");
  if (grid.dx > 0.5 * window * (1.0 + 1e-12))
    throw std::invalid_argument("real_space_fields: grid too coarse for the window");
  const int n = state.n();
  if (n != params.n)
    throw std::invalid_argument("real_space_fields: state/params size mismatch");

  const VectorXd b = params.centers_or_zero();
  const double m = params.mass;
  const double kk = params.binding;
  const double d2 = window * window;

  DensityField out;
  out.grid = grid;
  out.window = window;
  out.n = VectorXd::Zero(grid.count);
  out.g = VectorXd::Zero(grid.count);
  out.h = VectorXd::Zero(grid.count);
  out.tau = VectorXd::Zero(grid.count);
  out.j = VectorXd::Zero(grid.count);
  out.b_kernel = VectorXd::Zero(grid.count);
  VectorXd tnum = VectorXd::Zero(grid.count);

  for (int jdx = 0; jdx < n; ++jdx) {
    const double qb = state.mean_q(jdx);
    const double pb = state.mean_p(jdx);
    const double sqq = state.var_q(jdx);
    const double spp = state.var_p(jdx);
    const double spq = state.cov_qp(jdx, jdx);
    const double w = sqq + d2;
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * w);
    // conditional moments given the smeared position
    const double vcond = spp - spq * spq / w;
    const double vtemp = opts.raw_momentum_variance ? spp : vcond;
    const double vc = sqq * d2 / w;   // residual q-variance at fixed x
    const double cvc = spq * d2 / w;  // residual q-p covariance at fixed x

    for (int i = 0; i < grid.count; ++i) {
      const double dx = grid.x(i) - qb;
      const double gauss = norm * std::exp(-0.5 * dx * dx / w);
      if (gauss < 1e-300) continue;
      const double pcond = pb + spq * dx / w;
      const double mu_b = qb + sqq * dx / w - b(jdx);
      const double p2 = pcond * pcond + vcond;
      out.n(i) += gauss;
      out.g(i) += gauss * pcond;
      out.tau(i) += gauss * p2 / m;
      out.h(i) += gauss * (0.5 * p2 / m + 0.5 * kk * (mu_b * mu_b + vc));
      out.j(i) += gauss * ((pcond * pcond * pcond + 3.0 * pcond * vcond) /
                               (2.0 * m * m) +
                           0.5 * kk / m *
                               (pcond * (mu_b * mu_b + vc) + 2.0 * mu_b * cvc));
      out.b_kernel(i) += gauss * b(jdx);
      tnum(i) += gauss * vtemp;
    }
  }

  out.n_floor = opts.n_floor_rel * out.n.maxCoeff();
  out.temperature = VectorXd::Constant(grid.count,
                                       std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < grid.count; ++i) {
    if (out.n(i) >= out.n_floor && out.n(i) > 0.0)
      out.temperature(i) = tnum(i) / (m * out.n(i));
  }
  return out;
}

VectorXd temperature_field(const GaussianState& state, const ChainParams& params,
                           const Grid1D& grid, double window,
                           const FieldOptions& opts) {
  return real_space_fields(state, params, grid, window, opts).temperature;
}

CorrelationProfile correlation_profile(const GaussianState& state) {
  const int n = state.n();
  const int rmax = n / 2;
  CorrelationProfile out;
  out.profile = VectorXd::Zero(rmax + 1);
  for (int r = 0; r <= rmax; ++r) {
    double acc = 0.0;
    int used = 0;
    for (int j = 0; j < n; ++j) {
      const int i = (j + r) % n;
      const double denom = state.var_q(j) * state.var_q(i);
      if (denom <= 0.0) continue;
      acc += state.cov_qq(j, i) / std::sqrt(denom);
      ++used;
    }
    if (r == 0) {
      int degenerate = 0;
      for (int j = 0; j < n; ++j)
        if (state.var_q(j) <= 0.0) ++degenerate;
      out.excluded_sites = degenerate;
    }
    out.profile(r) = used > 0 ? acc / used : 0.0;
  }

  const double level = std::exp(-1.0);
  out.corr_length = rmax;
  for (int r = 1; r <= rmax; ++r) {
    const double lo = std::abs(out.profile(r));
    if (lo < level) {
      const double hi = std::abs(out.profile(r - 1));
      const double frac = hi > lo ? (hi - level) / (hi - lo) : 1.0;
      out.corr_length = (r - 1) + frac;
      out.resolved = true;
      break;
    }
  }
  return out;
}

ConservationResiduals conservation_residual(
    const std::vector<DensityField>& fields, const ChainParams& params,
    double dt) {
  if (fields.size() < 3)
    throw std::invalid_argument("conservation_residual: need at least 3 time samples");
  if (!(dt > 0.0)) throw std::invalid_argument("conservation_residual: dt <= 0");
  const Grid1D grid = fields.front().grid;
  const int nx = grid.count;
  const int nt = static_cast<int>(fields.size());
  const double m = params.mass;
  const double kk = params.binding;

  double rn2 = 0, rg2 = 0, rh2 = 0;
  double tn_dt2 = 0, tn_dx2 = 0;
  double tg_dt2 = 0, tg_dx2 = 0, tg_force2 = 0, tg_src2 = 0;
  double th_dt2 = 0, th_dx2 = 0;
  for (int t = 1; t + 1 < nt; ++t) {
    const DensityField& fm = fields[t - 1];
    const DensityField& f0 = fields[t];
    const DensityField& fp = fields[t + 1];
    for (int i = 1; i + 1 < nx; ++i) {
      const double dndt = (fp.n(i) - fm.n(i)) / (2.0 * dt);
      const double dgdt = (fp.g(i) - fm.g(i)) / (2.0 * dt);
      const double dhdt = (fp.h(i) - fm.h(i)) / (2.0 * dt);
      const double dgdx = (f0.g(i + 1) - f0.g(i - 1)) / (2.0 * grid.dx);
      const double dtaudx = (f0.tau(i + 1) - f0.tau(i - 1)) / (2.0 * grid.dx);
      const double djdx = (f0.j(i + 1) - f0.j(i - 1)) / (2.0 * grid.dx);
      const double force = kk * grid.x(i) * f0.n(i);
      const double source = kk * f0.b_kernel(i);

      const double rn = dndt + dgdx / m;
      const double rg = dgdt + dtaudx + force - source;
      const double rh = dhdt + djdx;
      rn2 += rn * rn;
      rg2 += rg * rg;
      rh2 += rh * rh;
      tn_dt2 += dndt * dndt;
      tn_dx2 += dgdx * dgdx / (m * m);
      tg_dt2 += dgdt * dgdt;
      tg_dx2 += dtaudx * dtaudx;
      tg_force2 += force * force;
      tg_src2 += source * source;
      th_dt2 += dhdt * dhdt;
      th_dx2 += djdx * djdx;
    }
  }

  ConservationResiduals out;
  out.number.l2 = std::sqrt(rn2);
  out.number.term_scale = std::sqrt(std::max(tn_dt2, tn_dx2));
  out.momentum.l2 = std::sqrt(rg2);
  out.momentum.term_scale = std::sqrt(
      std::max(std::max(tg_dt2, tg_dx2), std::max(tg_force2, tg_src2)));
  out.energy.l2 = std::sqrt(rh2);
  out.energy.term_scale = std::sqrt(std::max(th_dt2, th_dx2));
  return out;
}

ConservationResiduals conservation_residual(
    const std::vector<GaussianState>& states, const ChainParams& params,
    const Grid1D& grid, double window, double dt, const FieldOptions& opts) {
  std::vector<DensityField> fields;
  fields.reserve(states.size());
  for (const auto& s : states)
    fields.push_back(real_space_fields(s, params, grid, window, opts));
  return conservation_residual(fields, params, dt);
}

} // namespace chainlab
