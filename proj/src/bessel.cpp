#include "chainlab/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace chainlab {

namespace {

int miller_start_order(int max_order, double ax) {
  const int base = std::max(max_order, static_cast<int>(std::ceil(ax)));
  int m = base + 17 + static_cast<int>(2.0 * std::sqrt(static_cast<double>(base + 1)));
  if (m % 2 != 0) ++m;
  return m;
}

double asymptotic_j(int order, double x) {
  return std::sqrt(2.0 / (M_PI * x)) *
         std::cos(x - 0.5 * M_PI * order - 0.25 * M_PI);
}

} // namespace

std::vector<double> bessel_j_sequence(int max_order, double x) {
  if (max_order < 0) throw std::invalid_argument("bessel_j_sequence: order < 0");
  std::vector<double> out(max_order + 1, 0.0);
  const double ax = std::abs(x);
  if (ax == 0.0) {
    out[0] = 1.0;
    return out;
  }

  const int m_start = miller_start_order(max_order, ax);
  double jp = 0.0;     // J_{k+1} (unnormalized)
  double jc = 1e-30;   // J_k
  double norm = 0.0;   // accumulates J_0 + 2 sum_{even k >= 2} J_k
  for (int k = m_start; k >= 1; --k) {
    double jm = (2.0 * k / ax) * jc - jp;
    jp = jc;
    jc = jm;
    if (std::abs(jc) > 1e250) {
      const double s = 1e-250;
      jc *= s;
      jp *= s;
      norm *= s;
      for (double& v : out) v *= s;
    }
    const int order = k - 1;
    if (order <= max_order) out[order] = jc;
    if (order != 0 && order % 2 == 0) norm += 2.0 * jc;
  }
  norm += jc; // jc is now J_0
  for (double& v : out) v /= norm;

  if (x < 0.0) {
    for (int r = 1; r <= max_order; r += 2) out[r] = -out[r];
  }
  return out;
}

double bessel_j(int order, double x) {
  const int r = std::abs(order);
  double sign = 1.0;
  if (order < 0 && r % 2 == 1) sign = -sign;
  if (x < 0.0 && r % 2 == 1) sign = -sign;
  const double ax = std::abs(x);
  if (ax == 0.0) return r == 0 ? 1.0 : 0.0;
  if (ax > std::max(30.0, 2.0 * r)) return sign * asymptotic_j(r, ax);
  return sign * bessel_j_sequence(r, ax)[r];
}

KernelTable::KernelTable(double omega, double gamma, double t, int r_max)
    : r_max_(r_max), omega_(omega), gamma_(gamma), t_(t),
      x_(gamma * omega * t) {
  j_ = bessel_j_sequence(r_max + 1, x_);
}

double KernelTable::j_signed(int r) const {
  const int a = std::abs(r);
  const double v = j_[a];
  return (r < 0 && a % 2 == 1) ? -v : v;
}

double KernelTable::f_at(int r) const {
  return j_signed(r) * std::cos(omega_ * t_ - 0.5 * M_PI * r);
}

double KernelTable::g_at(int r) const {
  return j_signed(r) * std::sin(omega_ * t_ - 0.5 * M_PI * r);
}

double KernelTable::fdot_at(int r) const {
  // d/dt [J_r(gwt) cos(wt - pi r/2)], with J_r' = (J_{r-1} - J_{r+1})/2
  const double chi = omega_ * t_ - 0.5 * M_PI * r;
  const double jprime = 0.5 * (j_signed(r - 1) - j_signed(r + 1));
  return gamma_ * omega_ * jprime * std::cos(chi) -
         omega_ * j_signed(r) * std::sin(chi);
}

KernelTable kernel_table(const ChainParams& params, double t, int r_max,
                         std::vector<std::string>* notes) {
  params.validate();
  if (params.binding <= 0.0)
    throw std::invalid_argument("kernel_table: Bessel kernels need a bound chain (K > 0)");
  const DerivedParams d = derived_params(params);
  if (d.gamma > 0.1 && notes)
    notes->push_back("gamma > 0.1: Bessel kernel outside its weak-coupling regime");
  return KernelTable(d.omega, d.gamma, t, r_max);
}

BesselKernel bessel_kernel(const ChainParams& params, int offset, double t,
                           std::vector<std::string>* notes) {
  const KernelTable table = kernel_table(params, t, std::abs(offset), notes);
  return BesselKernel{table.f_at(offset), table.g_at(offset)};
}

AffinePropagator approx_propagator(const ChainParams& params, double t,
                                   int r_max,
                                   std::vector<std::string>* notes) {
  params.validate();
  if (r_max < 1) throw std::invalid_argument("approx_propagator: r_max must be >= 1");
  const int n = params.n;
  const int rm = std::min(r_max, n / 2);
  const KernelTable table = kernel_table(params, t, std::max(rm, 1), notes);
  const DerivedParams d = derived_params(params);
  const double m_omega = params.mass * d.omega;

  AffinePropagator prop;
  prop.time = t;
  prop.matrix = MatrixXd::Zero(2 * n, 2 * n);
  for (int row = 0; row < n; ++row) {
    for (int off = -rm; off <= rm; ++off) {
      const int col = ((row + off) % n + n) % n;
      const double f = table.f_at(off);
      prop.matrix(row, col) += f;
      prop.matrix(row, n + col) += table.g_at(off) / m_omega;
      prop.matrix(n + row, col) += params.mass * table.fdot_at(off);
      prop.matrix(n + row, n + col) += f; // gdot = Omega f for the kernel family
    }
  }

  prop.drift = VectorXd::Zero(2 * n);
  if (params.has_centers()) {
    VectorXd xb = VectorXd::Zero(2 * n);
    xb.head(n) = params.centers_or_zero();
    prop.drift = xb - prop.matrix * xb;
  }
  return prop;
}

} // namespace chainlab
