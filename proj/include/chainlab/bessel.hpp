#pragma once

#include "chainlab/chain.hpp"

#include <vector>

namespace chainlab {

// Bessel function of the first kind, integer order.  Miller downward
// recurrence for x <= max(30, 2|r|), the leading large-argument asymptote
//   J_r(x) ~ sqrt(2/(pi x)) cos(x - r pi/2 - pi/4)
// beyond.  The asymptote carries a ~(4r^2 - 1)/(8x) relative error, so the
// switch keeps full accuracy only for small orders; the propagator kernels
// below always run at x inside the recurrence regime.
double bessel_j(int order, double x);

// J_0(x) .. J_{max_order}(x) in one downward pass (recurrence regime).
std::vector<double> bessel_j_sequence(int max_order, double x);

// Travelling-wave kernels of the weakly coupled bound chain,
//   f_r(t) = J_r(gamma Omega t) cos(Omega t - pi r/2),
//   g_r(t) = J_r(gamma Omega t) sin(Omega t - pi r/2).
struct BesselKernel {
  double f = 0.0;
  double g = 0.0;
};

BesselKernel bessel_kernel(const ChainParams& params, int offset, double t,
                           std::vector<std::string>* notes = nullptr);

// Kernels and their analytic time derivatives for signed offsets |r| <= r_max,
// sharing one Bessel evaluation.  J_{-r} = (-1)^r J_r.
class KernelTable {
 public:
  KernelTable(double omega, double gamma, double t, int r_max);

  double f_at(int r) const;    // J_r(x) cos(wt - pi r/2)
  double g_at(int r) const;    // J_r(x) sin(wt - pi r/2)
  double fdot_at(int r) const; // d/dt f_r
  double x() const { return x_; }
  int r_max() const { return r_max_; }

 private:
  double j_signed(int r) const;

  int r_max_;
  double omega_, gamma_, t_, x_;
  std::vector<double> j_; // orders 0 .. r_max + 1
};

KernelTable kernel_table(const ChainParams& params, double t, int r_max,
                         std::vector<std::string>* notes = nullptr);

// Propagator assembled from the Bessel kernels, truncated at |r - n| <= r_max
// with periodic wraparound.  r_max >= N/2 clamps to the chain size.  The
// momentum-momentum block reuses f: gdot = Omega f holds exactly for the
// underlying kernel family, and preserves the identity at t = 0 (the literal
// derivative of the Bessel form does not).
AffinePropagator approx_propagator(const ChainParams& params, double t,
                                   int r_max,
                                   std::vector<std::string>* notes = nullptr);

} // namespace chainlab
