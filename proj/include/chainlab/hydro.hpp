#pragma once

#include "chainlab/chain.hpp"
#include "chainlab/densities.hpp"
#include "chainlab/grid.hpp"

#include <string>
#include <vector>

namespace chainlab {

// Slowly varying fluid fields on a uniform grid: number fraction f
// (integrates to 1), velocity v and theta = kT.
struct HydroFields {
  Grid1D grid;
  VectorXd f, v, theta;

  double mass() const; // sum f dx
  void validate() const;
};

struct HydroOptions {
  double cfl = 0.4;
  double f_floor = 1e-10;     // cells below this are masked (v, theta frozen)
  double theta_floor = 0.0;   // clamp for theta after each stage
  long max_steps = 50'000'000;
};

struct HydroRhs {
  VectorXd df, dv, dtheta;
  std::vector<int> masked_cells;
};

// Semi-discrete right-hand sides: flux form for f, advective fluxes with
// locally scaled dissipation, central differences for the pressure and trap
// terms.  The pressure gradient uses d_x(ln f), which makes the harmonic-trap
// Maxwell-Boltzmann profile an exact discrete fixed point.
HydroRhs hydro_rhs(const HydroFields& fields, const ChainParams& params,
                   const HydroOptions& opts = {});

struct HydroTrajectory {
  std::vector<double> times;
  std::vector<HydroFields> snapshots;
  long steps = 0;
  double min_dt = 0.0;
  int theta_clamps = 0;
};

// Two-stage Runge-Kutta in time with adaptive dt = cfl dx / max(|v| + c),
// c = sqrt(3 theta / m).  Snapshots are taken exactly at output_times
// (plus t_final when absent).  Throws HydroStepError on step collapse or NaN.
HydroTrajectory hydro_evolve(const HydroFields& initial,
                             const ChainParams& params, double t_final,
                             double cfl,
                             const std::vector<double>& output_times = {},
                             const HydroOptions& opts = {});

struct HydroStepError : std::runtime_error {
  HydroStepError(const std::string& what, HydroFields state, double time)
      : std::runtime_error(what), state(std::move(state)), time(time) {}
  HydroFields state;
  double time;
};

// v = 0, theta = theta0, f ~ exp(-K x^2 / (2 theta0)) renormalized on the
// domain.  Warns when the domain truncates the profile.
HydroFields equilibrium_profile(const ChainParams& params, double theta0,
                                const Grid1D& domain,
                                std::vector<std::string>* notes = nullptr);

// Product Gaussian state for the local-equilibrium fields: particle j sits at
// the (j - 1/2)/N quantile of f with position variance s^2 and momentum
// variance m theta + 1/(4 s^2); the floor keeps the state physical and must
// be subtracted in round-trip comparisons.
GaussianState build_local_equilibrium(const HydroFields& fields,
                                      const ChainParams& params, double width,
                                      std::vector<std::string>* notes = nullptr);

// Inversion of the coarse-grained averages, valid for b = 0:
//   f = n/N, v = g/(m n), theta = 2 h/n - m v^2 - K x^2.
struct ExtractedFields {
  HydroFields fields;          // NaN on masked cells
  std::vector<int> masked;     // n below the floor
  std::vector<int> clamped;    // theta below -1e-6, clamped to theta_floor
};

ExtractedFields extract_fields(const DensityField& field,
                               const ChainParams& params,
                               double n_floor_rel = 0.01,
                               double theta_floor = 0.0);

} // namespace chainlab
