#pragma once

#include "chainlab/chain.hpp"
#include "chainlab/grid.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chainlab {

enum class ExperimentKind {
  decoherence_scan,
  thermalization,
  hydro_compare,
  bessel_accuracy,
  conservation_check,
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

// 1-d scan specification for k- and t-grids.
struct ScanSpec {
  std::string kind = "linear"; // linear | log | list
  double min = 0.0;
  double max = 1.0;
  int count = 2;
  std::vector<double> values; // kind == list

  std::vector<double> make() const;
};

struct SpatialSpec {
  double min = -1.0;
  double max = 1.0;
  int count = 64;
  double window = 0.1; // coarse-graining width

  Grid1D make() const { return Grid1D::linspace(min, max, count); }
};

struct CentersSpec {
  std::string kind = "zero"; // zero | lattice | list
  double spacing = 1.0;
  std::vector<double> values;

  VectorXd make(int n) const;
};

struct ChainSpec {
  int n = 1;
  double mass = 1.0;
  double coupling = 0.0;
  double binding = 0.0;
  CentersSpec centers;

  ChainParams make() const;
};

// Product Gaussian over the sites, means at the centers.  The optional bump
// multiplies the momentum variance by (1 + amplitude exp(-d^2/2w^2)) around
// the middle site.
struct ProductStateSpec {
  double position_width_sq = 0.5;
  double momentum_variance = 0.5;
  double bump_amplitude = 0.0;
  double bump_width_sites = 1.0;
};

// Trap-equilibrium fields plus smooth velocity perturbations.
struct LocalEquilibriumSpec {
  double theta0 = 0.5;
  double sloshing = 0.0;  // v += sloshing * sqrt(theta0/m)
  double breathing = 0.0; // v += breathing * omega_trap * x
  double wave_amplitude = 0.0;
  double wave_length = 1.0; // v += a c0 sin(x/len) exp(-x^2/(2 L^2))
  std::string width_sq = "stationary"; // or a number (as string for JSON)

  double resolve_width_sq(double mass, double omega) const;
};

struct StateSpec {
  std::string type = "product-gaussian"; // or local-equilibrium
  ProductStateSpec product;
  LocalEquilibriumSpec equilibrium;
};

struct HydroSpec {
  double cfl = 0.4;
  double f_floor = 1e-10;
  double theta_floor = 0.0;
  double n_floor_rel = 0.02;         // extraction mask
  double assert_horizon_gamma_omega = 1.0;
  double l2_tolerance = 0.10;
  double fixed_point_tolerance = 1e-3;
};

struct TolerancesSpec {
  double decoherence = 0.01;
  double bessel_block_error = 0.05;
  double bessel_deficit = 1e-8;
  double residual_order = 1.9;
  double equilibration_window_lo = 0.3; // units of (gamma Omega)^-1
  double equilibration_window_hi = 10.0;
  double spread_threshold = 0.1;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::decoherence_scan;
  ChainSpec chain;
  StateSpec state;
  ScanSpec k_grid;   // decoherence scans; empty "list" means auto
  ScanSpec t_grid;
  SpatialSpec x_grid;
  HydroSpec hydro;
  TolerancesSpec tolerances;
  std::vector<std::string> kinds = {"number", "momentum", "energy"};
  std::vector<double> coupling_values; // bessel-accuracy sweep
  int refinement_levels = 2;           // conservation-check
  bool t_grid_in_gamma_omega = false;  // t values given in (gamma Omega)^-1
  uint64_t seed = 1;
  std::string output_dir = "out";

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path); // JSON, // comments ok
};

} // namespace chainlab
