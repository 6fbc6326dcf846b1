#include "chainlab/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace chainlab {

using nlohmann::json;

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::decoherence_scan: return "decoherence-scan";
    case ExperimentKind::thermalization: return "thermalization";
    case ExperimentKind::hydro_compare: return "hydro-compare";
    case ExperimentKind::bessel_accuracy: return "bessel-accuracy";
    case ExperimentKind::conservation_check: return "conservation-check";
  }
  return "?";
}

ExperimentKind experiment_from_string(const std::string& name) {
  if (name == "decoherence-scan") return ExperimentKind::decoherence_scan;
  if (name == "thermalization") return ExperimentKind::thermalization;
  if (name == "hydro-compare") return ExperimentKind::hydro_compare;
  if (name == "bessel-accuracy") return ExperimentKind::bessel_accuracy;
  if (name == "conservation-check") return ExperimentKind::conservation_check;
  throw std::invalid_argument("unknown experiment: " + name);
}

std::vector<double> ScanSpec::make() const {
  if (kind == "list") return values;
  if (count < 1) throw std::invalid_argument("ScanSpec: count must be >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = min;
    return out;
  }
  if (kind == "linear") {
    for (int i = 0; i < count; ++i)
      out[i] = min + (max - min) * i / (count - 1);
  } else if (kind == "log") {
    if (!(min > 0.0 && max > min))
      throw std::invalid_argument("ScanSpec: log scan needs 0 < min < max");
    const double lmin = std::log(min), lmax = std::log(max);
    for (int i = 0; i < count; ++i)
      out[i] = std::exp(lmin + (lmax - lmin) * i / (count - 1));
  } else {
    throw std::invalid_argument("ScanSpec: unknown kind " + kind);
  }
  return out;
}

VectorXd CentersSpec::make(int n) const {
  if (kind == "zero") return VectorXd::Zero(n);
  if (kind == "lattice") {
    VectorXd b(n);
    for (int j = 0; j < n; ++j) b(j) = spacing * (j - 0.5 * (n - 1));
    return b;
  }
  if (kind == "list") {
    if (static_cast<int>(values.size()) != n)
      throw std::invalid_argument("CentersSpec: list size must equal N");
    return Eigen::Map<const VectorXd>(values.data(), n);
  }
  throw std::invalid_argument("CentersSpec: unknown kind " + kind);
}

ChainParams ChainSpec::make() const {
  ChainParams params;
  params.n = n;
  params.mass = mass;
  params.coupling = coupling;
  params.binding = binding;
  params.centers = centers.make(n);
  params.validate();
  return params;
}

double LocalEquilibriumSpec::resolve_width_sq(double mass, double omega) const {
  if (width_sq == "stationary") {
    // m^2 w^2 s^4 - m theta0 s^2 - 1/4 = 0: the per-site covariance
    // diag(s^2, m theta0 + 1/(4 s^2)) is then stationary in the local well
    const double mw2 = mass * mass * omega * omega;
    return (mass * theta0 +
            std::sqrt(mass * mass * theta0 * theta0 + mw2)) /
           (2.0 * mw2);
  }
  const double s2 = std::stod(width_sq);
  if (!(s2 > 0.0))
    throw std::invalid_argument("LocalEquilibriumSpec: width_sq must be > 0");
  return s2;
}

namespace {

json scan_to_json(const ScanSpec& s) {
  json j{{"kind", s.kind}};
  if (s.kind == "list") {
    j["values"] = s.values;
  } else {
    j["min"] = s.min;
    j["max"] = s.max;
    j["count"] = s.count;
  }
  return j;
}

ScanSpec scan_from_json(const json& j) {
  ScanSpec s;
  s.kind = j.value("kind", "linear");
  s.min = j.value("min", 0.0);
  s.max = j.value("max", 1.0);
  s.count = j.value("count", 2);
  if (j.contains("values")) s.values = j["values"].get<std::vector<double>>();
  return s;
}

} // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = to_string(experiment);
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["chain"] = {{"n", chain.n},
                {"mass", chain.mass},
                {"coupling", chain.coupling},
                {"binding", chain.binding},
                {"centers",
                 {{"kind", chain.centers.kind},
                  {"spacing", chain.centers.spacing},
                  {"values", chain.centers.values}}}};
  j["state"] = {{"type", state.type},
                {"product",
                 {{"position_width_sq", state.product.position_width_sq},
                  {"momentum_variance", state.product.momentum_variance},
                  {"bump_amplitude", state.product.bump_amplitude},
                  {"bump_width_sites", state.product.bump_width_sites}}},
                {"local_equilibrium",
                 {{"theta0", state.equilibrium.theta0},
                  {"sloshing", state.equilibrium.sloshing},
                  {"breathing", state.equilibrium.breathing},
                  {"wave_amplitude", state.equilibrium.wave_amplitude},
                  {"wave_length", state.equilibrium.wave_length},
                  {"width_sq", state.equilibrium.width_sq}}}};
  j["grids"] = {{"k", scan_to_json(k_grid)},
                {"t", scan_to_json(t_grid)},
                {"t_in_gamma_omega", t_grid_in_gamma_omega},
                {"x",
                 {{"min", x_grid.min},
                  {"max", x_grid.max},
                  {"count", x_grid.count},
                  {"window", x_grid.window}}}};
  j["hydro"] = {{"cfl", hydro.cfl},
                {"f_floor", hydro.f_floor},
                {"theta_floor", hydro.theta_floor},
                {"n_floor_rel", hydro.n_floor_rel},
                {"assert_horizon_gamma_omega", hydro.assert_horizon_gamma_omega},
                {"l2_tolerance", hydro.l2_tolerance},
                {"fixed_point_tolerance", hydro.fixed_point_tolerance}};
  j["tolerances"] = {{"decoherence", tolerances.decoherence},
                     {"bessel_block_error", tolerances.bessel_block_error},
                     {"bessel_deficit", tolerances.bessel_deficit},
                     {"residual_order", tolerances.residual_order},
                     {"equilibration_window_lo", tolerances.equilibration_window_lo},
                     {"equilibration_window_hi", tolerances.equilibration_window_hi},
                     {"spread_threshold", tolerances.spread_threshold}};
  j["kinds"] = kinds;
  j["coupling_values"] = coupling_values;
  j["refinement_levels"] = refinement_levels;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
  c.seed = j.value("seed", uint64_t{1});
  c.output_dir = j.value("output_dir", std::string("out"));

  const json& jc = j.at("chain");
  c.chain.n = jc.at("n").get<int>();
  c.chain.mass = jc.value("mass", 1.0);
  c.chain.coupling = jc.value("coupling", 0.0);
  c.chain.binding = jc.value("binding", 0.0);
  if (jc.contains("centers")) {
    const json& cc = jc["centers"];
    c.chain.centers.kind = cc.value("kind", "zero");
    c.chain.centers.spacing = cc.value("spacing", 1.0);
    if (cc.contains("values"))
      c.chain.centers.values = cc["values"].get<std::vector<double>>();
  }

  if (j.contains("state")) {
    const json& js = j["state"];
    c.state.type = js.value("type", "product-gaussian");
    if (js.contains("product")) {
      const json& jp = js["product"];
      c.state.product.position_width_sq =
          jp.value("position_width_sq", c.state.product.position_width_sq);
      c.state.product.momentum_variance =
          jp.value("momentum_variance", c.state.product.momentum_variance);
      c.state.product.bump_amplitude =
          jp.value("bump_amplitude", c.state.product.bump_amplitude);
      c.state.product.bump_width_sites =
          jp.value("bump_width_sites", c.state.product.bump_width_sites);
    }
    if (js.contains("local_equilibrium")) {
      const json& je = js["local_equilibrium"];
      c.state.equilibrium.theta0 = je.value("theta0", c.state.equilibrium.theta0);
      c.state.equilibrium.sloshing =
          je.value("sloshing", c.state.equilibrium.sloshing);
      c.state.equilibrium.breathing =
          je.value("breathing", c.state.equilibrium.breathing);
      c.state.equilibrium.wave_amplitude =
          je.value("wave_amplitude", c.state.equilibrium.wave_amplitude);
      c.state.equilibrium.wave_length =
          je.value("wave_length", c.state.equilibrium.wave_length);
      if (je.contains("width_sq")) {
        if (je["width_sq"].is_string())
          c.state.equilibrium.width_sq = je["width_sq"].get<std::string>();
        else
          c.state.equilibrium.width_sq =
              std::to_string(je["width_sq"].get<double>());
      }
    }
  }

  if (j.contains("grids")) {
    const json& jg = j["grids"];
    if (jg.contains("k")) c.k_grid = scan_from_json(jg["k"]);
    if (jg.contains("t")) c.t_grid = scan_from_json(jg["t"]);
    c.t_grid_in_gamma_omega = jg.value("t_in_gamma_omega", false);
    if (jg.contains("x")) {
      const json& jx = jg["x"];
      c.x_grid.min = jx.value("min", c.x_grid.min);
      c.x_grid.max = jx.value("max", c.x_grid.max);
      c.x_grid.count = jx.value("count", c.x_grid.count);
      c.x_grid.window = jx.value("window", c.x_grid.window);
    }
  }

  if (j.contains("hydro")) {
    const json& jh = j["hydro"];
    c.hydro.cfl = jh.value("cfl", c.hydro.cfl);
    c.hydro.f_floor = jh.value("f_floor", c.hydro.f_floor);
    c.hydro.theta_floor = jh.value("theta_floor", c.hydro.theta_floor);
    c.hydro.n_floor_rel = jh.value("n_floor_rel", c.hydro.n_floor_rel);
    c.hydro.assert_horizon_gamma_omega =
        jh.value("assert_horizon_gamma_omega", c.hydro.assert_horizon_gamma_omega);
    c.hydro.l2_tolerance = jh.value("l2_tolerance", c.hydro.l2_tolerance);
    c.hydro.fixed_point_tolerance =
        jh.value("fixed_point_tolerance", c.hydro.fixed_point_tolerance);
  }

  if (j.contains("tolerances")) {
    const json& jt = j["tolerances"];
    c.tolerances.decoherence = jt.value("decoherence", c.tolerances.decoherence);
    c.tolerances.bessel_block_error =
        jt.value("bessel_block_error", c.tolerances.bessel_block_error);
    c.tolerances.bessel_deficit =
        jt.value("bessel_deficit", c.tolerances.bessel_deficit);
    c.tolerances.residual_order =
        jt.value("residual_order", c.tolerances.residual_order);
    c.tolerances.equilibration_window_lo = jt.value(
        "equilibration_window_lo", c.tolerances.equilibration_window_lo);
    c.tolerances.equilibration_window_hi = jt.value(
        "equilibration_window_hi", c.tolerances.equilibration_window_hi);
    c.tolerances.spread_threshold =
        jt.value("spread_threshold", c.tolerances.spread_threshold);
  }

  if (j.contains("kinds")) c.kinds = j["kinds"].get<std::vector<std::string>>();
  if (j.contains("coupling_values"))
    c.coupling_values = j["coupling_values"].get<std::vector<double>>();
  c.refinement_levels = j.value("refinement_levels", c.refinement_levels);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  const json j = json::parse(in, nullptr, /*allow_exceptions=*/true,
                             /*ignore_comments=*/true);
  return from_json(j);
}

} // namespace chainlab
