#include "chainlab/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chainlab {

namespace {

constexpr int kGhost = 2;

// cell values padded with zero-gradient ghost cells
VectorXd pad(const VectorXd& u) {
  VectorXd out(u.size() + 2 * kGhost);
  out.segment(kGhost, u.size()) = u;
  out.head(kGhost).setConstant(u(0));
  out.tail(kGhost).setConstant(u(u.size() - 1));
  return out;
}

struct Reconstruction {
  VectorXd left, right; // states at interface i+1/2, i = -1 .. nx-1
};

// piecewise-linear with central slopes; jumps are O(dx^3) on smooth data so
// the interface dissipation does not degrade the order
Reconstruction reconstruct(const VectorXd& padded, int nx) {
  Reconstruction r;
  r.left.resize(nx + 1);
  r.right.resize(nx + 1);
  for (int i = -1; i < nx; ++i) {
    const int c = i + kGhost;
    const double half_jump_l = 0.25 * (padded(c + 1) - padded(c - 1));
    const double half_jump_r = 0.25 * (padded(c + 2) - padded(c));
    r.left(i + 1) = padded(c) + half_jump_l;
    r.right(i + 1) = padded(c + 1) - half_jump_r;
  }
  return r;
}

double sound_speed(double theta, double m) {
  return std::sqrt(3.0 * std::max(theta, 0.0) / m);
}

} // namespace

double HydroFields::mass() const { return f.sum() * grid.dx; }

void HydroFields::validate() const {
  if (f.size() != grid.count || v.size() != grid.count ||
      theta.size() != grid.count)
    throw std::invalid_argument("HydroFields: field sizes must match the grid");
  if (grid.count < 5)
    throw std::invalid_argument("HydroFields: grid too small");
  if (f.minCoeff() < -1e-12)
    throw std::invalid_argument("HydroFields: negative f");
}

HydroRhs hydro_rhs(const HydroFields& fields, const ChainParams& params,
                   const HydroOptions& opts) {
  fields.validate();
  params.validate();
  const int nx = fields.grid.count;
  const double dx = fields.grid.dx;
  const double m = params.mass;
  const double kk = params.binding;

  const VectorXd fp = pad(fields.f);
  const VectorXd vp = pad(fields.v);
  const VectorXd tp = pad(fields.theta);

  const Reconstruction rf = reconstruct(fp, nx);
  const Reconstruction rv = reconstruct(vp, nx);
  const Reconstruction rt = reconstruct(tp, nx);

  // interface fluxes; dissipation speeds: the advected f sees only |v| (so a
  // resting fluid is an exact fixed point), v and theta jumps see the full
  // characteristic speed, which damps grid-scale acoustics
  VectorXd flux_f(nx + 1), flux_v(nx + 1), flux_t(nx + 1);
  for (int i = 0; i <= nx; ++i) {
    const double fl = std::max(rf.left(i), 0.0);
    const double fr = std::max(rf.right(i), 0.0);
    const double vl = rv.left(i), vr = rv.right(i);
    const double tl = rt.left(i), tr = rt.right(i);
    const double a_adv = std::max(std::abs(vl), std::abs(vr));
    const double a_full = std::max(std::abs(vl) + sound_speed(tl, m),
                                   std::abs(vr) + sound_speed(tr, m));
    flux_f(i) = 0.5 * (vl * fl + vr * fr) - 0.5 * a_adv * (fr - fl);
    flux_v(i) = 0.25 * (vl * vl + vr * vr) - 0.5 * a_full * (vr - vl);
    flux_t(i) = 0.5 * (vl * tl + vr * tr) - 0.5 * a_full * (tr - tl);
  }

  HydroRhs rhs;
  rhs.df.setZero(nx);
  rhs.dv.setZero(nx);
  rhs.dtheta.setZero(nx);
  for (int i = 0; i < nx; ++i) {
    rhs.df(i) = -(flux_f(i + 1) - flux_f(i)) / dx;
    if (fields.f(i) < opts.f_floor) {
      rhs.masked_cells.push_back(i);
      continue; // mass still flows; v and theta are frozen
    }
    const int c = i + kGhost;
    const double dtheta_dx = (tp(c + 1) - tp(c - 1)) / (2.0 * dx);
    const double dlnf_dx =
        (std::log(std::max(fp(c + 1), opts.f_floor * 1e-6)) -
         std::log(std::max(fp(c - 1), opts.f_floor * 1e-6))) /
        (2.0 * dx);
    const double dv_dx = (vp(c + 1) - vp(c - 1)) / (2.0 * dx);
    rhs.dv(i) = -(flux_v(i + 1) - flux_v(i)) / dx - dtheta_dx / m -
                fields.theta(i) * dlnf_dx / m - kk * fields.grid.x(i) / m;
    // v dth/dx + 2 th dv/dx = d(v th)/dx + th dv/dx
    rhs.dtheta(i) = -(flux_t(i + 1) - flux_t(i)) / dx -
                    fields.theta(i) * dv_dx;
  }
  return rhs;
}

HydroTrajectory hydro_evolve(const HydroFields& initial,
                             const ChainParams& params, double t_final,
                             double cfl,
                             const std::vector<double>& output_times,
                             const HydroOptions& opts) {
  initial.validate();
  if (!(cfl > 0.0 && cfl < 1.0))
    throw std::invalid_argument("hydro_evolve: cfl must be in (0,1)");
  if (t_final < 0.0) throw std::invalid_argument("hydro_evolve: t_final < 0");

  std::vector<double> targets = output_times;
  if (targets.empty()) targets.push_back(t_final);
  if (!std::is_sorted(targets.begin(), targets.end()))
    throw std::invalid_argument("hydro_evolve: output times must ascend");

  HydroOptions stepped = opts;
  stepped.cfl = cfl;

  HydroTrajectory traj;
  traj.min_dt = std::numeric_limits<double>::infinity();
  HydroFields u = initial;
  double t = 0.0;
  std::size_t next_out = 0;
  const double m = params.mass;

  auto emit_due = [&]() {
    while (next_out < targets.size() && t >= targets[next_out] - 1e-12) {
      traj.times.push_back(targets[next_out]);
      traj.snapshots.push_back(u);
      ++next_out;
    }
  };
  emit_due();

  while (t < t_final - 1e-12 && next_out < targets.size()) {
    double speed = 0.0;
    for (int i = 0; i < u.grid.count; ++i) {
      if (u.f(i) < opts.f_floor) continue;
      speed = std::max(speed, std::abs(u.v(i)) + sound_speed(u.theta(i), m));
    }
    double dt = speed > 0.0 ? cfl * u.grid.dx / speed
                            : cfl * u.grid.dx; // quiescent state
    dt = std::min(dt, targets[next_out] - t);
    if (dt < 1e-12)
      throw HydroStepError("hydro_evolve: step collapse (dt < 1e-12)", u, t);
    if (++traj.steps > opts.max_steps)
      throw HydroStepError("hydro_evolve: step budget exhausted", u, t);
    traj.min_dt = std::min(traj.min_dt, dt);

    // Heun: convex combination of flux-form stages keeps f conservative
    const HydroRhs k1 = hydro_rhs(u, params, stepped);
    HydroFields u1 = u;
    u1.f += dt * k1.df;
    u1.v += dt * k1.dv;
    u1.theta += dt * k1.dtheta;
    for (int i = 0; i < u1.grid.count; ++i) {
      if (u1.theta(i) < opts.theta_floor) {
        u1.theta(i) = opts.theta_floor;
        ++traj.theta_clamps;
      }
      if (u1.f(i) < 0.0) u1.f(i) = 0.0;
    }
    const HydroRhs k2 = hydro_rhs(u1, params, stepped);
    u.f = 0.5 * (u.f + u1.f + dt * k2.df);
    u.v = 0.5 * (u.v + u1.v + dt * k2.dv);
    u.theta = 0.5 * (u.theta + u1.theta + dt * k2.dtheta);
    for (int i = 0; i < u.grid.count; ++i) {
      if (u.theta(i) < opts.theta_floor) {
        u.theta(i) = opts.theta_floor;
        ++traj.theta_clamps;
      }
      if (u.f(i) < 0.0) u.f(i) = 0.0;
    }
    t += dt;
    if (!u.f.allFinite() || !u.v.allFinite() || !u.theta.allFinite())
      throw HydroStepError("hydro_evolve: NaN detected", u, t);
    emit_due();
  }
  return traj;
}

HydroFields equilibrium_profile(const ChainParams& params, double theta0,
                                const Grid1D& domain,
                                std::vector<std::string>* notes) {
  params.validate();
  if (!(params.binding > 0.0))
    throw std::invalid_argument("equilibrium_profile: needs K > 0");
  if (!(theta0 > 0.0))
    throw std::invalid_argument("equilibrium_profile: needs theta0 > 0");
  const double sigma = std::sqrt(theta0 / params.binding);
  if (domain.width() < 6.0 * sigma && notes)
    notes->push_back("equilibrium_profile: domain narrower than 6 sqrt(theta0/K)");

  HydroFields out;
  out.grid = domain;
  out.f.resize(domain.count);
  for (int i = 0; i < domain.count; ++i) {
    const double x = domain.x(i);
    out.f(i) = std::exp(-0.5 * params.binding * x * x / theta0);
  }
  out.f /= out.f.sum() * domain.dx; // discrete unit mass
  out.v = VectorXd::Zero(domain.count);
  out.theta = VectorXd::Constant(domain.count, theta0);
  return out;
}

GaussianState build_local_equilibrium(const HydroFields& fields,
                                      const ChainParams& params, double width,
                                      std::vector<std::string>* notes) {
  fields.validate();
  params.validate();
  if (!(width > 0.0))
    throw std::invalid_argument("build_local_equilibrium: width <= 0");
  const double total = fields.mass();
  if (!(total > 0.0))
    throw std::invalid_argument("build_local_equilibrium: f has zero mass");

  const int n = params.n;
  const Grid1D& grid = fields.grid;

  // support extent, for the resolution warning
  int lo = 0, hi = grid.count - 1;
  const double fmax = fields.f.maxCoeff();
  while (lo < hi && fields.f(lo) < 0.01 * fmax) ++lo;
  while (hi > lo && fields.f(hi) < 0.01 * fmax) --hi;
  const double support = (hi - lo + 1) * grid.dx;
  if (width > support && notes)
    notes->push_back("build_local_equilibrium: width exceeds the f support");

  // inverse CDF by stratified quantiles; piecewise-constant density per cell
  GaussianState state;
  state.mean = VectorXd::Zero(2 * n);
  state.cov = MatrixXd::Zero(2 * n, 2 * n);
  int cell = 0;
  double cum = 0.0; // mass strictly left of the current cell
  for (int j = 0; j < n; ++j) {
    const double target = total * (j + 0.5) / n;
    while (cell < grid.count - 1 &&
           cum + fields.f(cell) * grid.dx < target) {
      cum += fields.f(cell) * grid.dx;
      ++cell;
    }
    const double dens = std::max(fields.f(cell), 1e-300);
    double x = grid.x(cell) - 0.5 * grid.dx + (target - cum) / dens;
    x = std::clamp(x, grid.xmin(), grid.xmax());

    // linear interpolation of v and theta at x
    const double pos = (x - grid.x0) / grid.dx;
    const int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, grid.count - 2);
    const double w1 = std::clamp(pos - i0, 0.0, 1.0);
    const double vj = (1.0 - w1) * fields.v(i0) + w1 * fields.v(i0 + 1);
    const double tj = (1.0 - w1) * fields.theta(i0) + w1 * fields.theta(i0 + 1);

    state.mean(j) = x;
    state.mean(n + j) = params.mass * vj;
    state.cov(j, j) = width * width;
    state.cov(n + j, n + j) =
        params.mass * std::max(tj, 0.0) + 1.0 / (4.0 * width * width);
  }
  return state;
}

ExtractedFields extract_fields(const DensityField& field,
                               const ChainParams& params, double n_floor_rel,
                               double theta_floor) {
  params.validate();
  if (params.has_centers())
    throw std::invalid_argument(
        "extract_fields: inversion is stated for zero centers (b = 0)");
  const int nx = field.grid.count;
  const double m = params.mass;
  const double kk = params.binding;
  const double floor_abs = n_floor_rel * field.n.maxCoeff();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  ExtractedFields out;
  out.fields.grid = field.grid;
  out.fields.f = VectorXd::Constant(nx, nan);
  out.fields.v = VectorXd::Constant(nx, nan);
  out.fields.theta = VectorXd::Constant(nx, nan);
  for (int i = 0; i < nx; ++i) {
    if (!(field.n(i) > floor_abs)) {
      out.masked.push_back(i);
      continue;
    }
    const double x = field.grid.x(i);
    const double f = field.n(i) / params.n;
    const double v = field.g(i) / (m * field.n(i));
    double theta = 2.0 * field.h(i) / field.n(i) - m * v * v - kk * x * x;
    if (theta < -1e-6) {
      out.clamped.push_back(i);
      theta = theta_floor;
    } else if (theta < theta_floor) {
      theta = theta_floor;
    }
    out.fields.f(i) = f;
    out.fields.v(i) = v;
    out.fields.theta(i) = theta;
  }
  return out;
}

} // namespace chainlab
