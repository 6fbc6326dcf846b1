#include "chainlab/hydro.hpp"
#include "support/test_oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace chainlab;

namespace {

ChainParams trap(double k = 1.0, double m = 1.0, double nu2 = 0.0) {
  ChainParams params;
  params.n = 1;
  params.mass = m;
  params.binding = k;
  params.coupling = nu2;
  if (k == 0.0 && nu2 == 0.0) params.allow_free = true;
  return params;
}

ChainParams trap_n(int n, double k = 1.0, double nu2 = 0.0) {
  ChainParams params = trap(k, 1.0, nu2);
  params.n = n;
  return params;
}

} // namespace

TEST_CASE("equilibrium profile") {
  const ChainParams params = trap(1.0);
  const Grid1D domain = Grid1D::linspace(-8.0, 8.0, 401);
  const HydroFields eq = equilibrium_profile(params, 1.0, domain);
  CHECK(std::abs(eq.mass() - 1.0) <= 1e-8);
  // f(0) = 1/sqrt(2 pi) for K = theta0 = 1
  const int mid = domain.count / 2;
  CHECK(eq.f(mid) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-6));

  std::vector<std::string> notes;
  equilibrium_profile(params, 1.0, Grid1D::linspace(-2.0, 2.0, 101), &notes);
  REQUIRE(notes.size() == 1); // truncation warning
}

TEST_CASE("hydro rhs vanishes on the trap equilibrium") {
  const ChainParams params = trap(1.3, 0.7);
  const Grid1D domain = Grid1D::linspace(-9.0, 9.0, 301);
  const HydroFields eq = equilibrium_profile(params, 0.8, domain);
  const HydroRhs rhs = hydro_rhs(eq, params);
  for (int i = 2; i < domain.count - 2; ++i) {
    CHECK(std::abs(rhs.df(i)) <= 1e-10);
    CHECK(std::abs(rhs.dv(i)) <= 1e-10);
    CHECK(std::abs(rhs.dtheta(i)) <= 1e-10);
  }
}

TEST_CASE("free uniform flow has zero rhs") {
  const ChainParams params = trap(0.0);
  HydroFields u;
  u.grid = Grid1D::linspace(0.0, 10.0, 101);
  u.f = VectorXd::Constant(101, 0.1);
  u.v = VectorXd::Constant(101, 0.7);
  u.theta = VectorXd::Constant(101, 0.4);
  const HydroRhs rhs = hydro_rhs(u, params);
  CHECK(rhs.df.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(rhs.dv.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(rhs.dtheta.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("pressureless advection follows the characteristics") {
  // K = 0, theta = 0, uniform f: dv/dt + v dv/dx = 0
  const ChainParams params = trap(0.0);
  auto v0 = [](double x) { return 0.2 * std::exp(-x * x / 2.0); };
  const double t_final = 1.0; // well before characteristic crossing

  auto solve = [&](int nx) {
    HydroFields u;
    u.grid = Grid1D::linspace(-10.0, 10.0, nx);
    u.f = VectorXd::Constant(nx, 0.1);
    u.theta = VectorXd::Zero(nx);
    u.v.resize(nx);
    for (int i = 0; i < nx; ++i) u.v(i) = v0(u.grid.x(i));
    const HydroTrajectory traj = hydro_evolve(u, params, t_final, 0.4);
    return traj.snapshots.back();
  };

  auto characteristic_error = [&](const HydroFields& sol) {
    double err = 0.0;
    for (int i = 0; i < sol.grid.count; ++i) {
      const double x = sol.grid.x(i);
      if (std::abs(x) > 6.0) continue;
      double x0 = x; // Newton iteration for x = x0 + v0(x0) t
      for (int it = 0; it < 60; ++it) {
        const double g = x0 + v0(x0) * t_final - x;
        const double dg = 1.0 + (-x0) * v0(x0) * t_final;
        x0 -= g / dg;
      }
      err = std::max(err, std::abs(sol.v(i) - v0(x0)));
    }
    return err;
  };

  const double coarse = characteristic_error(solve(201));
  const double fine = characteristic_error(solve(401));
  CHECK(coarse < 2e-3);
  CHECK(coarse / fine >= 3.0);
}

TEST_CASE("trap equilibrium is a discrete fixed point of the solver") {
  const ChainParams params = trap(1.0);
  const Grid1D domain = Grid1D::linspace(-8.0, 8.0, 161);
  const HydroFields eq = equilibrium_profile(params, 1.0, domain);
  // ~1000 steps at this cfl and grid
  const double dt_est = 0.4 * domain.dx / std::sqrt(3.0);
  const double t_final = 1000.0 * dt_est;
  const HydroTrajectory traj = hydro_evolve(eq, params, t_final, 0.4);
  CHECK(traj.steps >= 1000);
  const HydroFields& end = traj.snapshots.back();
  const double drift =
      std::sqrt((end.f - eq.f).squaredNorm() + (end.v - eq.v).squaredNorm() +
                (end.theta - eq.theta).squaredNorm()) /
      std::sqrt(eq.f.squaredNorm() + eq.theta.squaredNorm());
  CHECK(drift <= 1e-3);
  CHECK(std::abs(end.mass() - eq.mass()) <= 1e-5);
}

TEST_CASE("mass is conserved by the flux form") {
  const ChainParams params = trap(1.0);
  const Grid1D domain = Grid1D::linspace(-9.0, 9.0, 241);
  HydroFields u = equilibrium_profile(params, 0.7, domain);
  for (int i = 0; i < domain.count; ++i)
    u.v(i) += 0.1 * std::exp(-domain.x(i) * domain.x(i));
  const double mass0 = u.mass();
  const HydroTrajectory traj = hydro_evolve(u, params, 8.0, 0.4);
  CHECK(std::abs(traj.snapshots.back().mass() - mass0) <= 1e-5 * mass0);
}

TEST_CASE("self-convergence under grid refinement") {
  const ChainParams params = trap(1.0);
  auto run = [&](int nx) {
    const Grid1D domain = Grid1D::linspace(-8.0, 8.0, nx);
    HydroFields u = equilibrium_profile(params, 1.0, domain);
    for (int i = 0; i < nx; ++i) {
      const double x = domain.x(i);
      u.v(i) += 0.1 * x * std::exp(-0.25 * x * x);
    }
    return hydro_evolve(u, params, 2.0, 0.3).snapshots.back();
  };
  const HydroFields coarse = run(101);
  const HydroFields medium = run(201);
  const HydroFields reference = run(801);

  auto error_vs_ref = [&](const HydroFields& sol, int stride_ref) {
    double err = 0.0;
    int cells = 0;
    for (int i = 0; i < sol.grid.count; ++i) {
      const double diff = sol.f(i) - reference.f(i * stride_ref);
      err += diff * diff;
      ++cells;
    }
    return std::sqrt(err / cells);
  };
  const double e_coarse = error_vs_ref(coarse, 8);
  const double e_medium = error_vs_ref(medium, 4);
  CHECK(e_coarse / e_medium >= 3.0);
}

TEST_CASE("galilean boost commutes with free evolution to grid order") {
  const ChainParams params = trap(0.0);
  const int nx = 401;
  const double t_final = 2.0;
  const Grid1D domain = Grid1D::linspace(-20.0, 20.0, nx);
  const double v_boost = domain.dx * 10.0 / t_final; // shift = 20 cells

  auto bump_fields = [&](double boost) {
    HydroFields u;
    u.grid = domain;
    u.f.resize(nx);
    u.v.resize(nx);
    u.theta = VectorXd::Constant(nx, 0.2);
    for (int i = 0; i < nx; ++i) {
      const double x = domain.x(i);
      u.f(i) = 0.05 + 0.1 * std::exp(-0.5 * x * x);
      u.v(i) = boost + 0.05 * std::exp(-0.5 * x * x);
    }
    return u;
  };

  const HydroFields rest = hydro_evolve(bump_fields(0.0), params, t_final, 0.35)
                               .snapshots.back();
  const HydroFields boosted =
      hydro_evolve(bump_fields(v_boost), params, t_final, 0.35).snapshots.back();

  // discretization scale: coarse-vs-fine difference of the rest solution
  const Grid1D half = Grid1D::linspace(-20.0, 20.0, 2 * nx - 1);
  HydroFields u_half;
  u_half.grid = half;
  u_half.f.resize(half.count);
  u_half.v.resize(half.count);
  u_half.theta = VectorXd::Constant(half.count, 0.2);
  for (int i = 0; i < half.count; ++i) {
    const double x = half.x(i);
    u_half.f(i) = 0.05 + 0.1 * std::exp(-0.5 * x * x);
    u_half.v(i) = 0.05 * std::exp(-0.5 * x * x);
  }
  const HydroFields fine =
      hydro_evolve(u_half, params, t_final, 0.35).snapshots.back();
  double disc_err = 0.0, boost_err = 0.0;
  const int shift = 20;
  for (int i = 0; i < nx; ++i) {
    disc_err = std::max(disc_err, std::abs(rest.f(i) - fine.f(2 * i)));
    if (i + shift < nx) {
      boost_err =
          std::max(boost_err, std::abs(boosted.f(i + shift) - rest.f(i)));
    }
  }
  CHECK(boost_err <= 2.0 * disc_err);
}

TEST_CASE("local equilibrium state construction and round trips") {
  const ChainParams params = trap_n(200, 1.0);
  const Grid1D domain = Grid1D::linspace(-8.0, 8.0, 321);
  const double theta0 = 1.0;
  HydroFields fields = equilibrium_profile(params, theta0, domain);
  const double s = 0.35;

  SUBCASE("temperature field recovers theta0 plus the recorded floor") {
    const GaussianState state = build_local_equilibrium(fields, params, s);
    const double floor = 1.0 / (4.0 * params.mass * s * s);
    FieldOptions opts;
    opts.n_floor_rel = 0.05;
    const VectorXd temp =
        temperature_field(state, params, domain, 0.25, opts);
    for (int i = 0; i < domain.count; ++i) {
      if (std::isnan(temp(i))) continue;
      CHECK(temp(i) - floor == doctest::Approx(theta0).epsilon(0.02));
    }
  }

  SUBCASE("momentum density matches m v(x) n(x)") {
    for (int i = 0; i < domain.count; ++i)
      fields.v(i) = 0.3 * std::tanh(domain.x(i));
    const GaussianState state = build_local_equilibrium(fields, params, s);
    const DensityField df = real_space_fields(state, params, domain, 0.25);
    const double nmax = df.n.maxCoeff();
    for (int i = 0; i < domain.count; ++i) {
      if (df.n(i) < 0.05 * nmax) continue;
      const double expected =
          params.mass * 0.3 * std::tanh(domain.x(i)) * df.n(i);
      CHECK(df.g(i) == doctest::Approx(expected).epsilon(0.02).scale(nmax));
    }
  }

  SUBCASE("stress and energy currents match the local-equilibrium forms") {
    for (int i = 0; i < domain.count; ++i)
      fields.v(i) = 0.2 * std::sin(0.4 * domain.x(i));
    const GaussianState state = build_local_equilibrium(fields, params, s);
    const DensityField df = real_space_fields(state, params, domain, 0.25);
    const double floor = 1.0 / (4.0 * params.mass * s * s);
    const double nmax = df.n.maxCoeff();
    const double tau_scale = df.tau.cwiseAbs().maxCoeff();
    const double j_scale = df.j.cwiseAbs().maxCoeff();
    for (int i = 0; i < domain.count; ++i) {
      if (df.n(i) < 0.05 * nmax) continue;
      const double x = domain.x(i);
      const double v = 0.2 * std::sin(0.4 * x);
      const double th = theta0 + floor; // constructed temperature incl. floor
      const double m = params.mass;
      const double tau_expect = (m * v * v + th) * df.n(i);
      CHECK(df.tau(i) == doctest::Approx(tau_expect).epsilon(0.03).scale(tau_scale));
      const double j_expect =
          (1.5 * v * th + 0.5 * m * v * v * v) * df.n(i) +
          0.5 * params.binding / m * x * x * df.g(i);
      CHECK(df.j(i) == doctest::Approx(j_expect).epsilon(0.03).scale(j_scale));
    }
  }

  SUBCASE("zero-mass fields are rejected") {
    HydroFields empty = fields;
    empty.f.setZero();
    CHECK_THROWS_AS(build_local_equilibrium(empty, params, s),
                    std::invalid_argument);
  }
}

TEST_CASE("temperature profile round trip through construction") {
  const ChainParams params = trap_n(300, 1.0);
  const Grid1D domain = Grid1D::linspace(-8.0, 8.0, 321);
  HydroFields fields = equilibrium_profile(params, 1.0, domain);
  const double theta_base = 1.0;
  for (int i = 0; i < domain.count; ++i)
    fields.theta(i) = theta_base * (1.0 + 0.2 * std::tanh(domain.x(i)));
  const double s = 0.35;
  const double floor = 1.0 / (4.0 * params.mass * s * s);
  const GaussianState state = build_local_equilibrium(fields, params, s);
  FieldOptions opts;
  opts.n_floor_rel = 0.05;
  const DensityField df = real_space_fields(state, params, domain, 0.25, opts);
  const double nmax = df.n.maxCoeff();
  for (int i = 0; i < domain.count; ++i) {
    if (df.n(i) < 0.05 * nmax || std::isnan(df.temperature(i))) continue;
    const double expected =
        theta_base * (1.0 + 0.2 * std::tanh(domain.x(i)));
    CHECK(df.temperature(i) - floor ==
          doctest::Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("field extraction") {
  const ChainParams params = trap_n(120, 0.9);

  SUBCASE("state at rest with a constructed energy density") {
    const double theta0 = 0.6;
    const Grid1D grid = Grid1D::linspace(-5.0, 5.0, 201);
    DensityField df;
    df.grid = grid;
    df.n.resize(grid.count);
    df.g = VectorXd::Zero(grid.count);
    df.h.resize(grid.count);
    df.tau = VectorXd::Zero(grid.count);
    df.j = VectorXd::Zero(grid.count);
    df.b_kernel = VectorXd::Zero(grid.count);
    df.temperature = VectorXd::Zero(grid.count);
    for (int i = 0; i < grid.count; ++i) {
      const double x = grid.x(i);
      df.n(i) = 120.0 * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
      df.h(i) = (0.5 * theta0 + 0.5 * params.binding * x * x) * df.n(i);
    }
    const ExtractedFields out = extract_fields(df, params, 0.01);
    for (int i = 0; i < grid.count; ++i) {
      if (std::isnan(out.fields.f(i))) continue;
      CHECK(out.fields.v(i) == doctest::Approx(0.0));
      CHECK(out.fields.theta(i) == doctest::Approx(theta0).epsilon(1e-10));
      CHECK(out.fields.f(i) == doctest::Approx(df.n(i) / 120.0).epsilon(1e-12));
    }

    SUBCASE("doubling N leaves the intensive fields unchanged") {
      ChainParams dbl = params;
      dbl.n = 240;
      DensityField df2 = df;
      df2.n *= 2.0;
      df2.g *= 2.0;
      df2.h *= 2.0;
      const ExtractedFields out2 = extract_fields(df2, dbl, 0.01);
      for (int i = 0; i < grid.count; ++i) {
        if (std::isnan(out.fields.f(i)) || std::isnan(out2.fields.f(i))) continue;
        CHECK(out2.fields.f(i) == doctest::Approx(out.fields.f(i)).epsilon(1e-12));
        CHECK(out2.fields.theta(i) ==
              doctest::Approx(out.fields.theta(i)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("round trip from fields to state and back within 5%") {
    const Grid1D domain = Grid1D::linspace(-8.0, 8.0, 321);
    HydroFields fields = equilibrium_profile(params, 1.0, domain);
    for (int i = 0; i < domain.count; ++i)
      fields.v(i) = 0.2 * std::sin(0.5 * domain.x(i));
    const double s = 0.3;
    const double floor = 1.0 / (4.0 * params.mass * s * s);
    const GaussianState state = build_local_equilibrium(fields, params, s);
    const DensityField df = real_space_fields(state, params, domain, 0.2);
    const ExtractedFields out = extract_fields(df, params, 0.05);
    const double fmax = fields.f.maxCoeff();
    for (int i = 0; i < domain.count; ++i) {
      if (std::isnan(out.fields.f(i))) continue;
      CHECK(out.fields.f(i) == doctest::Approx(fields.f(i)).epsilon(0.05).scale(fmax));
      CHECK(out.fields.v(i) == doctest::Approx(fields.v(i)).epsilon(0.05).scale(0.2));
      CHECK(out.fields.theta(i) - floor ==
            doctest::Approx(fields.theta(i)).epsilon(0.05));
    }
  }

  SUBCASE("nonzero centers are refused") {
    ChainParams with_centers = params;
    with_centers.centers = VectorXd::Constant(120, 0.5);
    DensityField df;
    df.grid = Grid1D::linspace(-1.0, 1.0, 11);
    df.n = VectorXd::Constant(11, 1.0);
    df.g = df.h = df.tau = df.j = df.b_kernel = df.temperature = df.n;
    CHECK_THROWS_AS(extract_fields(df, with_centers, 0.01),
                    std::invalid_argument);
  }
}

TEST_CASE("hydro rhs masks sub-floor cells") {
  const ChainParams params = trap(1.0);
  HydroFields u;
  u.grid = Grid1D::linspace(-5.0, 5.0, 101);
  u.f = VectorXd::Constant(101, 1e-13);
  for (int i = 40; i < 60; ++i) u.f(i) = 0.1;
  u.v = VectorXd::Zero(101);
  u.theta = VectorXd::Constant(101, 0.5);
  HydroOptions opts;
  opts.f_floor = 1e-10;
  const HydroRhs rhs = hydro_rhs(u, params, opts);
  CHECK(!rhs.masked_cells.empty());
  for (int cell : rhs.masked_cells) {
    CHECK(rhs.dv(cell) == 0.0);
    CHECK(rhs.dtheta(cell) == 0.0);
  }
}
