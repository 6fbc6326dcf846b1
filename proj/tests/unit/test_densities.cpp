#include "chainlab/densities.hpp"
#include "chainlab/oracles.hpp"
#include "support/test_oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace chainlab;

namespace {

ChainParams plain_params(int n, double mass = 1.0, double k = 1.0,
                         double nu2 = 0.0) {
  ChainParams params;
  params.n = n;
  params.mass = mass;
  params.binding = k;
  params.coupling = nu2;
  if (n > 1 && nu2 == 0.0 && k == 0.0) params.allow_free = true;
  return params;
}

} // namespace

TEST_CASE("spectral number: conserved total at k = 0") {
  const GaussianState state = testing::random_state(17, 3);
  const SpectralMoment m = spectral_number(state, 0.0);
  CHECK(m.mean.real() == 17.0);
  CHECK(m.mean.imag() == 0.0);
  CHECK(m.variance == 0.0);
}

TEST_CASE("spectral number: single-particle closed form") {
  const double s2 = 0.37, k = 1.3;
  GaussianState state;
  state.mean = VectorXd::Zero(2);
  state.cov = MatrixXd::Zero(2, 2);
  state.cov(0, 0) = s2;
  state.cov(1, 1) = 1.0;
  const SpectralMoment m = spectral_number(state, k);
  CHECK(m.mean.real() == doctest::Approx(std::exp(-0.5 * k * k * s2)).epsilon(1e-14));
  CHECK(m.mean.imag() == doctest::Approx(0.0));
  CHECK(m.variance ==
        doctest::Approx(1.0 - std::exp(-k * k * s2)).epsilon(1e-12));
}

TEST_CASE("spectral moments agree with Monte Carlo on a random state") {
  const int n = 50;
  const ChainParams params = plain_params(n, 1.3, 0.8);
  const GaussianState state = testing::random_state(n, 42);
  const long samples = 50'000;
  for (double k : {0.2, 0.9}) {
    for (DensityKind kind :
         {DensityKind::number, DensityKind::momentum, DensityKind::energy}) {
      SpectralMoment m;
      switch (kind) {
        case DensityKind::number: m = spectral_number(state, k); break;
        case DensityKind::momentum: m = spectral_momentum(state, k); break;
        case DensityKind::energy: m = spectral_energy(state, params, k); break;
      }
      const SpectralMcResult mc =
          mc_spectral(state, params, kind, k, samples, 11);
      INFO("kind ", to_string(kind), " k ", k);
      CHECK(mc.mean_re.distance_in_se(m.mean.real()) < 5.0);
      CHECK(mc.mean_im.distance_in_se(m.mean.imag()) < 5.0);
      CHECK(mc.variance.distance_in_se(m.variance) < 5.0);
    }
  }
}

TEST_CASE("spectral momentum: totals at k = 0 and the uncorrelated form") {
  const int n = 6;
  const GaussianState state = testing::random_state(n, 5);
  const SpectralMoment m = spectral_momentum(state, 0.0);
  double p_total = 0.0, var_total = 0.0;
  for (int j = 0; j < n; ++j) {
    p_total += state.mean_p(j);
    for (int i = 0; i < n; ++i) var_total += state.cov_pp(j, i);
  }
  CHECK(m.mean.real() == doctest::Approx(p_total).epsilon(1e-14));
  CHECK(m.variance == doctest::Approx(var_total).epsilon(1e-12));

  // N=1, sigma(p,q) = 0: mean = p0 exp(ik<q> - k^2 s^2/2)
  GaussianState one;
  one.mean.resize(2);
  one.mean << 0.7, 1.9;
  one.cov = MatrixXd::Zero(2, 2);
  one.cov(0, 0) = 0.25;
  one.cov(1, 1) = 2.0;
  const double k = 0.8;
  const SpectralMoment mm = spectral_momentum(one, k);
  const std::complex<double> expected =
      1.9 * std::exp(std::complex<double>(0.0, k * 0.7) - 0.5 * k * k * 0.25);
  CHECK(mm.mean.real() == doctest::Approx(expected.real()).epsilon(1e-13));
  CHECK(mm.mean.imag() == doctest::Approx(expected.imag()).epsilon(1e-13));
}

TEST_CASE("spectral energy: k = 0 consistency with the energy expectation") {
  const int n = 12;
  const ChainParams params = plain_params(n, 0.9, 1.4);
  const GaussianState state = testing::random_state(n, 21);
  const SpectralMoment m = spectral_energy(state, params, 0.0);
  CHECK(m.mean.real() ==
        doctest::Approx(energy_expectation(state, params)).epsilon(1e-12));
  CHECK(m.mean.imag() == 0.0);
}

TEST_CASE("hermiticity: mean at -k is the conjugate of mean at +k") {
  const int n = 9;
  const ChainParams params = plain_params(n, 1.1, 0.6);
  const GaussianState state = testing::random_state(n, 33);
  for (double k : {0.13, 1.7, 6.0}) {
    const auto mn = spectral_number(state, k);
    const auto mn_neg = spectral_number(state, -k);
    CHECK(mn_neg.mean.real() == doctest::Approx(mn.mean.real()).epsilon(1e-14));
    CHECK(mn_neg.mean.imag() == doctest::Approx(-mn.mean.imag()).epsilon(1e-14));
    const auto mg = spectral_momentum(state, k);
    const auto mg_neg = spectral_momentum(state, -k);
    CHECK(mg_neg.mean.real() == doctest::Approx(mg.mean.real()).epsilon(1e-14));
    CHECK(mg_neg.mean.imag() == doctest::Approx(-mg.mean.imag()).epsilon(1e-14));
    const auto mh = spectral_energy(state, params, k);
    const auto mh_neg = spectral_energy(state, params, -k);
    CHECK(mh_neg.mean.real() == doctest::Approx(mh.mean.real()).epsilon(1e-14));
    CHECK(mh_neg.mean.imag() == doctest::Approx(-mh.mean.imag()).epsilon(1e-14));
    CHECK(mn_neg.variance == doctest::Approx(mn.variance).epsilon(1e-12));
  }
}

TEST_CASE("real-space fields: normalization and the single-particle current") {
  const int n = 25;
  const ChainParams params = plain_params(n, 1.0, 1.0);
  GaussianState state = testing::random_state(n, 8, 0.5, 0.8, 2.0);
  const Grid1D grid = Grid1D::linspace(-14.0, 14.0, 561);
  const DensityField field = real_space_fields(state, params, grid, 0.2);
  CHECK(std::abs(field.n.sum() * grid.dx - n) <= 1e-3 * n);

  GaussianState one;
  one.mean.resize(2);
  one.mean << 0.3, 2.4;
  one.cov = MatrixXd::Zero(2, 2);
  one.cov(0, 0) = 0.16;
  one.cov(1, 1) = 0.9;
  const ChainParams p1 = plain_params(1);
  const Grid1D g1 = Grid1D::linspace(-4.0, 4.0, 301);
  const DensityField f1 = real_space_fields(one, p1, g1, 0.1);
  for (int i = 100; i < 200; ++i)
    CHECK(f1.g(i) == doctest::Approx(2.4 * f1.n(i)).epsilon(1e-12));
}

TEST_CASE("real-space fields match Monte Carlo with the same kernel") {
  const int n = 30;
  const ChainParams params = plain_params(n, 1.2, 0.7);
  const GaussianState state = testing::random_state(n, 77, 0.6, 1.0, 1.5);
  const Grid1D grid = Grid1D::linspace(-6.0, 6.0, 41);
  const double window = 0.6;
  const DensityField field = real_space_fields(state, params, grid, window);
  const FieldsMcResult mc = mc_fields(state, params, grid, window, 40'000, 3);
  int far_out = 0;
  for (int i = 0; i < grid.count; ++i) {
    if (mc.n[i].distance_in_se(field.n(i)) >= 5.0) ++far_out;
    if (mc.g[i].distance_in_se(field.g(i)) >= 5.0) ++far_out;
    if (mc.h[i].distance_in_se(field.h(i)) >= 5.0) ++far_out;
    if (mc.tau[i].distance_in_se(field.tau(i)) >= 5.0) ++far_out;
    if (mc.j[i].distance_in_se(field.j(i)) >= 5.0) ++far_out;
  }
  CHECK(far_out == 0);
}

TEST_CASE("smeared single-particle profile converges as the window shrinks") {
  GaussianState one;
  one.mean.resize(2);
  one.mean << -0.2, 0.0;
  one.cov = MatrixXd::Zero(2, 2);
  one.cov(0, 0) = 0.09;
  one.cov(1, 1) = 1.0;
  const ChainParams p1 = plain_params(1);
  const Grid1D grid = Grid1D::linspace(-2.0, 2.0, 1601);
  double prev_err = -1.0;
  for (double window : {0.2, 0.1, 0.05}) {
    const DensityField f = real_space_fields(one, p1, grid, window);
    double err = 0.0;
    for (int i = 0; i < grid.count; ++i) {
      const double x = grid.x(i) + 0.2;
      const double bare =
          std::exp(-0.5 * x * x / 0.09) / std::sqrt(2.0 * M_PI * 0.09);
      err = std::max(err, std::abs(f.n(i) - bare));
    }
    if (prev_err >= 0.0) CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.02);
}

TEST_CASE("temperature field") {
  const int n = 20;
  const ChainParams params = plain_params(n, 1.6, 1.0);
  const double theta0 = 0.8;

  SUBCASE("uniform momentum variance recovers theta0 on the support") {
    VectorXd mq(n), mp = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) mq(j) = -3.0 + 6.0 * j / (n - 1);
    const GaussianState state =
        testing::product_state(n, mq, mp, 0.04, params.mass * theta0);
    const Grid1D grid = Grid1D::linspace(-4.0, 4.0, 201);
    FieldOptions opts;
    opts.n_floor_rel = 0.01;
    const VectorXd temp = temperature_field(state, params, grid, 0.3, opts);
    for (int i = 0; i < grid.count; ++i) {
      if (std::isnan(temp(i))) continue;
      CHECK(temp(i) == doctest::Approx(theta0).epsilon(1e-10));
    }
  }

  SUBCASE("zero momentum spread is a zero-temperature classical state") {
    VectorXd mq(n), mp = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) mq(j) = 0.3 * j;
    const GaussianState state = testing::product_state(n, mq, mp, 0.09, 0.0);
    const Grid1D grid = Grid1D::linspace(-1.0, 7.0, 161);
    const VectorXd temp = temperature_field(state, params, grid, 0.3);
    for (int i = 0; i < grid.count; ++i) {
      if (std::isnan(temp(i))) continue;
      CHECK(temp(i) == doctest::Approx(0.0));
    }
  }

  SUBCASE("position-momentum correlation is not mistaken for heat") {
    // pure squeezed-with-correlation state: conditional variance vanishes
    GaussianState one;
    one.mean = VectorXd::Zero(2);
    one.cov.resize(2, 2);
    const double sq = 0.5, sp = 0.7;
    one.cov << sq, std::sqrt(sq * sp) * (1.0 - 1e-12), std::sqrt(sq * sp) * (1.0 - 1e-12), sp;
    const ChainParams p1 = plain_params(1, 1.0, 1.0);
    const Grid1D grid = Grid1D::linspace(-2.0, 2.0, 101);
    FieldOptions cond, raw;
    raw.raw_momentum_variance = true;
    const VectorXd tc = temperature_field(one, p1, grid, 0.05, cond);
    const VectorXd tr = temperature_field(one, p1, grid, 0.05, raw);
    const int mid = grid.count / 2;
    CHECK(tc(mid) < 0.01 * tr(mid));
    CHECK(tr(mid) == doctest::Approx(sp).epsilon(1e-9));
  }
}

TEST_CASE("correlation profile") {
  SUBCASE("uncorrelated product state") {
    const int n = 16;
    VectorXd mq = VectorXd::Zero(n), mp = VectorXd::Zero(n);
    const GaussianState state = testing::product_state(n, mq, mp, 0.3, 0.5);
    const CorrelationProfile prof = correlation_profile(state);
    CHECK(prof.profile(0) == doctest::Approx(1.0));
    for (int r = 1; r < prof.profile.size(); ++r)
      CHECK(prof.profile(r) == doctest::Approx(0.0));
    CHECK(prof.corr_length <= 1.0);
    CHECK(prof.resolved);
  }

  SUBCASE("degenerate sites are excluded") {
    const int n = 8;
    GaussianState state;
    state.mean = VectorXd::Zero(2 * n);
    state.cov = MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 1; j < n; ++j) state.cov(j, j) = 1.0; // site 0 degenerate
    const CorrelationProfile prof = correlation_profile(state);
    CHECK(prof.excluded_sites == 1);
    CHECK(prof.profile(0) == doctest::Approx(1.0));
  }
}

TEST_CASE("conservation residuals") {
  SUBCASE("stationary decoupled state sits at the discretization floor") {
    const int n = 12;
    ChainParams params = plain_params(n, 1.0, 2.0);
    params.centers.resize(n);
    for (int j = 0; j < n; ++j) params.centers(j) = -2.0 + 4.0 * j / (n - 1);
    // per-site stationary covariance: Var p = m^2 w^2 Var q
    const double w2 = params.binding / params.mass;
    GaussianState state;
    state.mean = VectorXd::Zero(2 * n);
    state.mean.head(n) = params.centers;
    state.cov = MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
      state.cov(j, j) = 0.04;
      state.cov(n + j, n + j) = params.mass * params.mass * w2 * 0.04;
    }
    const Grid1D grid = Grid1D::linspace(-4.0, 4.0, 161);
    std::vector<GaussianState> states(3, state); // exact fixed point
    const ConservationResiduals res =
        conservation_residual(states, params, grid, 0.25, 1e-3);
    CHECK(res.number.l2 <= 1e-10);
    CHECK(res.momentum.relative() <= 1e-8);
    CHECK(res.energy.l2 <= 1e-10);
  }

  SUBCASE("number continuity converges at second order") {
    const int n = 10;
    ChainParams params = plain_params(n, 1.0, 1.5);
    params.centers.resize(n);
    for (int j = 0; j < n; ++j) params.centers(j) = -2.0 + 4.0 * j / (n - 1);
    GaussianState state;
    state.mean = VectorXd::Zero(2 * n);
    state.mean.head(n) = params.centers;
    state.cov = MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
      state.cov(j, j) = 0.04;
      state.cov(n + j, n + j) = 0.3; // mismatched widths keep the fields moving
    }
    const NormalModes modes = normal_modes(params);
    const double t0 = 0.4;

    auto residual_at = [&](double dt, int nx) {
      std::vector<GaussianState> states;
      for (int s = -1; s <= 1; ++s)
        states.push_back(
            evolve(state, exact_propagator(params, modes, t0 + s * dt)));
      const Grid1D grid = Grid1D::linspace(-4.0, 4.0, nx);
      return conservation_residual(states, params, grid, 0.3, dt);
    };

    const ConservationResiduals coarse = residual_at(0.008, 161);
    const ConservationResiduals fine = residual_at(0.004, 321);
    const double order_n = std::log2(coarse.number.l2 / fine.number.l2);
    const double order_h = std::log2(coarse.energy.l2 / fine.energy.l2);
    CHECK(order_n >= 1.9);
    CHECK(order_h >= 1.9);
  }

  SUBCASE("fewer than three samples is an error") {
    const ChainParams params = plain_params(3, 1.0, 1.0);
    const GaussianState state = testing::random_state(3, 1);
    std::vector<GaussianState> states(2, state);
    const Grid1D grid = Grid1D::linspace(-3.0, 3.0, 61);
    CHECK_THROWS_AS(conservation_residual(states, params, grid, 0.3, 1e-3),
                    std::invalid_argument);
  }
}
