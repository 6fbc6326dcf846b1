#include "chainlab/decoherence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chainlab {

double peaking_ratio(const SpectralMoment& moment) {
  const double mean_sq = std::norm(moment.mean);
  if (mean_sq < 1e-30) return kSaturatedRatio;
  return moment.variance / mean_sq;
}

double smallk_asymptote(const GaussianState& state, double k) {
  const int n = state.n();
  // (Delta X)^2 with X the centre-of-mass sum: all position covariances
  const double var_x = state.cov.topLeftCorner(n, n).sum();
  return k * k * var_x / (static_cast<double>(n) * n);
}

namespace {

SpectralMoment moment_of(const GaussianState& state, const ChainParams& params,
                         DensityKind kind, double k) {
  switch (kind) {
    case DensityKind::number: return spectral_number(state, k);
    case DensityKind::momentum: return spectral_momentum(state, k);
    case DensityKind::energy: return spectral_energy(state, params, k);
  }
  throw std::logic_error("moment_of: unknown density kind");
}

} // namespace

DecoherenceScale decoherence_scale(const GaussianState& state,
                                   const ChainParams& params, double tolerance,
                                   const std::vector<double>& k_grid,
                                   const std::vector<DensityKind>& kinds) {
  if (!(tolerance > 0.0 && tolerance < 1.0))
    throw std::invalid_argument("decoherence_scale: tolerance must be in (0,1)");
  if (k_grid.empty() || k_grid.front() < 0.0 ||
      !std::is_sorted(k_grid.begin(), k_grid.end()))
    throw std::invalid_argument("decoherence_scale: k grid must ascend from 0");
  if (kinds.empty())
    throw std::invalid_argument("decoherence_scale: no density kinds requested");

  DecoherenceScale out;
  for (double k : k_grid) {
    bool all_ok = true;
    for (DensityKind kind : kinds) {
      const double r = peaking_ratio(moment_of(state, params, kind, k));
      if (std::isinf(r) &&
          std::find(out.saturated.begin(), out.saturated.end(), kind) ==
              out.saturated.end())
        out.saturated.push_back(kind);
      if (!(r <= tolerance)) {
        all_ok = false;
        break;
      }
    }
    if (!all_ok) break; // out.k_star holds the last good k
    out.k_star = k;
  }
  out.resolved = out.k_star > 0.0; // 0 means no decoherent scale resolved
  return out;
}

PeakingReport peaking_report(const std::vector<GaussianState>& states,
                             const std::vector<double>& times,
                             const ChainParams& params,
                             const std::vector<double>& k_grid,
                             DensityKind kind, double tolerance) {
  if (states.size() != times.size())
    throw std::invalid_argument("peaking_report: states/times size mismatch");
  const int nt = static_cast<int>(states.size());
  const int nk = static_cast<int>(k_grid.size());
  PeakingReport rep;
  rep.which = kind;
  rep.times = times;
  rep.k_grid = k_grid;
  rep.tolerance = tolerance;
  rep.ratio.resize(nt, nk);
  rep.ratio_smallk.resize(nt, nk);
  rep.k_star.resize(nt);
  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < nk; ++i) {
      rep.ratio(t, i) =
          peaking_ratio(moment_of(states[t], params, kind, k_grid[i]));
      rep.ratio_smallk(t, i) = smallk_asymptote(states[t], k_grid[i]);
    }
    const auto scale = decoherence_scale(states[t], params, tolerance, k_grid,
                                         {kind});
    rep.k_star(t) = scale.k_star;
  }
  return rep;
}

} // namespace chainlab
