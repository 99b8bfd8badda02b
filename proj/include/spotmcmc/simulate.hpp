#pragma once

// Exact simulation of the superposed OU model on an observation grid. The
// Gaussian component uses its exact transition law and the jump components
// are built from exactly simulated marked Poisson processes, so no time
// discretisation enters anywhere.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spotmcmc/model.hpp"
#include "spotmcmc/rng.hpp"

namespace spotmcmc {

struct GaussianOuDraw {
  std::vector<double> values;       ///< Y_0(t_0..t_N)
  std::vector<double> innovations;  ///< standard normal draws eps_1..eps_N (index 0 unused, 0)
};

inline GaussianOuDraw sample_gaussian_ou_with_innovations(double mu, double lambda0, double sigma2, double y0,
                                                          const TimeGrid& grid, Rng& rng) {
  if (!(lambda0 > 0.0) || sigma2 < 0.0) throw std::invalid_argument("sample_gaussian_ou: need lambda0 > 0, sigma2 >= 0");
  GaussianOuDraw out{std::vector<double>(grid.size()), std::vector<double>(grid.size(), 0.0)};
  out.values[0] = y0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const auto m = gaussian_ou_moments(out.values[j - 1], grid.delta(j), mu, lambda0, sigma2);
    const double eps = rng.normal();
    out.innovations[j] = eps;
    out.values[j] = m.mean + std::sqrt(m.variance) * eps;
  }
  return out;
}

/// Exact Gaussian OU path on the grid started at y0.
inline std::vector<double> sample_gaussian_ou(double mu, double lambda0, double sigma2, double y0, const TimeGrid& grid,
                                              Rng& rng) {
  return sample_gaussian_ou_with_innovations(mu, lambda0, sigma2, y0, grid, rng).values;
}

inline std::vector<double> sample_gaussian_ou(double mu, double lambda0, double sigma2, double y0, const TimeGrid& grid,
                                              std::uint64_t seed) {
  Rng rng(seed);
  return sample_gaussian_ou(mu, lambda0, sigma2, y0, grid, rng);
}

struct ThinningStats {
  std::size_t candidates = 0;
  std::size_t accepted = 0;
};

/// Marked Poisson process on [0, T] with intensity `in` and Ex(beta) marks.
/// The periodic kind is simulated by thinning a rate-eta process, accepting
/// a candidate at t with probability I(t)/eta.
inline MarkedPointProcess sample_marked_poisson(const Intensity& in, double beta, double horizon, Rng& rng,
                                                ThinningStats* stats = nullptr) {
  if (!(horizon > 0.0)) throw std::invalid_argument("sample_marked_poisson: horizon must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("sample_marked_poisson: beta must be positive");
  std::vector<Jump> jumps;
  if (!(in.eta > 0.0)) return MarkedPointProcess(horizon);
  double t = 0.0;
  for (;;) {
    t += rng.exponential(1.0 / in.eta);
    if (t > horizon) break;
    if (stats) ++stats->candidates;
    if (in.kind == IntensityKind::periodic && rng.uniform() * in.eta >= intensity_eval(in, t)) continue;
    if (stats) ++stats->accepted;
    jumps.push_back({t, rng.exponential(beta)});
  }
  return MarkedPointProcess(horizon, std::move(jumps));
}

inline MarkedPointProcess sample_marked_poisson(const Intensity& in, double beta, double horizon, std::uint64_t seed) {
  Rng rng(seed);
  return sample_marked_poisson(in, beta, horizon, rng);
}

/// Ground truth of one simulated data set.
struct SimulationTruth {
  ModelSpec spec;
  Params params;
  std::vector<MarkedPointProcess> phis;
  std::vector<std::vector<double>> components;  ///< Y_0, Y_1, ..., Y_n
  std::vector<double> innovations;              ///< Gaussian draws behind Y_0
  PricePath observed;                           ///< X with its decomposition attached
};

/// Simulates X = Y_0 + sum w_i Y_i; Y_0 starts at mu, jump components at 0.
/// Each component draws from its own stream derived from `seed`.
inline SimulationTruth sample_model(const ModelSpec& spec, const Params& params, const TimeGrid& grid,
                                    std::uint64_t seed) {
  spec.validate();
  validate_params(params, spec);
  const Rng master(seed);
  SimulationTruth truth{spec, params, {}, {}, {}, {}};

  Rng diffusion_rng = master.stream(0);
  auto y0 = sample_gaussian_ou_with_innovations(params.mu, params.lambda0(), params.sigma2, params.mu, grid, diffusion_rng);
  truth.components.push_back(std::move(y0.values));
  truth.innovations = std::move(y0.innovations);

  std::vector<int> signs{1};
  for (std::size_t i = 0; i < spec.n(); ++i) {
    Rng rng = master.stream(i + 1);
    const auto& jp = params.jumps[i];
    auto phi = grid.horizon() > 0.0 ? sample_marked_poisson(Intensity::of(spec.components[i], jp), jp.beta, grid.horizon(), rng)
                                    : MarkedPointProcess(0.0);
    truth.components.push_back(jump_ou_path(phi, jp.lambda(), grid));
    truth.phis.push_back(std::move(phi));
    signs.push_back(spec.components[i].sign);
  }
  truth.observed = PricePath(grid, superpose(truth.components, signs));
  truth.observed.components = truth.components;
  return truth;
}

}  // namespace spotmcmc
