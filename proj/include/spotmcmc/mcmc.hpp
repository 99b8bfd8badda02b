#pragma once

// Data-augmented Gibbs sampler for the superposed OU model. The latent state
// is one marked point process per jump component; given it, the observation
// likelihood is a product of exact Gaussian OU transitions of
// z = x - sum w_i y_i. Every sweep updates, in order,
//
//   mu (conjugate Normal), sigma2 (conjugate IG), rho_0 and each rho_i
//   (random-walk MH), each intensity (conjugate Gamma or random-walk MH),
//   each beta (conjugate IG), and finally each Phi_i by one of the
//   birth-death, displacement or resize moves chosen uniformly, m times.
//
// Mean-reversion times are carried as rho = exp(-1/lambda).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spotmcmc/model.hpp"
#include "spotmcmc/priors.hpp"
#include "spotmcmc/rng.hpp"

namespace spotmcmc {

// ---------------------------------------------------------------------------
// Configuration

struct ComponentScales {
  double rho = 0.05;
  double eta = 0.02;
  double theta = 5.0;
  double delta = 0.1;
  friend bool operator==(const ComponentScales&, const ComponentScales&) = default;
};

/// Standard deviations of the random-walk proposals.
struct ProposalScales {
  double rho0 = 0.05;
  std::vector<ComponentScales> jumps;
  friend bool operator==(const ProposalScales&, const ProposalScales&) = default;
};

/// Which conditional updates a sweep performs. Everything is on for
/// inference; tests switch blocks off to isolate a kernel.
struct UpdateMask {
  bool mu = true;
  bool sigma2 = true;
  bool rhos = true;
  bool intensity = true;
  bool beta = true;
  bool phi = true;
  friend bool operator==(const UpdateMask&, const UpdateMask&) = default;
};

struct SamplerConfig {
  std::size_t burn_in = 50'000;
  std::size_t iterations = 150'000;  ///< post-burn-in sweeps
  std::size_t thin = 10;
  std::size_t phi_updates = 0;  ///< m; 0 selects 1 for one jump component and 5 otherwise
  double birth_probability = 0.5;
  double resize_constant = 0.1;  ///< c^2 = resize_constant / N_T
  ProposalScales scales;
  double target_low = 0.2;
  double target_high = 0.5;
  std::size_t adapt_window = 100;
  bool adapt = true;
  UpdateMask updates;
  std::uint64_t seed = 1;

  /// Desk-scale profile.
  static SamplerConfig quick() { return {}; }

  /// Long chains for final calibrations.
  static SamplerConfig full() {
    SamplerConfig c;
    c.burn_in = 500'000;
    c.iterations = 1'500'000;
    c.thin = 100;
    return c;
  }

  [[nodiscard]] std::size_t phi_updates_for(std::size_t n) const {
    if (phi_updates > 0) return phi_updates;
    return n <= 1 ? 1 : 5;
  }

  void validate() const {
    if (!(birth_probability > 0.0 && birth_probability < 1.0)) {
      throw std::invalid_argument("SamplerConfig: birth probability must lie in (0, 1)");
    }
    if (thin < 1) throw std::invalid_argument("SamplerConfig: thinning stride must be >= 1");
    if (!(resize_constant >= 0.0)) throw std::invalid_argument("SamplerConfig: resize constant must be >= 0");
    if (!(target_low > 0.0 && target_low < target_high && target_high < 1.0)) {
      throw std::invalid_argument("SamplerConfig: invalid acceptance band");
    }
    if (adapt && adapt_window < 1) throw std::invalid_argument("SamplerConfig: adapt window must be >= 1");
  }
};

/// The posterior being sampled. With `use_likelihood` false the
/// observation likelihood is replaced by a constant, so the chain targets
/// the prior (used to check every kernel for correctness).
struct Target {
  PricePath data;
  ModelSpec spec;
  PriorSpec priors;
  bool use_likelihood = true;

  void validate() const {
    spec.validate();
    priors.validate(spec);
    for (double v : data.values) {
      if (!std::isfinite(v)) throw std::invalid_argument("Target: non-finite observation");
    }
  }
};

// ---------------------------------------------------------------------------
// Acceptance bookkeeping

struct MoveStats {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;

  void record(bool ok) {
    ++proposed;
    if (ok) ++accepted;
  }
  [[nodiscard]] double rate() const {
    return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
  MoveStats operator-(const MoveStats& o) const { return {proposed - o.proposed, accepted - o.accepted}; }
  friend bool operator==(const MoveStats&, const MoveStats&) = default;
};

struct ComponentStats {
  MoveStats rho, eta, theta, delta;
  MoveStats birth, death, displacement, resize;
  friend bool operator==(const ComponentStats&, const ComponentStats&) = default;
};

struct AcceptanceStats {
  MoveStats rho0;
  std::vector<ComponentStats> jumps;

  explicit AcceptanceStats(std::size_t n = 0) : jumps(n) {}
  friend bool operator==(const AcceptanceStats&, const AcceptanceStats&) = default;
};

// ---------------------------------------------------------------------------
// Chain state

/// Parameters, latent processes and the caches derived from them: one path
/// per jump component at the grid times, the diffusion part z and the OU
/// transition coefficients for the current rho_0.
struct ChainState {
  Params params;
  std::vector<MarkedPointProcess> phis;
  std::vector<std::vector<double>> paths;
  std::vector<double> z;
  OuTransitions transitions;
  std::uint64_t iteration = 0;

  ChainState() = default;

  ChainState(const Target& target, Params p, std::vector<MarkedPointProcess> latent = {})
      : params(std::move(p)), phis(std::move(latent)) {
    validate_params(params, target.spec);
    const double horizon = target.data.grid.horizon();
    if (phis.empty()) phis.assign(target.spec.n(), MarkedPointProcess(horizon));
    if (phis.size() != target.spec.n()) throw std::invalid_argument("ChainState: one latent process per component required");
    for (const auto& phi : phis) {
      if (phi.horizon() != horizon) throw std::invalid_argument("ChainState: latent process horizon differs from the data");
    }
    refresh(target);
  }

  /// Recomputes every cache from params and phis.
  void refresh(const Target& target) {
    transitions.reset(target.data.grid, params.rho0);
    paths = jump_paths(phis, params, target.data.grid);
    z = remove_jumps(target.data.values, paths, target.spec);
  }

  [[nodiscard]] double log_likelihood(const Target& target) const {
    if (!target.use_likelihood) return 0.0;
    return ou_log_likelihood(z, params.mu, params.sigma2, transitions);
  }

  /// Largest absolute difference between the caches and a recomputation.
  [[nodiscard]] double max_cache_error(const Target& target) const {
    const auto fresh_paths = jump_paths(phis, params, target.data.grid);
    const auto fresh_z = remove_jumps(target.data.values, fresh_paths, target.spec);
    double err = 0.0;
    for (std::size_t i = 0; i < fresh_paths.size(); ++i) {
      for (std::size_t j = 0; j < fresh_paths[i].size(); ++j) err = std::max(err, std::abs(fresh_paths[i][j] - paths[i][j]));
    }
    for (std::size_t j = 0; j < z.size(); ++j) err = std::max(err, std::abs(fresh_z[j] - z[j]));
    return err;
  }
};

/// Chain initialisation used by the case studies: for one jump component
/// (mu, lambda0, sigma, lambda1, eta, beta) = (1, 5, 0.1, 2, 0.1, 0.5); for
/// more, (1, 5, 0.2) with lambda_i = 5, 1, 0.2, ..., eta_i = 0.001 and
/// beta_i = 0.5. Periodic components start at theta = k, delta = 1.
inline Params default_initial_params(const ModelSpec& spec) {
  Params p;
  p.mu = 1.0;
  p.rho0 = lambda_to_rho(5.0);
  const bool single = spec.n() <= 1;
  p.sigma2 = single ? 0.01 : 0.04;
  double lambda = single ? 2.0 : 5.0;
  for (const auto& c : spec.components) {
    JumpParams jp;
    jp.rho = lambda_to_rho(lambda);
    jp.eta = single ? 0.1 : 0.001;
    jp.beta = 0.5;
    if (c.kind == IntensityKind::periodic) {
      jp.theta = c.period;
      jp.delta = 1.0;
    }
    p.jumps.push_back(jp);
    lambda /= 5.0;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Closed-form conditionals

/// Full conditional of mu: Normal, returned as (mean, sd).
inline NormalDist mu_conditional(const ChainState& s, const Target& t) {
  const auto& prior = t.priors.mu;
  const double prior_prec = prior.proper() ? 1.0 / (prior.sd * prior.sd) : 0.0;
  double prec = prior_prec;
  double num = prior.proper() ? prior.mean * prior_prec : 0.0;
  if (t.use_likelihood) {
    const auto& tr = s.transitions;
    for (std::size_t i = 1; i < s.z.size(); ++i) {
      const double d = tr.decay[i];
      const double w = (1.0 - d) / (s.params.sigma2 * tr.unit_var[i]);
      prec += (1.0 - d) * w;
      num += w * (s.z[i] - s.z[i - 1] * d);
    }
  }
  if (!(prec > 0.0)) throw std::domain_error("mu_conditional: improper posterior (flat prior, no data)");
  return {num / prec, 1.0 / std::sqrt(prec)};
}

/// Full conditional of sigma2 under an IG prior:
/// IG(N/2 + a, (1/lambda0) sum s_i / (1 - e^{-2 Delta_i/lambda0}) + b).
inline InverseGammaDist sigma2_conditional(const ChainState& s, const Target& t) {
  const auto* ig = std::get_if<InverseGammaDist>(&t.priors.sigma2);
  if (!ig) throw std::logic_error("sigma2_conditional: prior is not inverse gamma");
  if (!t.use_likelihood) return *ig;
  const double n = static_cast<double>(s.z.size() - 1);
  return {0.5 * n + ig->shape, 0.5 * weighted_sq_residuals(s.z, s.params.mu, s.transitions) + ig->scale};
}

/// Conditional of a constant intensity: Ga(a + N_T, b + T); the flat prior
/// is the limit a = 1, b = 0.
inline GammaDist eta_conditional(const MarkedPointProcess& phi, const EtaPrior& prior) {
  const double count = static_cast<double>(phi.size());
  if (const auto* g = std::get_if<GammaDist>(&prior)) return {g->shape + count, g->rate + phi.horizon()};
  return {1.0 + count, phi.horizon()};
}

/// Conditional of the mean jump size: IG(a + N_T, b + sum xi).
inline InverseGammaDist beta_conditional(const MarkedPointProcess& phi, const InverseGammaDist& prior) {
  return {prior.shape + static_cast<double>(phi.size()), prior.scale + phi.total_size()};
}

// ---------------------------------------------------------------------------
// Gibbs steps

inline void update_mu(ChainState& s, const Target& t, Rng& rng) {
  const auto post = mu_conditional(s, t);
  s.params.mu = rng.normal(post.mean, post.sd);
}

inline void update_sigma2(ChainState& s, const Target& t, Rng& rng) {
  if (std::holds_alternative<InverseGammaDist>(t.priors.sigma2)) {
    const auto post = sigma2_conditional(s, t);
    s.params.sigma2 = rng.inverse_gamma(post.shape, post.scale);
    return;
  }
  // Uniform prior: the conditional is IG(N/2 - 1, S) truncated to the
  // prior support; draw by rejection.
  const auto& u = std::get<UniformDist>(t.priors.sigma2);
  if (!t.use_likelihood) {
    s.params.sigma2 = rng.uniform(u.lo, u.hi);
    return;
  }
  const double n = static_cast<double>(s.z.size() - 1);
  const double shape = 0.5 * n - 1.0;
  const double scale = 0.5 * weighted_sq_residuals(s.z, s.params.mu, s.transitions);
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::domain_error("update_sigma2: too few observations for a uniform prior");
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const double draw = rng.inverse_gamma(shape, scale);
    if (u.contains(draw)) {
      s.params.sigma2 = draw;
      return;
    }
  }
  throw std::runtime_error("update_sigma2: truncated draw failed; prior support far from the data");
}

inline bool accept_log(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) return false;
  return log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
}

/// Random-walk MH on rho_0, then on each rho_i in turn.
inline void update_rhos(ChainState& s, const Target& t, const ProposalScales& scales, Rng& rng, AcceptanceStats& stats) {
  const auto& grid = t.data.grid;
  // rho_0: only the transition coefficients change.
  {
    const double proposal = s.params.rho0 + scales.rho0 * rng.normal();
    bool ok = false;
    if (in_unit_interval(proposal)) {
      if (!t.use_likelihood) {
        ok = true;
      } else {
        OuTransitions tr(grid, proposal);
        const double ll_new = ou_log_likelihood(s.z, s.params.mu, s.params.sigma2, tr);
        const double ll_old = ou_log_likelihood(s.z, s.params.mu, s.params.sigma2, s.transitions);
        ok = accept_log(ll_new - ll_old, rng);
        if (ok) s.transitions = std::move(tr);
      }
      if (ok) {
        s.params.rho0 = proposal;
        if (!t.use_likelihood) s.transitions.reset(grid, proposal);
      }
    }
    stats.rho0.record(ok);
  }

  for (std::size_t i = 0; i < t.spec.n(); ++i) {
    auto& jp = s.params.jumps[i];
    const double old_rho = jp.rho;
    const double lp_old = log_prior_rhos(s.params, t.spec);
    jp.rho = old_rho + scales.jumps[i].rho * rng.normal();
    const double lp_new = log_prior_rhos(s.params, t.spec);
    bool ok = false;
    if (lp_new != kNegInf) {
      auto path = jump_ou_path(s.phis[i], jp.lambda(), grid);
      std::vector<double> z_new;
      double log_ratio = lp_new - lp_old;
      if (t.use_likelihood) {
        const double w = t.spec.components[i].sign;
        z_new = s.z;
        for (std::size_t j = 0; j < z_new.size(); ++j) z_new[j] += w * (s.paths[i][j] - path[j]);
        log_ratio += ou_log_likelihood(z_new, s.params.mu, s.params.sigma2, s.transitions) -
                     ou_log_likelihood(s.z, s.params.mu, s.params.sigma2, s.transitions);
      }
      ok = accept_log(log_ratio, rng);
      if (ok) {
        s.paths[i] = std::move(path);
        if (t.use_likelihood) {
          s.z = std::move(z_new);
        } else {
          s.z = remove_jumps(t.data.values, s.paths, t.spec);
        }
      }
    }
    if (!ok) jp.rho = old_rho;
    stats.jumps[i].rho.record(ok);
  }
}

/// log L(theta; Phi) - T: sum_j log I(theta, tau_j) - int_0^T I dt.
inline double log_intensity_density(const Intensity& in, const MarkedPointProcess& phi) {
  double lp = 0.0;
  for (const auto& j : phi) {
    const double rate = intensity_eval(in, j.time);
    if (!(rate > 0.0)) return kNegInf;
    lp += std::log(rate);
  }
  return lp - intensity_integral(in, 0.0, phi.horizon());
}

/// Step 4 for component i: conjugate for the constant kind, otherwise
/// single-coordinate random-walk MH on eta, theta and delta. Proposals
/// outside the prior support are rejected.
inline void update_intensity(ChainState& s, const Target& t, std::size_t i, const ComponentScales& scale, Rng& rng,
                             ComponentStats& stats) {
  const auto& c = t.spec.components[i];
  const auto& cp = t.priors.jumps[i];
  auto& jp = s.params.jumps[i];
  const auto& phi = s.phis[i];
  if (c.kind == IntensityKind::constant) {
    const auto post = eta_conditional(phi, cp.eta);
    jp.eta = rng.gamma(post.shape, post.rate);
    return;
  }
  auto target_log = [&](const JumpParams& p) {
    const double lp = log_prior_intensity(p, c, cp);
    if (lp == kNegInf) return kNegInf;
    return lp + log_intensity_density(Intensity::of(c, p), phi);
  };
  double current = target_log(jp);
  auto mh = [&](double JumpParams::*field, double sd, MoveStats& ms) {
    JumpParams proposal = jp;
    proposal.*field += sd * rng.normal();
    bool ok = false;
    double value = kNegInf;
    if (proposal.eta > 0.0 && proposal.delta > 0.0) {
      value = target_log(proposal);
      ok = value != kNegInf && accept_log(value - current, rng);
    }
    if (ok) {
      jp = proposal;
      current = value;
    }
    ms.record(ok);
  };
  mh(&JumpParams::eta, scale.eta, stats.eta);
  mh(&JumpParams::theta, scale.theta, stats.theta);
  mh(&JumpParams::delta, scale.delta, stats.delta);
}

inline void update_beta(ChainState& s, const Target& t, std::size_t i, Rng& rng) {
  const auto post = beta_conditional(s.phis[i], t.priors.jumps[i].beta);
  s.params.jumps[i].beta = rng.inverse_gamma(post.shape, post.scale);
}

// ---------------------------------------------------------------------------
// Latent process moves

/// Jump contributions below this are dropped when updating caches locally.
inline constexpr double kPathTruncation = 1e-15;

/// Sparse change of one component path on [lo, hi).
class PathDelta {
 public:
  explicit PathDelta(std::size_t n = 0) : dy_(n, 0.0) {}

  void reset(std::size_t n) {
    if (dy_.size() != n) dy_.assign(n, 0.0);
    clear();
  }
  void clear() {
    for (std::size_t j = lo_; j < hi_; ++j) dy_[j] = 0.0;
    lo_ = std::numeric_limits<std::size_t>::max();
    hi_ = 0;
  }

  /// Adds factor * xi exp(-(t_j - tau)/lambda) for t_j >= tau.
  void add_jump(const TimeGrid& grid, double tau, double xi, double rate, double factor) {
    const std::size_t start = grid.first_at_or_after(tau);
    const auto step = grid.uniform_step();
    const double step_decay = step ? std::exp(-rate * *step) : 0.0;
    std::size_t j = start;
    double c = 0.0;
    for (; j < grid.size(); ++j) {
      c = (j == start || !step) ? xi * std::exp(-rate * (grid[j] - tau)) : c * step_decay;
      if (c < kPathTruncation) break;
      dy_[j] += factor * c;
    }
    if (j > start) {
      lo_ = std::min(lo_, start);
      hi_ = std::max(hi_, j);
    }
  }

  [[nodiscard]] bool empty() const noexcept { return hi_ <= lo_; }
  [[nodiscard]] std::size_t lo() const noexcept { return lo_; }
  [[nodiscard]] std::size_t hi() const noexcept { return hi_; }
  [[nodiscard]] double operator[](std::size_t j) const noexcept { return dy_[j]; }

 private:
  std::vector<double> dy_;
  std::size_t lo_ = std::numeric_limits<std::size_t>::max();
  std::size_t hi_ = 0;
};

/// Change of the log-likelihood when path i changes by `d`.
inline double delta_log_likelihood(const ChainState& s, const Target& t, std::size_t i, const PathDelta& d) {
  if (!t.use_likelihood || d.empty()) return 0.0;
  const double w = t.spec.components[i].sign;
  const auto& tr = s.transitions;
  const double mu = s.params.mu;
  const std::size_t first = std::max<std::size_t>(d.lo(), 1);
  const std::size_t last = std::min(d.hi() + 1, s.z.size());
  double acc = 0.0;
  for (std::size_t j = first; j < last; ++j) {
    const double dz = j < d.hi() ? -w * d[j] : 0.0;
    const double dz_prev = -w * d[j - 1];
    const double r = s.z[j] - mu - (s.z[j - 1] - mu) * tr.decay[j];
    const double rn = r + dz - tr.decay[j] * dz_prev;
    acc += (rn * rn - r * r) / tr.unit_var[j];
  }
  return -0.5 * acc / s.params.sigma2;
}

inline void apply_path_delta(ChainState& s, const Target& t, std::size_t i, const PathDelta& d) {
  const double w = t.spec.components[i].sign;
  for (std::size_t j = d.lo(); j < d.hi(); ++j) {
    s.paths[i][j] += d[j];
    s.z[j] -= w * d[j];
  }
}

/// log r for adding (tau, xi) to a configuration of `count` points:
/// likelihood ratio x (1-p)/p x T/(count+1) x I(tau).
inline double birth_log_ratio(double delta_loglik, double p, double horizon, std::size_t count, double rate_at_tau) {
  return delta_loglik + std::log((1.0 - p) / p) + std::log(horizon) - std::log(static_cast<double>(count) + 1.0) +
         std::log(rate_at_tau);
}

/// log acceptance ratio of moving (tau_j, xi_j) to (tau, xi) with
/// xi = xi_j exp(-(tau - tau_j)/lambda): likelihood ratio, intensity ratio,
/// Ex(beta) mark-density ratio (Lebesgue reference) and the Jacobian
/// exp(-(tau - tau_j)/lambda) of the deterministic re-sizing.
inline double displacement_log_ratio(double delta_loglik, double rate_new, double rate_old, double xi_new, double xi_old,
                                     double beta, double tau_new, double tau_old, double lambda) {
  return delta_loglik + std::log(rate_new) - std::log(rate_old) - (xi_new - xi_old) / beta - (tau_new - tau_old) / lambda;
}

/// log acceptance ratio of the multiplicative resize xi'_j = xi_j phi_j with
/// log phi_j ~ N(0, c^2): exp(-beta^{-1} sum(xi' - xi)) prod(xi'/xi). The
/// factor prod(xi'/xi) is the Hastings correction of the log-normal
/// proposal; the mark density is Ex(beta) on Lebesgue measure.
inline double resize_log_ratio(double delta_loglik, std::span<const double> old_sizes, std::span<const double> new_sizes,
                               double beta) {
  double lr = delta_loglik;
  for (std::size_t j = 0; j < old_sizes.size(); ++j) {
    lr += -(new_sizes[j] - old_sizes[j]) / beta + std::log(new_sizes[j] / old_sizes[j]);
  }
  return lr;
}

enum class PhiMove { birth_death, displacement, resize };

inline bool phi_birth_death(ChainState& s, const Target& t, std::size_t i, double p, Rng& rng, ComponentStats& stats,
                            PathDelta& scratch) {
  const auto& grid = t.data.grid;
  const double horizon = grid.horizon();
  auto& phi = s.phis[i];
  const auto& jp = s.params.jumps[i];
  const Intensity in = Intensity::of(t.spec.components[i], jp);
  const double rate = 1.0 / jp.lambda();
  scratch.reset(grid.size());

  if (rng.uniform() < p) {
    const double tau = rng.uniform(0.0, horizon);
    const double xi = rng.exponential(jp.beta);
    const double at_tau = intensity_eval(in, tau);
    bool ok = false;
    if (at_tau > 0.0 && xi > 0.0) {
      scratch.add_jump(grid, tau, xi, rate, +1.0);
      const double lr = birth_log_ratio(delta_log_likelihood(s, t, i, scratch), p, horizon, phi.size(), at_tau);
      ok = accept_log(lr, rng);
      if (ok) {
        phi.insert({tau, xi});
        apply_path_delta(s, t, i, scratch);
      }
    }
    stats.birth.record(ok);
    return ok;
  }

  if (phi.empty()) {
    stats.death.record(false);
    return false;
  }
  const std::size_t k = rng.index(phi.size());
  const Jump victim = phi[k];
  scratch.add_jump(grid, victim.time, victim.size, rate, -1.0);
  const double at_tau = intensity_eval(in, victim.time);
  const double lr = -birth_log_ratio(-delta_log_likelihood(s, t, i, scratch), p, horizon, phi.size() - 1, at_tau);
  const bool ok = accept_log(lr, rng);
  if (ok) {
    phi.erase(k);
    apply_path_delta(s, t, i, scratch);
  }
  stats.death.record(ok);
  return ok;
}

inline bool phi_displacement(ChainState& s, const Target& t, std::size_t i, Rng& rng, ComponentStats& stats,
                             PathDelta& scratch) {
  auto& phi = s.phis[i];
  if (phi.empty()) {
    stats.displacement.record(false);
    return false;
  }
  const auto& grid = t.data.grid;
  const auto& jp = s.params.jumps[i];
  const Intensity in = Intensity::of(t.spec.components[i], jp);
  const double lambda = jp.lambda();
  const std::size_t k = rng.index(phi.size());
  const Jump old = phi[k];
  const double lo = k > 0 ? phi[k - 1].time : 0.0;
  const double hi = k + 1 < phi.size() ? phi[k + 1].time : grid.horizon();
  const double tau = rng.uniform(lo, hi);
  const double xi = old.size * std::exp(-(tau - old.time) / lambda);
  const double rate_new = intensity_eval(in, tau);
  bool ok = false;
  if (xi > 0.0 && std::isfinite(xi) && rate_new > 0.0) {
    scratch.reset(grid.size());
    scratch.add_jump(grid, old.time, old.size, 1.0 / lambda, -1.0);
    scratch.add_jump(grid, tau, xi, 1.0 / lambda, +1.0);
    const double lr = displacement_log_ratio(delta_log_likelihood(s, t, i, scratch), rate_new,
                                             intensity_eval(in, old.time), xi, old.size, jp.beta, tau, old.time, lambda);
    ok = accept_log(lr, rng);
    if (ok) {
      phi.replace(k, {tau, xi});
      apply_path_delta(s, t, i, scratch);
    }
  }
  stats.displacement.record(ok);
  return ok;
}

inline bool phi_resize(ChainState& s, const Target& t, std::size_t i, double resize_constant, Rng& rng,
                       ComponentStats& stats) {
  auto& phi = s.phis[i];
  if (phi.empty()) {
    stats.resize.record(false);
    return false;
  }
  const auto& jp = s.params.jumps[i];
  const double c = std::sqrt(resize_constant / static_cast<double>(phi.size()));
  std::vector<double> old_sizes(phi.size());
  std::vector<double> new_sizes(phi.size());
  std::vector<Jump> proposal(phi.begin(), phi.end());
  bool valid = true;
  for (std::size_t j = 0; j < phi.size(); ++j) {
    old_sizes[j] = phi[j].size;
    new_sizes[j] = phi[j].size * std::exp(c * rng.normal());
    valid = valid && new_sizes[j] > 0.0 && std::isfinite(new_sizes[j]);
    proposal[j].size = new_sizes[j];
  }
  bool ok = false;
  if (valid) {
    MarkedPointProcess candidate(phi.horizon(), std::move(proposal));
    auto path = jump_ou_path(candidate, jp.lambda(), t.data.grid);
    double dll = 0.0;
    std::vector<double> z_new;
    if (t.use_likelihood) {
      const double w = t.spec.components[i].sign;
      z_new = s.z;
      for (std::size_t j = 0; j < z_new.size(); ++j) z_new[j] += w * (s.paths[i][j] - path[j]);
      dll = ou_log_likelihood(z_new, s.params.mu, s.params.sigma2, s.transitions) -
            ou_log_likelihood(s.z, s.params.mu, s.params.sigma2, s.transitions);
    }
    ok = accept_log(resize_log_ratio(dll, old_sizes, new_sizes, jp.beta), rng);
    if (ok) {
      phi = std::move(candidate);
      s.paths[i] = std::move(path);
      if (t.use_likelihood) {
        s.z = std::move(z_new);
      } else {
        s.z = remove_jumps(t.data.values, s.paths, t.spec);
      }
    }
  }
  stats.resize.record(ok);
  return ok;
}

/// One Phi_i update: a move chosen uniformly among the three.
inline void update_phi(ChainState& s, const Target& t, std::size_t i, const SamplerConfig& cfg, Rng& rng,
                       ComponentStats& stats, PathDelta& scratch) {
  switch (static_cast<PhiMove>(rng.index(3))) {
    case PhiMove::birth_death:
      phi_birth_death(s, t, i, cfg.birth_probability, rng, stats, scratch);
      break;
    case PhiMove::displacement:
      phi_displacement(s, t, i, rng, stats, scratch);
      break;
    case PhiMove::resize:
      phi_resize(s, t, i, cfg.resize_constant, rng, stats);
      break;
  }
}

// ---------------------------------------------------------------------------
// Sweeps and chains

/// Fills missing per-component scales with defaults.
inline ProposalScales complete_scales(ProposalScales scales, std::size_t n) {
  scales.jumps.resize(n);
  return scales;
}

/// One full Gibbs cycle.
inline void sweep(ChainState& s, const Target& t, const SamplerConfig& cfg, const ProposalScales& scales, Rng& rng,
                  AcceptanceStats& stats, PathDelta& scratch) {
  const auto& mask = cfg.updates;
  const std::size_t n = t.spec.n();
  s.refresh(t);
  if (mask.mu) update_mu(s, t, rng);
  if (mask.sigma2) update_sigma2(s, t, rng);
  if (mask.rhos) update_rhos(s, t, scales, rng, stats);
  if (mask.intensity) {
    for (std::size_t i = 0; i < n; ++i) update_intensity(s, t, i, scales.jumps[i], rng, stats.jumps[i]);
  }
  if (mask.beta) {
    for (std::size_t i = 0; i < n; ++i) update_beta(s, t, i, rng);
  }
  if (mask.phi) {
    const std::size_t m = cfg.phi_updates_for(n);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t i = 0; i < n; ++i) update_phi(s, t, i, cfg, rng, stats.jumps[i], scratch);
    }
  }
  ++s.iteration;
}

inline void sweep(ChainState& s, const Target& t, const SamplerConfig& cfg, Rng& rng, AcceptanceStats& stats) {
  PathDelta scratch(t.data.size());
  sweep(s, t, cfg, complete_scales(cfg.scales, t.spec.n()), rng, stats, scratch);
}

/// One retained (thinned) chain state.
struct PosteriorSample {
  std::uint64_t iteration = 0;
  Params params;
  std::vector<MarkedPointProcess> phis;
  double log_likelihood = 0.0;
  friend bool operator==(const PosteriorSample&, const PosteriorSample&) = default;
};

struct ChainOutput {
  std::vector<PosteriorSample> samples;
  AcceptanceStats burn_in_acceptance;
  AcceptanceStats acceptance;  ///< post-burn-in
  ProposalScales final_scales;
};

namespace detail {

inline void adapt_scale(double& scale, const MoveStats& window, const SamplerConfig& cfg) {
  if (window.proposed < 10) return;
  const double rate = window.rate();
  if (rate < cfg.target_low) scale *= 0.7;
  if (rate > cfg.target_high) scale *= 1.4;
}

inline void adapt(ProposalScales& scales, const AcceptanceStats& now, const AcceptanceStats& before,
                  const SamplerConfig& cfg) {
  adapt_scale(scales.rho0, now.rho0 - before.rho0, cfg);
  for (std::size_t i = 0; i < scales.jumps.size(); ++i) {
    const auto& a = now.jumps[i];
    const auto& b = before.jumps[i];
    adapt_scale(scales.jumps[i].rho, a.rho - b.rho, cfg);
    adapt_scale(scales.jumps[i].eta, a.eta - b.eta, cfg);
    adapt_scale(scales.jumps[i].theta, a.theta - b.theta, cfg);
    adapt_scale(scales.jumps[i].delta, a.delta - b.delta, cfg);
  }
}

}  // namespace detail

/// Runs burn-in (with proposal-scale adaptation toward the acceptance band)
/// followed by the retained iterations, keeping every `thin`-th state.
inline ChainOutput run(const Target& target, const SamplerConfig& cfg, std::optional<Params> initial = std::nullopt,
                       std::vector<MarkedPointProcess> initial_phis = {}) {
  cfg.validate();
  target.validate();
  const std::size_t n = target.spec.n();
  ChainState state(target, initial ? *initial : default_initial_params(target.spec), std::move(initial_phis));
  if (!std::isfinite(state.log_likelihood(target))) throw std::runtime_error("run: non-finite initial log-likelihood");

  Rng rng(cfg.seed);
  PathDelta scratch(target.data.size());
  ChainOutput out;
  out.final_scales = complete_scales(cfg.scales, n);
  out.burn_in_acceptance = AcceptanceStats(n);
  out.acceptance = AcceptanceStats(n);

  AcceptanceStats window_start(n);
  for (std::size_t it = 0; it < cfg.burn_in; ++it) {
    sweep(state, target, cfg, out.final_scales, rng, out.burn_in_acceptance, scratch);
    if (cfg.adapt && (it + 1) % cfg.adapt_window == 0) {
      detail::adapt(out.final_scales, out.burn_in_acceptance, window_start, cfg);
      window_start = out.burn_in_acceptance;
    }
  }

  out.samples.reserve(cfg.iterations / cfg.thin);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    sweep(state, target, cfg, out.final_scales, rng, out.acceptance, scratch);
    if ((it + 1) % cfg.thin == 0) {
      const double ll = state.log_likelihood(target);
      if (!std::isfinite(ll)) throw std::runtime_error("run: non-finite log-likelihood at iteration " + std::to_string(state.iteration));
      out.samples.push_back({state.iteration, state.params, state.phis, ll});
    }
  }
  return out;
}

}  // namespace spotmcmc
