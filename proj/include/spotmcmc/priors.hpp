#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spotmcmc/model.hpp"
#include "spotmcmc/rng.hpp"

namespace spotmcmc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Prior families. Moments are optional because several of the defaults
// (e.g. IG(1,1)) have none.

/// N(mean, sd^2); an infinite sd denotes the improper flat prior.
struct NormalDist {
  double mean = 0.0;
  double sd = 1.0;

  [[nodiscard]] bool proper() const { return std::isfinite(sd); }
  [[nodiscard]] double log_density(double x) const {
    if (!proper()) return 0.0;
    const double z = (x - mean) / sd;
    return -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - 0.5 * z * z;
  }
  [[nodiscard]] std::optional<double> mean_value() const { return proper() ? std::optional(mean) : std::nullopt; }
  [[nodiscard]] std::optional<double> sd_value() const { return proper() ? std::optional(sd) : std::nullopt; }
  friend bool operator==(const NormalDist&, const NormalDist&) = default;
};

/// Ga(shape, rate): mean shape/rate.
struct GammaDist {
  double shape = 1.0;
  double rate = 1.0;

  [[nodiscard]] double log_density(double x) const {
    if (!(x > 0.0)) return kNegInf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
  }
  [[nodiscard]] std::optional<double> mean_value() const { return shape / rate; }
  [[nodiscard]] std::optional<double> sd_value() const { return std::sqrt(shape) / rate; }
  friend bool operator==(const GammaDist&, const GammaDist&) = default;
};

/// IG(shape, scale): mean scale/(shape-1) for shape > 1.
struct InverseGammaDist {
  double shape = 1.0;
  double scale = 1.0;

  [[nodiscard]] double log_density(double x) const {
    if (!(x > 0.0)) return kNegInf;
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
  }
  [[nodiscard]] std::optional<double> mean_value() const {
    if (shape <= 1.0) return std::nullopt;
    return scale / (shape - 1.0);
  }
  [[nodiscard]] std::optional<double> sd_value() const {
    if (shape <= 2.0) return std::nullopt;
    return scale / ((shape - 1.0) * std::sqrt(shape - 2.0));
  }
  friend bool operator==(const InverseGammaDist&, const InverseGammaDist&) = default;
};

/// U(lo, hi).
struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;

  [[nodiscard]] bool contains(double x) const { return x > lo && x < hi; }
  [[nodiscard]] double log_density(double x) const { return contains(x) ? -std::log(hi - lo) : kNegInf; }
  [[nodiscard]] std::optional<double> mean_value() const { return 0.5 * (lo + hi); }
  [[nodiscard]] std::optional<double> sd_value() const { return (hi - lo) / std::sqrt(12.0); }
  friend bool operator==(const UniformDist&, const UniformDist&) = default;
};

/// Improper pi(x) proportional to 1{x > 0}.
struct FlatPositive {
  [[nodiscard]] double log_density(double x) const { return x > 0.0 ? 0.0 : kNegInf; }
  [[nodiscard]] std::optional<double> mean_value() const { return std::nullopt; }
  [[nodiscard]] std::optional<double> sd_value() const { return std::nullopt; }
  friend bool operator==(const FlatPositive&, const FlatPositive&) = default;
};

using Sigma2Prior = std::variant<InverseGammaDist, UniformDist>;
using EtaPrior = std::variant<GammaDist, FlatPositive>;

template <typename Variant>
double log_density(const Variant& v, double x) {
  return std::visit([x](const auto& d) { return d.log_density(x); }, v);
}

template <typename Variant>
std::optional<double> mean_of(const Variant& v) {
  return std::visit([](const auto& d) { return d.mean_value(); }, v);
}

template <typename Variant>
std::optional<double> sd_of(const Variant& v) {
  return std::visit([](const auto& d) { return d.sd_value(); }, v);
}

struct ComponentPrior {
  InverseGammaDist beta{1.0, 1.0};
  EtaPrior eta = GammaDist{1.0, 10.0};
  GammaDist delta{1.0, 10.0};
  UniformDist theta{65.0, 195.0};
  friend bool operator==(const ComponentPrior&, const ComponentPrior&) = default;
};

/// Mutually independent priors except for the ordering of same-sign rho's:
/// rho_0 and the first rho of every sign group are U(0,1), and a later
/// member satisfies rho_{i+1} | rho_i ~ rho_i U(0,1).
struct PriorSpec {
  NormalDist mu{1.0, 20.0};
  Sigma2Prior sigma2 = InverseGammaDist{1.5, 0.005};
  std::vector<ComponentPrior> jumps;

  [[nodiscard]] bool proper() const {
    if (!mu.proper()) return false;
    for (const auto& c : jumps) {
      if (std::holds_alternative<FlatPositive>(c.eta)) return false;
    }
    return true;
  }

  void validate(const ModelSpec& spec) const {
    if (jumps.size() != spec.n()) throw std::invalid_argument("PriorSpec: one component prior per jump component required");
    if (!(mu.sd > 0.0)) throw std::invalid_argument("PriorSpec: mu prior sd must be positive");
    if (const auto* ig = std::get_if<InverseGammaDist>(&sigma2); ig && !(ig->shape > 0.0 && ig->scale > 0.0)) {
      throw std::invalid_argument("PriorSpec: sigma2 IG hyperparameters must be positive");
    }
    if (const auto* u = std::get_if<UniformDist>(&sigma2); u && !(u->lo >= 0.0 && u->hi > u->lo)) {
      throw std::invalid_argument("PriorSpec: sigma2 uniform support must be within (0, inf)");
    }
    for (const auto& c : jumps) {
      if (!(c.beta.shape > 0.0 && c.beta.scale > 0.0)) throw std::invalid_argument("PriorSpec: beta IG hyperparameters must be positive");
      if (const auto* g = std::get_if<GammaDist>(&c.eta); g && !(g->shape > 0.0 && g->rate > 0.0)) {
        throw std::invalid_argument("PriorSpec: eta Gamma hyperparameters must be positive");
      }
      if (!(c.delta.shape > 0.0 && c.delta.rate > 0.0)) throw std::invalid_argument("PriorSpec: delta Gamma hyperparameters must be positive");
      if (!(c.theta.hi > c.theta.lo)) throw std::invalid_argument("PriorSpec: theta support is empty");
    }
  }

  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

/// Defaults: mu ~ N(1, 20^2), sigma2 ~ IG(1.5, 0.005), rho ~ U(0,1),
/// eta ~ Ga(1, 10), beta ~ IG(1, 1); periodic components add
/// delta ~ Ga(1, 10) and theta ~ U(k/2, 3k/2), which is U(65, 195) for the
/// half-year period k = 130.
inline PriorSpec default_priors(const ModelSpec& spec) {
  PriorSpec p;
  for (const auto& c : spec.components) {
    ComponentPrior cp;
    cp.theta = {0.5 * c.period, 1.5 * c.period};
    p.jumps.push_back(cp);
  }
  return p;
}

/// Priors of the simulation study: defaults with eta ~ Ga(1, 1/eta_true).
inline PriorSpec simulation_study_priors(const ModelSpec& spec, double eta_true) {
  auto p = default_priors(spec);
  for (auto& c : p.jumps) c.eta = GammaDist{1.0, 1.0 / eta_true};
  return p;
}

/// log pi(rho_1..rho_n) including the ordering constraints.
inline double log_prior_rhos(const Params& params, const ModelSpec& spec) {
  double lp = 0.0;
  for (std::size_t i = 0; i < params.jumps.size(); ++i) {
    const double r = params.jumps[i].rho;
    if (auto prev = spec.ordered_predecessor(i)) {
      const double bound = params.jumps[*prev].rho;
      if (!(r > 0.0 && r < bound)) return kNegInf;
      lp -= std::log(bound);
    } else if (!in_unit_interval(r)) {
      return kNegInf;
    }
  }
  return lp;
}

/// log pi(eta_i, theta_i, delta_i) for one component.
inline double log_prior_intensity(const JumpParams& jp, const JumpComponentSpec& c, const ComponentPrior& cp) {
  double lp = log_density(cp.eta, jp.eta);
  if (c.kind == IntensityKind::periodic) {
    lp += cp.delta.log_density(jp.delta) + cp.theta.log_density(jp.theta);
  }
  return lp;
}

/// Joint log prior density; -inf outside the support.
inline double log_prior(const Params& params, const ModelSpec& spec, const PriorSpec& priors) {
  if (params.jumps.size() != spec.n() || priors.jumps.size() != spec.n()) {
    throw std::invalid_argument("log_prior: params/spec/priors disagree on the number of components");
  }
  if (!std::isfinite(params.mu)) return kNegInf;
  double lp = priors.mu.log_density(params.mu);
  lp += log_density(priors.sigma2, params.sigma2);
  if (!in_unit_interval(params.rho0)) return kNegInf;
  lp += log_prior_rhos(params, spec);
  for (std::size_t i = 0; i < spec.n(); ++i) {
    const auto& jp = params.jumps[i];
    lp += priors.jumps[i].beta.log_density(jp.beta);
    lp += log_prior_intensity(jp, spec.components[i], priors.jumps[i]);
  }
  return std::isnan(lp) ? kNegInf : lp;
}

/// A parameter draw from the (proper) prior; same-sign rho's are drawn as
/// rho_{i+1} = rho_i U.
inline Params sample_prior(const ModelSpec& spec, const PriorSpec& priors, Rng& rng) {
  priors.validate(spec);
  if (!priors.proper()) throw std::invalid_argument("sample_prior: improper prior in spec");
  Params p;
  p.mu = rng.normal(priors.mu.mean, priors.mu.sd);
  if (const auto* ig = std::get_if<InverseGammaDist>(&priors.sigma2)) {
    p.sigma2 = rng.inverse_gamma(ig->shape, ig->scale);
  } else {
    const auto& u = std::get<UniformDist>(priors.sigma2);
    p.sigma2 = rng.uniform(u.lo, u.hi);
  }
  p.rho0 = rng.uniform();
  for (std::size_t i = 0; i < spec.n(); ++i) {
    const auto& cp = priors.jumps[i];
    JumpParams jp;
    const auto prev = spec.ordered_predecessor(i);
    jp.rho = prev ? p.jumps[*prev].rho * rng.uniform() : rng.uniform();
    jp.beta = rng.inverse_gamma(cp.beta.shape, cp.beta.scale);
    const auto& eta = std::get<GammaDist>(cp.eta);
    jp.eta = rng.gamma(eta.shape, eta.rate);
    if (spec.components[i].kind == IntensityKind::periodic) {
      jp.delta = rng.gamma(cp.delta.shape, cp.delta.rate);
      jp.theta = rng.uniform(cp.theta.lo, cp.theta.hi);
    }
    p.jumps.push_back(jp);
  }
  return p;
}

inline Params sample_prior(const ModelSpec& spec, const PriorSpec& priors, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(spec, priors, rng);
}

}  // namespace spotmcmc
