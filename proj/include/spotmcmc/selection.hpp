#pragma once

// Stepwise model selection. For n = 1, 2, ... every sign combination with n
// jump components is fitted with constant intensities; if none passes the
// posterior predictive check, every non-empty subset of components is
// switched to the periodic intensity in turn. The first passing
// specification in that order is accepted.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spotmcmc/diagnostics.hpp"
#include "spotmcmc/mcmc.hpp"
#include "spotmcmc/model.hpp"
#include "spotmcmc/priors.hpp"
#include "spotmcmc/rng.hpp"

namespace spotmcmc {

/// All sign combinations with n components, positives first:
/// (n,0), (n-1,1), ..., (0,n).
inline std::vector<ModelSpec> enumerate_specs(std::size_t n) {
  if (n < 1) throw std::invalid_argument("enumerate_specs: n must be >= 1");
  std::vector<ModelSpec> out;
  for (std::size_t pos = n + 1; pos-- > 0;) out.push_back(ModelSpec::with_signs(pos, n - pos));
  return out;
}

/// The 2^n - 1 variants of `spec` with a non-empty subset of components
/// switched to the periodic intensity, by subset size then lexicographically.
inline std::vector<ModelSpec> escalate_intensity(const ModelSpec& spec, double period = 130.0) {
  for (const auto& c : spec.components) {
    if (c.kind != IntensityKind::constant) throw std::invalid_argument("escalate_intensity: spec already has a periodic component");
  }
  const std::size_t n = spec.n();
  if (n == 0 || n > 20) throw std::invalid_argument("escalate_intensity: unsupported component count");
  std::vector<ModelSpec> out;
  for (std::size_t size = 1; size <= n; ++size) {
    // Lexicographic k-subsets of {0..n-1}.
    std::vector<std::size_t> idx(size);
    for (std::size_t k = 0; k < size; ++k) idx[k] = k;
    for (;;) {
      ModelSpec v = spec;
      for (std::size_t k : idx) {
        v.components[k].kind = IntensityKind::periodic;
        v.components[k].period = period;
      }
      out.push_back(std::move(v));
      std::size_t k = size;
      while (k-- > 0 && idx[k] == n - size + k) {
      }
      if (k == static_cast<std::size_t>(-1)) break;
      ++idx[k];
      for (std::size_t r = k + 1; r < size; ++r) idx[r] = idx[r - 1] + 1;
    }
  }
  return out;
}

/// Posterior samples for a data set under one specification.
using Fitter = std::function<std::vector<PosteriorSample>(const PricePath&, const ModelSpec&)>;

struct SelectionPlan {
  double threshold = 0.1;
  std::size_t max_n = 3;
  double period = 130.0;
  SamplerConfig chain = SamplerConfig::quick();
  PpcOptions ppc_options;
  std::function<PriorSpec(const ModelSpec&)> priors = default_priors;
  bool holdout_refit = false;
  double holdout_fraction = 0.3;  ///< trailing share of the data re-fitted when holdout_refit is set
  Fitter fitter;                  ///< empty: run the sampler with `chain` and `priors`

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0 + 1e-12)) throw std::invalid_argument("SelectionPlan: threshold must lie in (0, 1]");
    if (max_n < 1) throw std::invalid_argument("SelectionPlan: max_n must be >= 1");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw std::invalid_argument("SelectionPlan: holdout fraction must lie in (0, 1)");
  }
};

struct SelectionAttempt {
  ModelSpec spec;
  std::optional<PpcReport> report;
  bool accepted = false;
  std::string error;  ///< non-empty if the fit failed
  std::optional<PpcReport> holdout_report;
};

struct SelectionResult {
  std::vector<SelectionAttempt> log;
  std::optional<std::size_t> accepted_index;

  [[nodiscard]] std::optional<ModelSpec> accepted() const {
    if (!accepted_index) return std::nullopt;
    return log[*accepted_index].spec;
  }
};

/// Trailing part of a path, re-based to start at t = 0.
inline PricePath suffix_path(const PricePath& data, double fraction) {
  const std::size_t n = data.size();
  const std::size_t keep = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  if (keep > n) throw std::invalid_argument("suffix_path: not enough observations");
  const std::size_t first = n - keep;
  const double t0 = data.grid[first];
  std::vector<double> times;
  std::vector<double> values;
  for (std::size_t j = first; j < n; ++j) {
    times.push_back(data.grid[j] - t0);
    values.push_back(data.values[j]);
  }
  return PricePath(TimeGrid(std::move(times)), std::move(values));
}

namespace detail {

inline Fitter default_fitter(const SelectionPlan& plan) {
  return [plan](const PricePath& data, const ModelSpec& spec) {
    Target target{data, spec, plan.priors(spec), true};
    SamplerConfig cfg = plan.chain;
    cfg.seed = derive_seed(plan.chain.seed, stream_id(spec.label()));
    return run(target, cfg).samples;
  };
}

}  // namespace detail

inline SelectionResult select(const PricePath& data, const SelectionPlan& plan) {
  plan.validate();
  const Fitter fit = plan.fitter ? plan.fitter : detail::default_fitter(plan);
  SelectionResult result;

  auto attempt = [&](const ModelSpec& spec) {
    SelectionAttempt a{spec, std::nullopt, false, {}, std::nullopt};
    try {
      PpcOptions opt = plan.ppc_options;
      opt.threshold = plan.threshold;
      const auto samples = fit(data, spec);
      a.report = ppc(data, spec, samples, opt);
      a.accepted = a.report->passes(plan.threshold);
      if (a.accepted && plan.holdout_refit) {
        const auto held = suffix_path(data, plan.holdout_fraction);
        a.holdout_report = ppc(held, spec, fit(held, spec), opt);
        a.accepted = a.holdout_report->passes(plan.threshold);
      }
    } catch (const std::exception& e) {
      a.error = e.what();
      a.accepted = false;
    }
    result.log.push_back(std::move(a));
    if (result.log.back().accepted) result.accepted_index = result.log.size() - 1;
    return result.log.back().accepted;
  };

  for (std::size_t n = 1; n <= plan.max_n; ++n) {
    const auto specs = enumerate_specs(n);
    for (const auto& s : specs) {
      if (attempt(s)) return result;
    }
    for (const auto& s : specs) {
      for (const auto& v : escalate_intensity(s, plan.period)) {
        if (attempt(v)) return result;
      }
    }
  }
  return result;
}

}  // namespace spotmcmc
