#pragma once

// Posterior predictive checks and chain diagnostics.
//
// For each posterior sample k the check computes KS p-values of
//   (a) the standardised Gaussian OU residuals against N(0,1),
//   (b) the marks of each Phi_i against Ex(beta_i),
//   (c) the inter-arrival times of each Phi_i against Ex(1/eta_i), or, for a
//       periodic intensity, against inter-arrivals of a freshly simulated
//       process (two-sample test).
// The posterior predictive p-value of a check is the mean over samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "spotmcmc/mcmc.hpp"
#include "spotmcmc/model.hpp"
#include "spotmcmc/rng.hpp"
#include "spotmcmc/simulate.hpp"

namespace spotmcmc {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Residuals

/// eps_j = (z_j - mu - (z_{j-1} - mu) e^{-Delta_j/lambda0}) / Sigma_j for
/// j = 1..N.
inline std::vector<double> residuals(const PricePath& data, const ModelSpec& spec, const Params& params,
                                     const std::vector<MarkedPointProcess>& phis) {
  const auto z = remove_jumps(data.values, jump_paths(phis, params, data.grid), spec);
  const OuTransitions tr(data.grid, params.rho0);
  std::vector<double> eps(z.size() - 1);
  for (std::size_t j = 1; j < z.size(); ++j) {
    const double r = z[j] - params.mu - (z[j - 1] - params.mu) * tr.decay[j];
    eps[j - 1] = r / std::sqrt(params.sigma2 * tr.unit_var[j]);
  }
  return eps;
}

inline std::vector<double> residuals(const PricePath& data, const ModelSpec& spec, const PosteriorSample& s) {
  return residuals(data, spec, s.params, s.phis);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov tests

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// P(K > x) for the Kolmogorov distribution.
inline double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // Small-x series: P(K <= x) = sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2)).
    const double w = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double sum = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double term = std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * w);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Asymptotic p-value with the finite-n scaling (sqrt n + 0.12 + 0.11/sqrt n) D.
inline double ks_p_value(double statistic, double effective_n) {
  const double rn = std::sqrt(effective_n);
  return kolmogorov_survival((rn + 0.12 + 0.11 / rn) * statistic);
}

/// One-sample test of `data` against a continuous cdf.
inline KsResult ks_one_sample(std::vector<double> data, const std::function<double(double)>& cdf) {
  if (data.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(data.begin(), data.end());
  const double n = static_cast<double>(data.size());
  double d = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double f = cdf(data[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return {d, ks_p_value(d, n * m / (n + m))};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline std::function<double(double)> exponential_cdf(double mean) {
  return [mean](double x) { return x > 0.0 ? -std::expm1(-x / mean) : 0.0; };
}

/// tau_{j+1} - tau_j over consecutive points.
inline std::vector<double> inter_arrivals(const MarkedPointProcess& phi) {
  std::vector<double> out;
  for (std::size_t j = 1; j < phi.size(); ++j) out.push_back(phi[j].time - phi[j - 1].time);
  return out;
}

// ---------------------------------------------------------------------------
// Posterior predictive check

/// Raw p-values per sample (NaN where a check is undefined) and their means.
struct PpcCheck {
  std::vector<double> p_values;
  double mean = kUndefined;  ///< over defined entries; NaN if none

  void finalise() {
    double sum = 0.0;
    std::size_t count = 0;
    for (double p : p_values) {
      if (std::isnan(p)) continue;
      sum += p;
      ++count;
    }
    mean = count ? sum / static_cast<double>(count) : kUndefined;
  }
  [[nodiscard]] bool defined() const { return !std::isnan(mean); }
};

struct PpcReport {
  PpcCheck residual;
  std::vector<PpcCheck> marks;          ///< per component
  std::vector<PpcCheck> inter_arrival;  ///< per component
  double threshold = 0.1;

  /// True when every check is defined and its mean is at least `t`.
  [[nodiscard]] bool passes(double t) const {
    auto ok = [t](const PpcCheck& c) { return c.defined() && c.mean >= t; };
    if (!ok(residual)) return false;
    for (const auto& c : marks) {
      if (!ok(c)) return false;
    }
    for (const auto& c : inter_arrival) {
      if (!ok(c)) return false;
    }
    return true;
  }
  [[nodiscard]] bool passes() const { return passes(threshold); }

  /// Smallest defined posterior predictive p-value (NaN if none defined).
  [[nodiscard]] double min_mean() const {
    double m = kUndefined;
    auto take = [&m](const PpcCheck& c) {
      if (c.defined() && (std::isnan(m) || c.mean < m)) m = c.mean;
    };
    take(residual);
    for (const auto& c : marks) take(c);
    for (const auto& c : inter_arrival) take(c);
    return m;
  }
};

struct PpcOptions {
  double threshold = 0.1;
  std::size_t max_samples = 0;  ///< 0 uses every sample; otherwise an evenly spaced subset
  std::uint64_t seed = 1;       ///< for the fresh processes of the periodic check
};

inline PpcReport ppc(const PricePath& data, const ModelSpec& spec, const std::vector<PosteriorSample>& samples,
                     const PpcOptions& opt = {}) {
  if (samples.empty()) throw std::invalid_argument("ppc: at least one posterior sample required");
  const std::size_t n = spec.n();
  std::vector<std::size_t> picks;
  if (opt.max_samples == 0 || opt.max_samples >= samples.size()) {
    for (std::size_t k = 0; k < samples.size(); ++k) picks.push_back(k);
  } else {
    for (std::size_t k = 0; k < opt.max_samples; ++k) picks.push_back(k * samples.size() / opt.max_samples);
  }

  PpcReport report;
  report.threshold = opt.threshold;
  report.marks.resize(n);
  report.inter_arrival.resize(n);
  const Rng master(opt.seed);
  for (std::size_t idx = 0; idx < picks.size(); ++idx) {
    const auto& s = samples[picks[idx]];
    report.residual.p_values.push_back(ks_one_sample(residuals(data, spec, s), normal_cdf).p_value);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& phi = s.phis[i];
      const auto& jp = s.params.jumps[i];
      double p_marks = kUndefined;
      double p_gaps = kUndefined;
      if (phi.size() >= 2) {
        std::vector<double> sizes;
        for (const auto& j : phi) sizes.push_back(j.size);
        p_marks = ks_one_sample(sizes, exponential_cdf(jp.beta)).p_value;
        const auto gaps = inter_arrivals(phi);
        if (spec.components[i].kind == IntensityKind::constant) {
          p_gaps = ks_one_sample(gaps, exponential_cdf(1.0 / jp.eta)).p_value;
        } else {
          Rng rng = master.stream(idx * n + i);
          const auto fresh = sample_marked_poisson(Intensity::of(spec.components[i], jp), jp.beta, phi.horizon(), rng);
          if (fresh.size() >= 2) p_gaps = ks_two_sample(gaps, inter_arrivals(fresh)).p_value;
        }
      }
      report.marks[i].p_values.push_back(p_marks);
      report.inter_arrival[i].p_values.push_back(p_gaps);
    }
  }
  report.residual.finalise();
  for (auto& c : report.marks) c.finalise();
  for (auto& c : report.inter_arrival) c.finalise();
  return report;
}

// ---------------------------------------------------------------------------
// Mixing and jump-posterior summaries

/// Sample autocorrelations r_0..r_max_lag with the biased (1/n) normalisation.
/// A constant series has r_0 = 1 and undefined (NaN) higher lags.
inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
  if (max_lag >= x.size()) throw std::invalid_argument("acf: max_lag must be below the series length");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  std::vector<double> r(max_lag + 1, kUndefined);
  r[0] = 1.0;
  if (!(c0 > 0.0)) return r;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double c = 0.0;
    for (std::size_t t = 0; t + k < x.size(); ++t) c += (x[t] - mean) * (x[t + k] - mean);
    r[k] = c / c0;
  }
  return r;
}

/// Day on which a jump at time tau falls: the observation at ceil(tau) is the
/// first to see it.
inline long jump_day(double tau) { return static_cast<long>(std::ceil(tau)); }

struct DayMapEntry {
  double mean_size = 0.0;  ///< average within-day mark sum over samples with a jump that day
  double occupancy = 0.0;  ///< fraction of samples with a jump that day
};

/// Days whose occupancy across samples reaches `threshold`, with the average
/// within-day sum of marks of component i over the occupying samples.
inline std::map<long, DayMapEntry> jump_day_map(const std::vector<PosteriorSample>& samples, std::size_t component,
                                                double threshold = 0.6) {
  if (samples.empty()) throw std::invalid_argument("jump_day_map: at least one sample required");
  std::map<long, std::pair<std::size_t, double>> acc;
  for (const auto& s : samples) {
    if (component >= s.phis.size()) throw std::out_of_range("jump_day_map: component index out of range");
    std::map<long, double> day_sum;
    for (const auto& j : s.phis[component]) day_sum[jump_day(j.time)] += j.size;
    for (const auto& [day, sum] : day_sum) {
      auto& a = acc[day];
      ++a.first;
      a.second += sum;
    }
  }
  std::map<long, DayMapEntry> out;
  const double total = static_cast<double>(samples.size());
  for (const auto& [day, a] : acc) {
    const double occ = static_cast<double>(a.first) / total;
    if (occ >= threshold) out[day] = {a.second / static_cast<double>(a.first), occ};
  }
  return out;
}

}  // namespace spotmcmc
