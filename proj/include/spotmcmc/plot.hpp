#pragma once

// Long-format numeric tables for external plotting.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spotmcmc/diagnostics.hpp"
#include "spotmcmc/io.hpp"
#include "spotmcmc/mcmc.hpp"
#include "spotmcmc/seasonal.hpp"
#include "spotmcmc/simulate.hpp"

namespace spotmcmc {

struct SeasonalArtifact {
  CalendarSeries series;
  SeasonalCoefficients coefficients;
};

struct ChainArtifact {
  PricePath data;
  ModelSpec spec;
  std::vector<PosteriorSample> samples;
};

using PlotArtifact = std::variant<SeasonalArtifact, PricePath, SimulationTruth, ChainArtifact>;

enum class PlotKind { deseasonalized, monthly_jumps, decomposition, acf, jump_map };

inline const char* plot_kind_name(PlotKind k) {
  switch (k) {
    case PlotKind::deseasonalized:
      return "deseasonalized";
    case PlotKind::monthly_jumps:
      return "monthly_jumps";
    case PlotKind::decomposition:
      return "decomposition";
    case PlotKind::acf:
      return "acf";
    case PlotKind::jump_map:
      return "jump_map";
  }
  return "?";
}

struct PlotOptions {
  std::size_t component = 0;  ///< jump_map
  std::size_t max_lag = 100;  ///< acf
  double occupancy = 0.6;     ///< jump_map
};

/// Named scalar traces of every parameter across samples: mu, sigma2, rho0,
/// lambda0 and, per component i (1-based), rho_i, lambda_i, eta_i, beta_i and,
/// for periodic components, theta_i and delta_i.
inline std::vector<std::pair<std::string, std::vector<double>>> parameter_traces(const std::vector<PosteriorSample>& samples,
                                                                                  const ModelSpec& spec) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  auto add = [&](std::string name, auto get) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(get(s.params));
    out.emplace_back(std::move(name), std::move(v));
  };
  add("mu", [](const Params& p) { return p.mu; });
  add("sigma2", [](const Params& p) { return p.sigma2; });
  add("rho0", [](const Params& p) { return p.rho0; });
  add("lambda0", [](const Params& p) { return p.lambda0(); });
  for (std::size_t i = 0; i < spec.n(); ++i) {
    const auto k = std::to_string(i + 1);
    add("rho" + k, [i](const Params& p) { return p.jumps[i].rho; });
    add("lambda" + k, [i](const Params& p) { return p.jumps[i].lambda(); });
    add("eta" + k, [i](const Params& p) { return p.jumps[i].eta; });
    add("beta" + k, [i](const Params& p) { return p.jumps[i].beta; });
    if (spec.components[i].kind == IntensityKind::periodic) {
      add("theta" + k, [i](const Params& p) { return p.jumps[i].theta; });
      add("delta" + k, [i](const Params& p) { return p.jumps[i].delta; });
    }
  }
  return out;
}

inline constexpr double kDaysPerMonth = kDaysPerYear / 12.0;

namespace detail {

[[noreturn]] inline void kind_mismatch(PlotKind kind, const char* artifact) {
  throw std::invalid_argument(std::string("plot kind '") + plot_kind_name(kind) + "' is not available for " + artifact);
}

inline Table decomposition_table(const PricePath& data, const std::vector<std::vector<double>>& components) {
  Table t;
  t.columns = {"t", "x"};
  for (std::size_t i = 0; i < components.size(); ++i) t.columns.push_back("y" + std::to_string(i));
  for (std::size_t j = 0; j < data.size(); ++j) {
    std::vector<double> row{data.grid[j], data.values[j]};
    for (const auto& c : components) row.push_back(c[j]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table chain_table(const ChainArtifact& a, PlotKind kind, const PlotOptions& opt) {
  if (a.samples.empty()) throw std::invalid_argument("plot: chain artifact has no samples");
  const std::size_t n = a.spec.n();
  switch (kind) {
    case PlotKind::acf: {
      const auto traces = parameter_traces(a.samples, a.spec);
      Table t;
      t.columns.push_back("lag");
      std::vector<std::vector<double>> cols;
      for (const auto& [name, v] : traces) {
        t.columns.push_back(name);
        cols.push_back(acf(v, opt.max_lag));
      }
      for (std::size_t k = 0; k <= opt.max_lag; ++k) {
        std::vector<double> row{static_cast<double>(k)};
        for (const auto& c : cols) row.push_back(c[k]);
        t.rows.push_back(std::move(row));
      }
      return t;
    }
    case PlotKind::jump_map: {
      Table t{{"day", "mean_size", "occupancy"}, {}};
      for (const auto& [day, e] : jump_day_map(a.samples, opt.component, opt.occupancy)) {
        t.rows.push_back({static_cast<double>(day), e.mean_size, e.occupancy});
      }
      return t;
    }
    case PlotKind::monthly_jumps: {
      const double horizon = a.data.grid.horizon();
      const auto months = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / kDaysPerMonth)));
      std::vector<std::vector<double>> counts(n, std::vector<double>(months, 0.0));
      for (const auto& s : a.samples) {
        for (std::size_t i = 0; i < n; ++i) {
          for (const auto& j : s.phis[i]) {
            const auto m = std::min(months - 1, static_cast<std::size_t>(j.time / kDaysPerMonth));
            counts[i][m] += 1.0;
          }
        }
      }
      Table t;
      t.columns.push_back("month");
      for (std::size_t i = 0; i < n; ++i) t.columns.push_back("count" + std::to_string(i + 1));
      const double total = static_cast<double>(a.samples.size());
      for (std::size_t m = 0; m < months; ++m) {
        std::vector<double> row{static_cast<double>(m)};
        for (std::size_t i = 0; i < n; ++i) row.push_back(counts[i][m] / total);
        t.rows.push_back(std::move(row));
      }
      return t;
    }
    case PlotKind::decomposition: {
      // Posterior mean of each jump path; Y_0 is what remains of x.
      std::vector<std::vector<double>> mean(n + 1, std::vector<double>(a.data.size(), 0.0));
      for (const auto& s : a.samples) {
        const auto paths = jump_paths(s.phis, s.params, a.data.grid);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < a.data.size(); ++j) mean[i + 1][j] += paths[i][j];
        }
      }
      const double total = static_cast<double>(a.samples.size());
      for (std::size_t i = 1; i <= n; ++i) {
        for (double& v : mean[i]) v /= total;
      }
      std::vector<std::vector<double>> jumps(mean.begin() + 1, mean.end());
      mean[0] = remove_jumps(a.data.values, jumps, a.spec);
      return decomposition_table(a.data, mean);
    }
    case PlotKind::deseasonalized:
      break;
  }
  kind_mismatch(kind, "posterior samples");
}

}  // namespace detail

inline Table emit_plot_data(const PlotArtifact& artifact, PlotKind kind, const PlotOptions& opt = {}) {
  if (const auto* s = std::get_if<SeasonalArtifact>(&artifact)) {
    if (kind != PlotKind::deseasonalized) detail::kind_mismatch(kind, "a seasonal fit");
    const auto repaired = repair_nonpositive(s->series.prices());
    const auto x = deseasonalize(s->series.days(), repaired.prices, s->coefficients);
    Table t{{"t", "price", "trend", "x"}, {}};
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double day = s->series.days()[j];
      t.rows.push_back({day, s->series.prices()[j], std::exp(s->coefficients(day / kDaysPerYear)), x[j]});
    }
    return t;
  }
  if (const auto* p = std::get_if<PricePath>(&artifact)) {
    if (kind != PlotKind::deseasonalized) detail::kind_mismatch(kind, "a price series");
    return series_table(*p);
  }
  if (const auto* truth = std::get_if<SimulationTruth>(&artifact)) {
    if (kind == PlotKind::deseasonalized) return series_table(truth->observed);
    if (kind != PlotKind::decomposition) detail::kind_mismatch(kind, "a simulation");
    return detail::decomposition_table(truth->observed, truth->components);
  }
  return detail::chain_table(std::get<ChainArtifact>(artifact), kind, opt);
}

}  // namespace spotmcmc
