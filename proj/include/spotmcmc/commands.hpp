#pragma once

// The five subcommands behind the command-line tool. Each reads a RunConfig,
// writes its artifacts plus the effective config into the output directory
// and returns a short JSON summary.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spotmcmc/diagnostics.hpp"
#include "spotmcmc/io.hpp"
#include "spotmcmc/mcmc.hpp"
#include "spotmcmc/plot.hpp"
#include "spotmcmc/priors.hpp"
#include "spotmcmc/rng.hpp"
#include "spotmcmc/seasonal.hpp"
#include "spotmcmc/selection.hpp"
#include "spotmcmc/simulate.hpp"

namespace spotmcmc {

inline constexpr const char* kSeedEnv = "SPOTMCMC_SEED";

/// Parameters of the simulation study: mu = 1, sigma2 = 0.01, lambda0 = 8,
/// lambda1 = 2, beta = 0.7, eta = 0.1.
inline Params simulation_study_params(double eta = 0.1) {
  Params p;
  p.mu = 1.0;
  p.sigma2 = 0.01;
  p.rho0 = lambda_to_rho(8.0);
  JumpParams j;
  j.rho = lambda_to_rho(2.0);
  j.beta = 0.7;
  j.eta = eta;
  p.jumps = {j};
  return p;
}

struct RunConfig {
  std::string input;
  std::string out = ".";
  std::uint64_t seed = 1;
  ModelSpec model = ModelSpec::with_signs(1, 0);
  json priors;  ///< overrides of the defaults; null for none
  SamplerConfig sampler = SamplerConfig::quick();
  // simulate
  std::optional<Params> truth;
  std::size_t steps = 1000;
  double dt = 1.0;
  // diagnose
  std::string samples;  ///< defaults to <out>/samples.jsonl
  std::size_t ppc_samples = 0;
  // select
  double threshold = 0.1;
  std::size_t max_n = 3;
  bool holdout_refit = false;
  double holdout_fraction = 0.3;
  // plot data
  bool plots = true;
  std::size_t acf_lag = 100;
  double occupancy = 0.6;

  [[nodiscard]] PriorSpec prior_spec(const ModelSpec& spec) const { return priors_from_json(priors, spec); }
};

inline void to_json(json& j, const RunConfig& c) {
  j = {{"input", c.input},
       {"out", c.out},
       {"seed", c.seed},
       {"model", c.model},
       {"priors", c.prior_spec(c.model)},
       {"sampler", c.sampler},
       {"steps", c.steps},
       {"dt", c.dt},
       {"samples", c.samples},
       {"ppc_samples", c.ppc_samples},
       {"threshold", c.threshold},
       {"max_n", c.max_n},
       {"holdout_refit", c.holdout_refit},
       {"holdout_fraction", c.holdout_fraction},
       {"plots", c.plots},
       {"acf_lag", c.acf_lag},
       {"occupancy", c.occupancy}};
  j["truth"] = c.truth ? json(*c.truth) : json(nullptr);
}

inline void from_json(const json& j, RunConfig& c) {
  RunConfig d;
  c.input = j.value("input", d.input);
  c.out = j.value("out", d.out);
  c.seed = j.value("seed", d.seed);
  c.model = j.contains("model") ? j.at("model").get<ModelSpec>() : d.model;
  c.priors = j.value("priors", json());
  c.sampler = j.contains("sampler") ? j.at("sampler").get<SamplerConfig>() : d.sampler;
  if (j.contains("truth") && !j.at("truth").is_null()) c.truth = j.at("truth").get<Params>();
  c.steps = j.value("steps", d.steps);
  c.dt = j.value("dt", d.dt);
  c.samples = j.value("samples", d.samples);
  c.ppc_samples = j.value("ppc_samples", d.ppc_samples);
  c.threshold = j.value("threshold", d.threshold);
  c.max_n = j.value("max_n", d.max_n);
  c.holdout_refit = j.value("holdout_refit", d.holdout_refit);
  c.holdout_fraction = j.value("holdout_fraction", d.holdout_fraction);
  c.plots = j.value("plots", d.plots);
  c.acf_lag = j.value("acf_lag", d.acf_lag);
  c.occupancy = j.value("occupancy", d.occupancy);
}

/// Config file (if any), then the environment seed, then an explicit seed.
inline RunConfig resolve_config(const std::optional<std::string>& path, std::optional<std::uint64_t> seed_flag,
                                const std::optional<std::string>& out_flag) {
  RunConfig cfg;
  if (path) cfg = read_json_file(*path).get<RunConfig>();
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      cfg.seed = v;
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(kSeedEnv) + " is not an unsigned integer: '" + env + "'");
    }
  }
  if (seed_flag) cfg.seed = *seed_flag;
  if (out_flag) cfg.out = *out_flag;
  return cfg;
}

namespace detail {

inline std::filesystem::path prepare_out(const RunConfig& c) {
  std::filesystem::path out(c.out);
  std::filesystem::create_directories(out);
  write_json_file((out / "config.json").string(), json(c));
  return out;
}

inline void require_input(const RunConfig& c) {
  if (c.input.empty()) throw std::invalid_argument("config: 'input' is required");
}

}  // namespace detail

struct PosteriorRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
};

/// Posterior mean and standard deviation of every parameter trace.
inline std::vector<PosteriorRow> posterior_summary(const std::vector<PosteriorSample>& samples, const ModelSpec& spec) {
  std::vector<PosteriorRow> rows;
  for (const auto& [name, v] : parameter_traces(samples, spec)) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    rows.push_back({name, m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0});
  }
  return rows;
}

inline json cmd_deseasonalize(const RunConfig& c) {
  detail::require_input(c);
  const auto series = ingest_csv(c.input);
  const auto fit = fit_seasonal(series);
  const auto out = detail::prepare_out(c);
  json coef = fit;
  coef["observations"] = series.size();
  coef["weekend_rows_dropped"] = series.weekend_rows_dropped();
  coef["first_date"] = format_iso_date(series.dates().front());
  write_json_file((out / "coefficients.json").string(), coef);
  const auto x = deseasonalize(series, fit.coefficients);
  series_table(x).write((out / "series.csv").string());
  if (c.plots) {
    emit_plot_data(SeasonalArtifact{series, fit.coefficients}, PlotKind::deseasonalized).write((out / "deseasonalized.csv").string());
  }
  return coef;
}

inline json cmd_simulate(const RunConfig& c) {
  const Params params = c.truth ? *c.truth : simulation_study_params();
  if (params.jumps.size() != c.model.n()) throw std::invalid_argument("simulate: 'truth' must give one jump entry per model component");
  if (c.steps < 1 || !(c.dt > 0.0)) throw std::invalid_argument("simulate: need steps >= 1 and dt > 0");
  const auto truth = sample_model(c.model, params, TimeGrid::regular(c.steps, c.dt), c.seed);
  const auto out = detail::prepare_out(c);
  write_json_file((out / "truth.json").string(), json(truth));
  series_table(truth.observed).write((out / "series.csv").string());
  if (c.plots) emit_plot_data(truth, PlotKind::decomposition).write((out / "decomposition.csv").string());
  json summary = {{"spec", truth.spec}, {"observations", truth.observed.size()}};
  json counts = json::array();
  for (const auto& phi : truth.phis) counts.push_back(phi.size());
  summary["jump_counts"] = counts;
  return summary;
}

inline json cmd_fit(const RunConfig& c) {
  detail::require_input(c);
  const auto data = load_series(c.input);
  Target target{data, c.model, c.prior_spec(c.model), true};
  SamplerConfig sc = c.sampler;
  sc.seed = c.seed;
  const auto chain = run(target, sc);
  if (chain.samples.empty()) throw std::invalid_argument("fit: no samples retained (iterations < thin)");
  const auto out = detail::prepare_out(c);
  save_samples((out / "samples.jsonl").string(), {c.model, data.grid.horizon(), chain.samples});

  json table = json::array();
  for (const auto& r : posterior_summary(chain.samples, c.model)) table.push_back({{"parameter", r.name}, {"mean", r.mean}, {"sd", r.sd}});
  json summary = {{"spec", c.model},
                  {"samples", chain.samples.size()},
                  {"posterior", table},
                  {"acceptance", chain.acceptance},
                  {"burn_in_acceptance", chain.burn_in_acceptance},
                  {"final_scales", chain.final_scales}};
  write_json_file((out / "summary.json").string(), summary);

  if (c.plots) {
    const ChainArtifact art{data, c.model, chain.samples};
    PlotOptions opt;
    opt.max_lag = std::min(c.acf_lag, chain.samples.size() - 1);
    opt.occupancy = c.occupancy;
    emit_plot_data(art, PlotKind::acf, opt).write((out / "acf.csv").string());
    emit_plot_data(art, PlotKind::monthly_jumps, opt).write((out / "monthly_jumps.csv").string());
    emit_plot_data(art, PlotKind::decomposition, opt).write((out / "decomposition.csv").string());
    for (std::size_t i = 0; i < c.model.n(); ++i) {
      opt.component = i;
      emit_plot_data(art, PlotKind::jump_map, opt).write((out / ("jump_map_" + std::to_string(i + 1) + ".csv")).string());
    }
  }
  return summary;
}

inline json cmd_diagnose(const RunConfig& c) {
  detail::require_input(c);
  const auto data = load_series(c.input);
  const std::string path = c.samples.empty() ? (std::filesystem::path(c.out) / "samples.jsonl").string() : c.samples;
  const auto set = load_samples(path);
  if (set.samples.empty()) throw std::invalid_argument("diagnose: samples file has no records");
  if (set.horizon != data.grid.horizon()) throw std::invalid_argument("diagnose: samples were fitted to a different series");
  PpcOptions opt;
  opt.threshold = c.threshold;
  opt.max_samples = c.ppc_samples;
  opt.seed = derive_seed(c.seed, stream_id("ppc"));
  const auto report = ppc(data, set.spec, set.samples, opt);
  const auto out = detail::prepare_out(c);
  json j = report;
  j["spec"] = set.spec;
  write_json_file((out / "ppc.json").string(), j);
  return {{"spec", set.spec},
          {"passes", report.passes()},
          {"residual", detail::nan_to_null(report.residual.mean)},
          {"min_mean", detail::nan_to_null(report.min_mean())}};
}

inline json cmd_select(const RunConfig& c) {
  detail::require_input(c);
  const auto data = load_series(c.input);
  SelectionPlan plan;
  plan.threshold = c.threshold;
  plan.max_n = c.max_n;
  plan.chain = c.sampler;
  plan.chain.seed = c.seed;
  plan.ppc_options.max_samples = c.ppc_samples;
  plan.ppc_options.seed = derive_seed(c.seed, stream_id("ppc"));
  plan.holdout_refit = c.holdout_refit;
  plan.holdout_fraction = c.holdout_fraction;
  const json prior_overrides = c.priors;
  plan.priors = [prior_overrides](const ModelSpec& s) {
    // Component-specific overrides only make sense for the configured model.
    json generic = prior_overrides;
    if (generic.is_object()) generic.erase("jumps");
    return priors_from_json(generic, s);
  };
  const auto result = select(data, plan);
  const auto out = detail::prepare_out(c);
  json j = result;
  write_json_file((out / "selection.json").string(), j);
  return {{"accepted", j["accepted"]}, {"attempts", result.log.size()}};
}

}  // namespace spotmcmc
