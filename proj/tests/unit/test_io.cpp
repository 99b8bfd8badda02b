#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "spotmcmc/commands.hpp"

using namespace spotmcmc;

namespace {

std::size_t error_line(const std::string& csv) {
  std::istringstream in(csv);
  try {
    parse_price_csv(in);
  } catch (const InputError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Csv, PriceParsing) {
  std::istringstream in("\xEF\xBB\xBF" "date,price\r\n2024-01-03,41.5\r\n2024-01-02,40.0\n\n2024-01-06,39.0\n2024-01-08,-3.5\n");
  const auto s = parse_price_csv(in);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.weekend_rows_dropped(), 1u);
  EXPECT_EQ(format_iso_date(s.dates()[0]), "2024-01-02");
  EXPECT_EQ(s.prices()[2], -3.5);
  EXPECT_EQ(s.days(), (std::vector<double>{0, 1, 4}));
}

TEST(Csv, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("date,price\n2024-01-02,40\n2024-01-03,abc\n"), 3u);
  EXPECT_EQ(error_line("date,price\n2024-01-02,40\n2024-13-03,41\n"), 3u);
  EXPECT_EQ(error_line("date,price\n2024-01-02,40,1\n"), 2u);
  EXPECT_EQ(error_line("day,value\n2024-01-02,40\n"), 1u);
  EXPECT_EQ(error_line("date,price\n2024-01-02,40\n2024-01-03,41\n2024-01-02,42\n"), 4u);
  EXPECT_EQ(error_line("date,price\n2024-01-02,inf\n"), 2u);
  std::istringstream empty("");
  EXPECT_THROW(parse_price_csv(empty), InputError);
}

TEST(Csv, SeriesParsing) {
  std::istringstream in("t,x\n0,1.0\n1,1.1\n2.5,0.9\n");
  const auto p = parse_series_csv(in);
  EXPECT_EQ(p.size(), 3u);
  EXPECT_EQ(p.grid.horizon(), 2.5);
  EXPECT_FALSE(p.grid.uniform_step());
  std::istringstream bad("t,x\n0,1\n0,2\n");
  EXPECT_THROW(parse_series_csv(bad), InputError);
}

TEST(Samples, RoundTripIsExact) {
  auto spec = ModelSpec::with_signs(1, 1);
  spec.components[1].kind = IntensityKind::periodic;
  const auto truth = sample_model(spec, default_initial_params(spec), TimeGrid::regular(300), 3);
  Rng rng(1);
  std::vector<PosteriorSample> samples;
  for (int k = 0; k < 5; ++k) {
    auto p = truth.params;
    p.mu += rng.normal() / 3.0;
    p.sigma2 *= std::exp(rng.normal());
    p.jumps[1].theta = rng.uniform(65.0, 195.0);
    samples.push_back({static_cast<std::uint64_t>(10 * k), p, truth.phis, rng.normal() * 1e3});
  }
  std::stringstream buf;
  write_samples(buf, {spec, 300.0, samples});
  const auto back = read_samples(buf);
  EXPECT_EQ(back.spec, spec);
  EXPECT_EQ(back.horizon, 300.0);
  EXPECT_EQ(back.samples, samples);
}

TEST(Samples, RejectsForeignFiles) {
  std::istringstream other("{\"schema\":\"something\"}\n");
  EXPECT_THROW(read_samples(other), InputError);
  std::istringstream broken("{\"schema\":\"spotmcmc.samples\",\"version\":1,\"spec\":{\"positive\":1},\"horizon\":10}\n{\"iteration\":\n");
  try {
    read_samples(broken);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Json, ModelSpecShorthandAndParams) {
  const auto s = json::parse(R"({"positive": 2, "negative": 1, "periodic": [2]})").get<ModelSpec>();
  EXPECT_EQ(s.positive_count(), 2u);
  EXPECT_EQ(s.components[2].sign, -1);
  EXPECT_EQ(s.components[2].kind, IntensityKind::periodic);
  EXPECT_EQ(json(s).get<ModelSpec>(), s);

  const auto p = json::parse(R"({"mu": 1, "sigma": 0.1, "lambda0": 8,
      "jumps": [{"lambda": 2, "beta": 0.7, "eta": 0.1}]})").get<Params>();
  EXPECT_NEAR(p.sigma2, 0.01, 1e-15);
  EXPECT_NEAR(p.rho0, lambda_to_rho(8.0), 1e-15);
  EXPECT_NEAR(p.jumps[0].lambda(), 2.0, 1e-12);
  EXPECT_EQ(json(p).get<Params>(), p);
}

TEST(Json, PriorOverridesMergeOntoDefaults) {
  const auto spec = ModelSpec::with_signs(1, 0);
  const auto p = priors_from_json(json::parse(R"({"mu": {"mean": 0, "sd": 5}, "jumps": [{"eta": {"family": "flat"}}]})"), spec);
  EXPECT_EQ(p.mu.sd, 5.0);
  EXPECT_TRUE(std::holds_alternative<FlatPositive>(p.jumps[0].eta));
  EXPECT_EQ(p.jumps[0].beta, default_priors(spec).jumps[0].beta);
  EXPECT_EQ(priors_from_json(json(), spec), default_priors(spec));
  EXPECT_EQ(priors_from_json(json(default_priors(spec)), spec), default_priors(spec));
}

TEST(Json, SamplerProfiles) {
  const auto c = json::parse(R"({"profile": "full", "thin": 7})").get<SamplerConfig>();
  EXPECT_EQ(c.burn_in, SamplerConfig::full().burn_in);
  EXPECT_EQ(c.thin, 7u);
  EXPECT_EQ(json(c).get<SamplerConfig>().thin, 7u);
}

TEST(Config, SeedPrecedence) {
  const auto dir = std::filesystem::temp_directory_path() / "spotmcmc_test_io";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "cfg.json").string();
  write_json_file(path, {{"seed", 5}, {"input", "x.csv"}});
  ::unsetenv(kSeedEnv);
  EXPECT_EQ(resolve_config(path, std::nullopt, std::nullopt).seed, 5u);
  ::setenv(kSeedEnv, "11", 1);
  EXPECT_EQ(resolve_config(path, std::nullopt, std::nullopt).seed, 11u);
  EXPECT_EQ(resolve_config(path, 13, std::nullopt).seed, 13u);
  ::setenv(kSeedEnv, "abc", 1);
  EXPECT_THROW(resolve_config(path, std::nullopt, std::nullopt), std::invalid_argument);
  ::unsetenv(kSeedEnv);
  EXPECT_EQ(resolve_config(std::nullopt, std::nullopt, std::string("o")).out, "o");
  std::filesystem::remove_all(dir);
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.input = "a.csv";
  c.seed = 42;
  c.model = ModelSpec::with_signs(2, 1);
  c.truth = default_initial_params(c.model);
  const auto back = json(c).get<RunConfig>();
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.truth, c.truth);
  EXPECT_EQ(back.prior_spec(back.model), default_priors(c.model));
}

TEST(PlotData, TableShapes) {
  const auto spec = ModelSpec::with_signs(1, 1);
  const auto truth = sample_model(spec, default_initial_params(spec), TimeGrid::regular(120), 2);
  std::vector<PosteriorSample> samples;
  for (int k = 0; k < 30; ++k) {
    auto p = truth.params;
    p.mu += 0.01 * k;
    samples.push_back({static_cast<std::uint64_t>(k), p, truth.phis, 0.0});
  }
  const ChainArtifact art{truth.observed, spec, samples};
  PlotOptions opt;
  opt.max_lag = 10;
  const auto a = emit_plot_data(art, PlotKind::acf, opt);
  EXPECT_EQ(a.rows.size(), 11u);
  EXPECT_EQ(a.columns.front(), "lag");
  const auto d = emit_plot_data(art, PlotKind::decomposition);
  EXPECT_EQ(d.columns.size(), 2u + spec.n() + 1u);
  EXPECT_EQ(d.rows.size(), 121u);
  // The decomposition adds back up to x.
  for (const auto& r : d.rows) EXPECT_NEAR(r[2] + r[3] - r[4], r[1], 1e-12);
  const auto m = emit_plot_data(art, PlotKind::monthly_jumps);
  EXPECT_EQ(m.rows.size(), 6u);
  double total = 0.0;
  for (const auto& r : m.rows) total += r[1];
  EXPECT_NEAR(total, static_cast<double>(truth.phis[0].size()), 1e-12);
  const auto j = emit_plot_data(art, PlotKind::jump_map);
  EXPECT_EQ(j.columns.size(), 3u);
  EXPECT_THROW(emit_plot_data(art, PlotKind::deseasonalized), std::invalid_argument);
  EXPECT_EQ(emit_plot_data(truth, PlotKind::decomposition).columns.size(), 5u);
  std::ostringstream csv;
  a.write(csv);
  EXPECT_EQ(csv.str().substr(0, 9), "lag,mu,si");
}
