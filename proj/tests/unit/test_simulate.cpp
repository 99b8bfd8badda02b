#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "spotmcmc/simulate.hpp"

using namespace spotmcmc;

TEST(GaussianOu, ZeroVarianceIsDeterministicDecay) {
  const auto g = TimeGrid::regular(10);
  const auto y = sample_gaussian_ou(1.0, 4.0, 0.0, 3.0, g, 1);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(y[j], 1.0 + 2.0 * std::exp(-g[j] / 4.0), 1e-13);
}

TEST(GaussianOu, OneStepMomentsMatchClosedForm) {
  const auto g = TimeGrid::regular(1, 2.5);
  Rng r(4);
  const int n = 100000;
  double s = 0.0;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_gaussian_ou(1.0, 8.0, 0.01, 1.6, g, r)[1];
    s += v;
    ss += v * v;
  }
  const auto m = gaussian_ou_moments(1.6, 2.5, 1.0, 8.0, 0.01);
  const double mean = s / n;
  EXPECT_NEAR(mean, m.mean, 4.0 * std::sqrt(m.variance / n));
  EXPECT_NEAR(ss / n - mean * mean, m.variance, 0.02 * m.variance);
}

TEST(GaussianOu, StationaryLagOneAutocorrelation) {
  const auto g = TimeGrid::regular(10000);
  const double lambda0 = 5.0;
  const auto y = sample_gaussian_ou(1.0, lambda0, 0.04, 1.0, g, 5);
  double m = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double c0 = 0.0;
  double c1 = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    c0 += (y[j] - m) * (y[j] - m);
    if (j > 0) c1 += (y[j] - m) * (y[j - 1] - m);
  }
  EXPECT_NEAR(c1 / c0, std::exp(-1.0 / lambda0), 0.02);
}

TEST(MarkedPoisson, ZeroRateIsEmpty) {
  EXPECT_TRUE(sample_marked_poisson(Intensity::constant(0.0), 1.0, 100.0, 1).empty());
}

TEST(MarkedPoisson, ConstantCountAndMarks) {
  Rng r(6);
  const double eta = 0.08;
  const double horizon = 250.0;
  const int draws = 10000;
  double count = 0.0;
  double marks = 0.0;
  double n_marks = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto phi = sample_marked_poisson(Intensity::constant(eta), 0.7, horizon, r);
    count += static_cast<double>(phi.size());
    for (const auto& j : phi) {
      marks += j.size;
      n_marks += 1.0;
      ASSERT_GE(j.time, 0.0);
      ASSERT_LE(j.time, horizon);
    }
  }
  const double expected = eta * horizon;
  EXPECT_NEAR(count / draws, expected, 4.0 * std::sqrt(expected / draws));
  EXPECT_NEAR(marks / n_marks, 0.7, 4.0 * 0.7 / std::sqrt(n_marks));
}

TEST(MarkedPoisson, PeriodicThinningMatchesIntegral) {
  Rng r(7);
  const auto in = Intensity::periodic(0.2, 30.0, 0.6, 130.0);
  const double horizon = 400.0;
  const int draws = 10000;
  ThinningStats stats;
  double count = 0.0;
  for (int i = 0; i < draws; ++i) count += static_cast<double>(sample_marked_poisson(in, 1.0, horizon, r, &stats).size());
  const double expected = intensity_integral(in, 0.0, horizon);
  EXPECT_NEAR(count / draws, expected, 4.0 * std::sqrt(expected / draws));
  const double rate = static_cast<double>(stats.accepted) / static_cast<double>(stats.candidates);
  const double p = expected / (in.eta * horizon);
  EXPECT_NEAR(rate, p, 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(stats.candidates)));
}

TEST(SampleModel, ReproducibleAndConsistent) {
  const auto spec = ModelSpec::with_signs(1, 1);
  Params p;
  p.mu = 1.0;
  p.sigma2 = 0.01;
  p.rho0 = lambda_to_rho(8.0);
  p.jumps = {JumpParams{lambda_to_rho(2.0), 0.7, 0.1}, JumpParams{lambda_to_rho(1.0), 0.5, 0.05}};
  const auto g = TimeGrid::regular(500);
  const auto a = sample_model(spec, p, g, 99);
  const auto b = sample_model(spec, p, g, 99);
  EXPECT_EQ(a.observed.values, b.observed.values);
  EXPECT_EQ(a.phis, b.phis);
  const auto c = sample_model(spec, p, g, 100);
  EXPECT_NE(a.observed.values, c.observed.values);
  ASSERT_EQ(a.components.size(), 3u);
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_DOUBLE_EQ(a.observed.values[j], a.components[0][j] + a.components[1][j] - a.components[2][j]);
  }
  EXPECT_EQ(a.components[0][0], p.mu);
}

TEST(SampleModel, NoJumpComponentsIsGaussianOu) {
  Params p;
  p.rho0 = lambda_to_rho(3.0);
  const auto g = TimeGrid::regular(100);
  const auto truth = sample_model(ModelSpec{}, p, g, 3);
  EXPECT_EQ(truth.observed.values, truth.components[0]);
  Rng rng = Rng(3).stream(0);
  EXPECT_EQ(truth.components[0], sample_gaussian_ou(p.mu, p.lambda0(), p.sigma2, p.mu, g, rng));
}

TEST(SampleModel, NegativeSpikesDropBelowGaussianBand) {
  // With large negative jumps the minimum falls below mu - 3 sigma sqrt(lambda0/2)
  // whenever at least one sizeable jump occurred.
  const auto spec = ModelSpec::with_signs(0, 1);
  Params p;
  p.mu = 1.0;
  p.sigma2 = 0.01;
  p.rho0 = lambda_to_rho(8.0);
  p.jumps = {JumpParams{lambda_to_rho(2.0), 3.0, 0.02}};
  const double band = p.mu - 3.0 * std::sqrt(p.sigma2 * 8.0 / 2.0);
  int with_big_jump = 0;
  int below = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto t = sample_model(spec, p, TimeGrid::regular(200), seed);
    bool big = false;
    for (const auto& j : t.phis[0]) big = big || j.size > 2.0;
    double mn = 1e9;
    for (double v : t.observed.values) mn = std::min(mn, v);
    with_big_jump += big;
    below += big && mn < band;
  }
  EXPECT_GT(with_big_jump, 50);
  EXPECT_GE(below, with_big_jump * 9 / 10);
}
