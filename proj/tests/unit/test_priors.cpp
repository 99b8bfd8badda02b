#include <gtest/gtest.h>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "spotmcmc/priors.hpp"
#include "spotmcmc/quadrature.hpp"

using namespace spotmcmc;

TEST(Priors, DensitiesAgreeWithBoost) {
  const GammaDist ga{2.5, 3.0};
  const InverseGammaDist ig{1.5, 0.005};
  const NormalDist nd{1.0, 20.0};
  for (double x : {0.01, 0.3, 1.7, 6.0}) {
    EXPECT_NEAR(ga.log_density(x), std::log(boost::math::pdf(boost::math::gamma_distribution<>(2.5, 1.0 / 3.0), x)), 1e-12);
    EXPECT_NEAR(ig.log_density(x), std::log(boost::math::pdf(boost::math::inverse_gamma_distribution<>(1.5, 0.005), x)), 1e-9);
    EXPECT_NEAR(nd.log_density(x), std::log(boost::math::pdf(boost::math::normal_distribution<>(1.0, 20.0), x)), 1e-12);
  }
  EXPECT_EQ(GammaDist{}.log_density(-1.0), kNegInf);
  const UniformDist u{65.0, 195.0};
  EXPECT_EQ(u.log_density(200.0), kNegInf);
  EXPECT_NEAR(nd.log_density(1.0), -0.5 * std::log(2.0 * std::numbers::pi * 400.0), 1e-14);
}

TEST(Priors, DefaultsAndUndefinedMoments) {
  auto spec = ModelSpec::with_signs(1, 0);
  spec.components[0].kind = IntensityKind::periodic;
  const auto p = default_priors(spec);
  EXPECT_EQ(p.mu.mean_value(), 1.0);
  EXPECT_EQ(p.mu.sd_value(), 20.0);
  EXPECT_NEAR(*mean_of(p.jumps[0].eta), 0.1, 1e-15);
  EXPECT_NEAR(*sd_of(p.jumps[0].eta), 0.1, 1e-15);
  EXPECT_FALSE(p.jumps[0].beta.mean_value());
  EXPECT_FALSE(p.jumps[0].beta.sd_value());
  EXPECT_EQ(p.jumps[0].theta.lo, 65.0);
  EXPECT_EQ(p.jumps[0].theta.hi, 195.0);
  EXPECT_EQ(p.jumps[0].theta.mean_value(), 130.0);
  EXPECT_NEAR(*mean_of(p.sigma2), 0.01, 1e-15);
  EXPECT_FALSE(sd_of(p.sigma2));
}

TEST(Priors, OrderingConstraint) {
  const auto spec = ModelSpec::with_signs(2, 0);
  const auto priors = default_priors(spec);
  Params p;
  p.jumps = {JumpParams{}, JumpParams{}};
  p.jumps[0].rho = 0.5;
  p.jumps[1].rho = 0.6;
  EXPECT_EQ(log_prior(p, spec, priors), kNegInf);
  p.jumps[1].rho = 0.5;
  EXPECT_EQ(log_prior(p, spec, priors), kNegInf);
  p.jumps[1].rho = 0.2;
  EXPECT_NEAR(log_prior_rhos(p, spec), -std::log(0.5), 1e-15);
  EXPECT_TRUE(std::isfinite(log_prior(p, spec, priors)));
}

TEST(Priors, MarginalOfOrderedRhoIntegratesToOne) {
  // Density -log x of rho_2; its CDF is x (1 - log x).
  const double lo = 1e-10;
  const double total = adaptive_simpson([](double x) { return -std::log(x); }, lo, 1.0, 1e-11);
  EXPECT_NEAR(total, 1.0 - lo * (1.0 - std::log(lo)), 1e-8);
}

TEST(Priors, SampledOrderedRhoMomentsAndCdf) {
  const auto spec = ModelSpec::with_signs(2, 0);
  const auto priors = default_priors(spec);
  Rng rng(17);
  const int n = 1'000'000;
  double m1 = 0.0;
  double m2 = 0.0;
  double r1 = 0.0;
  int below_half = 0;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_prior(spec, priors, rng);
    const double r = p.jumps[1].rho;
    m1 += r;
    m2 += r * r;
    r1 += p.jumps[0].rho;
    below_half += r <= 0.5;
  }
  EXPECT_NEAR(m1 / n, 0.25, 0.002);
  EXPECT_NEAR(m2 / n, 1.0 / 9.0, 0.002);
  EXPECT_NEAR(r1 / n, 0.5, 0.002);
  EXPECT_NEAR(static_cast<double>(below_half) / n, 0.5 * (1.0 - std::log(0.5)), 0.01);
}

TEST(Priors, SamplesAlwaysInSupport) {
  auto spec = ModelSpec::with_signs(2, 1);
  spec.components[2].kind = IntensityKind::periodic;
  const auto priors = default_priors(spec);
  Rng rng(2);
  for (int i = 0; i < 20000; ++i) ASSERT_TRUE(std::isfinite(log_prior(sample_prior(spec, priors, rng), spec, priors)));
}

TEST(Priors, ImproperRejectedForSampling) {
  const auto spec = ModelSpec::with_signs(1, 0);
  auto priors = default_priors(spec);
  priors.jumps[0].eta = FlatPositive{};
  EXPECT_FALSE(priors.proper());
  EXPECT_THROW(sample_prior(spec, priors, 1), std::invalid_argument);
}

TEST(Priors, SimulationStudyEtaPrior) {
  const auto p = simulation_study_priors(ModelSpec::with_signs(1, 0), 0.2);
  EXPECT_NEAR(*mean_of(p.jumps[0].eta), 0.2, 1e-15);
}
