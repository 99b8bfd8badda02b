#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "spotmcmc/quadrature.hpp"

using spotmcmc::adaptive_simpson;

TEST(Quadrature, Polynomials) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return x * x * x; }, 0.0, 2.0), 4.0, 1e-12);
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::pow(x, 6); }, -1.0, 1.0), 2.0 / 7.0, 1e-9);
}

TEST(Quadrature, ReversedAndEmptyIntervals) {
  auto f = [](double x) { return std::exp(x); };
  EXPECT_EQ(adaptive_simpson(f, 1.0, 1.0), 0.0);
  EXPECT_NEAR(adaptive_simpson(f, 1.0, 0.0), -(std::exp(1.0) - 1.0), 1e-9);
}

TEST(Quadrature, KinkAndCusp) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0), 0.29, 1e-8);
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::sqrt(x); }, 0.0, 1.0), 2.0 / 3.0, 1e-8);
}

TEST(Quadrature, NarrowPeakIsNotMissed) {
  // A bump the fixed starting panels would straddle.
  auto f = [](double x) { return std::exp(-std::pow((x - 0.37) / 0.01, 2)); };
  EXPECT_NEAR(adaptive_simpson(f, 0.0, 1.0), 0.01 * std::sqrt(std::numbers::pi), 1e-8);
}

TEST(Quadrature, ThrowsWhenDepthExhausted) {
  EXPECT_THROW(adaptive_simpson([](double x) { return std::sin(1.0 / x); }, 1e-9, 1.0, 1e-14, 4),
               spotmcmc::QuadratureError);
}
