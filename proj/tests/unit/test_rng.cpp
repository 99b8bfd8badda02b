#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "spotmcmc/rng.hpp"

using spotmcmc::Rng;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename Draw>
Moments moments(Draw draw, int n) {
  double s = 0.0;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    ss += x * x;
  }
  const double m = s / n;
  return {m, ss / n - m * m};
}

}  // namespace

TEST(Rng, SameSeedSameSequence) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.uniform(), b.uniform());
    ASSERT_EQ(a.normal(), b.normal());
    ASSERT_EQ(a.gamma(0.7, 2.0), b.gamma(0.7, 2.0));
  }
}

TEST(Rng, StreamsDifferAndDoNotAdvanceParent) {
  Rng master(7);
  Rng s1 = master.stream(1);
  Rng s2 = master.stream(2);
  Rng s1_again = master.stream(1);
  EXPECT_NE(s1.next_u64(), s2.next_u64());
  Rng fresh(7);
  EXPECT_EQ(master.next_u64(), fresh.next_u64());
  Rng s1b = Rng(7).stream(1);
  EXPECT_EQ(s1_again.next_u64(), s1b.next_u64());
}

TEST(Rng, UniformIsOpenInterval) {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng r(3);
  const auto m = moments([&] { return r.normal(); }, 200000);
  EXPECT_NEAR(m.mean, 0.0, 4.0 / std::sqrt(200000.0));
  EXPECT_NEAR(m.var, 1.0, 0.02);
}

TEST(Rng, GammaMomentsBothBranches) {
  Rng r(4);
  for (double shape : {0.3, 1.0, 2.5, 40.0}) {
    const double rate = 3.0;
    const int n = 200000;
    const auto m = moments([&] { return r.gamma(shape, rate); }, n);
    const double sd = std::sqrt(shape) / rate;
    EXPECT_NEAR(m.mean, shape / rate, 4.0 * sd / std::sqrt(n)) << shape;
    EXPECT_NEAR(m.var, shape / (rate * rate), 0.05 * shape / (rate * rate)) << shape;
  }
}

TEST(Rng, ExponentialAndPoissonMeans) {
  Rng r(5);
  const int n = 200000;
  const auto e = moments([&] { return r.exponential(0.7); }, n);
  EXPECT_NEAR(e.mean, 0.7, 4.0 * 0.7 / std::sqrt(n));
  for (double lam : {0.5, 12.0, 95.0}) {
    const auto p = moments([&] { return static_cast<double>(r.poisson(lam)); }, 50000);
    EXPECT_NEAR(p.mean, lam, 4.0 * std::sqrt(lam / 50000.0)) << lam;
    EXPECT_NEAR(p.var, lam, 0.05 * lam) << lam;
  }
}

TEST(Rng, IndexCoversRange) {
  Rng r(6);
  std::vector<int> hits(3, 0);
  for (int i = 0; i < 30000; ++i) ++hits[r.index(3)];
  for (int h : hits) EXPECT_NEAR(h, 10000, 400);
}
