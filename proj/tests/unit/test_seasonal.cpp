#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "spotmcmc/rng.hpp"
#include "spotmcmc/seasonal.hpp"

using namespace spotmcmc;
using namespace std::chrono;

namespace {

std::vector<Date> weekdays_from(Date start, std::size_t n) {
  std::vector<Date> out;
  sys_days d{start};
  while (out.size() < n) {
    if (!is_weekend(Date{d})) out.push_back(Date{d});
    d += days{1};
  }
  return out;
}

std::vector<double> day_index(std::size_t n) {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<double>(i);
  return d;
}

const SeasonalCoefficients kTruth{{3.2, 0.15, 0.3, -0.12, 0.07, 0.04}};

}  // namespace

TEST(Calendar, IsoDates) {
  const auto d = parse_iso_date("2024-02-29");
  EXPECT_EQ(format_iso_date(d), "2024-02-29");
  EXPECT_THROW(parse_iso_date("2023-02-29"), std::invalid_argument);
  EXPECT_THROW(parse_iso_date("2023-2-01"), std::invalid_argument);
  EXPECT_THROW(parse_iso_date("2023-02-01x"), std::invalid_argument);
  EXPECT_TRUE(is_weekend(parse_iso_date("2024-06-15")));
  EXPECT_FALSE(is_weekend(parse_iso_date("2024-06-14")));
}

TEST(Calendar, WeekendsDroppedAndWeekdaysCounted) {
  // Fri, Sat, Mon, Tue, (Wed missing), Thu
  const std::vector<Date> dates{parse_iso_date("2024-06-14"), parse_iso_date("2024-06-15"),
                                parse_iso_date("2024-06-17"), parse_iso_date("2024-06-18"),
                                parse_iso_date("2024-06-20")};
  const CalendarSeries s(dates, {1, 2, 3, 4, 5});
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(s.weekend_rows_dropped(), 1u);
  EXPECT_EQ(s.days(), (std::vector<double>{0, 1, 2, 4}));
  EXPECT_THROW(CalendarSeries({dates[1], dates[0]}, {1, 2}), std::invalid_argument);
}

TEST(Calendar, LongRangeWeekdayCount) {
  const auto dates = weekdays_from(parse_iso_date("2019-03-06"), 800);
  const CalendarSeries s(dates, std::vector<double>(800, 1.0));
  for (std::size_t i = 0; i < s.size(); ++i) ASSERT_EQ(s.days()[i], static_cast<double>(i));
}

TEST(Seasonal, ConstantSeries) {
  const std::size_t n = 300;
  const auto fit = fit_seasonal(day_index(n), std::vector<double>(n, std::exp(2.5)));
  EXPECT_NEAR(fit.coefficients.a[0], 2.5, 1e-10);
  for (std::size_t k = 1; k < 6; ++k) EXPECT_NEAR(fit.coefficients.a[k], 0.0, 1e-10);
}

TEST(Seasonal, NoiseFreeRecovery) {
  const std::size_t n = 1500;
  const auto days = day_index(n);
  const auto prices = reseasonalize(days, std::vector<double>(n, 1.0), kTruth);
  const auto fit = fit_seasonal(days, prices);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(fit.coefficients.a[k], kTruth.a[k], 1e-8);
  EXPECT_LT(fit.residual_norm, 1e-8);
}

TEST(Seasonal, EquivariantUnderScaling) {
  Rng r(3);
  const std::size_t n = 400;
  const auto days = day_index(n);
  std::vector<double> prices(n);
  for (std::size_t i = 0; i < n; ++i) prices[i] = std::exp(kTruth(days[i] / kDaysPerYear) + 0.1 * r.normal());
  auto scaled = prices;
  for (auto& p : scaled) p *= std::exp(0.7);
  const auto a = fit_seasonal(days, prices).coefficients;
  const auto b = fit_seasonal(days, scaled).coefficients;
  EXPECT_NEAR(b.a[0], a.a[0] + 0.7, 1e-10);
  for (std::size_t k = 1; k < 6; ++k) EXPECT_NEAR(b.a[k], a.a[k], 1e-10);
}

TEST(Seasonal, TooFewOrSingular) {
  EXPECT_THROW(fit_seasonal(day_index(6), std::vector<double>(6, 1.0)), std::invalid_argument);
  // Every observation at the same phase of the year: the sine/cosine columns
  // are collinear with the intercept.
  std::vector<double> days;
  for (int i = 0; i < 10; ++i) days.push_back(260.0 * i);
  EXPECT_THROW(fit_seasonal(days, std::vector<double>(10, 2.0)), std::runtime_error);
}

TEST(Seasonal, RoundTripsAndSpecialCases) {
  Rng r(8);
  const std::size_t n = 100;
  const auto days = day_index(n);
  std::vector<double> s(n);
  for (auto& v : s) v = r.uniform(10.0, 90.0);
  const SeasonalCoefficients zero{};
  EXPECT_EQ(deseasonalize(days, s, zero), s);
  const auto back = reseasonalize(days, deseasonalize(days, s, kTruth), kTruth);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back[i], s[i], 1e-12 * s[i]);
  const SeasonalCoefficients level{{0.4, 0, 0, 0, 0, 0}};
  EXPECT_NEAR(deseasonalize(days, s, level)[5], s[5] / std::exp(0.4), 1e-12);
  const SeasonalCoefficients trend{{0, 0.3, 0, 0, 0, 0}};
  EXPECT_NEAR(deseasonalize(days, s, trend)[52], s[52] * std::exp(-0.3 * 52.0 / 260.0), 1e-12);
}

TEST(Seasonal, NonPositivePricesRepaired) {
  const auto rep = repair_nonpositive({5.0, -1.0, 0.0, 9.0, 4.0, -2.0});
  EXPECT_EQ(rep.replaced, (std::vector<std::size_t>{1, 2, 5}));
  EXPECT_DOUBLE_EQ(rep.prices[1], 7.0);
  EXPECT_DOUBLE_EQ(rep.prices[2], 7.0);
  EXPECT_DOUBLE_EQ(rep.prices[5], 4.0);

  const auto dates = weekdays_from(parse_iso_date("2020-01-06"), 50);
  std::vector<double> prices(50, 30.0);
  prices[10] = -5.0;
  const CalendarSeries series(dates, prices);
  EXPECT_EQ(series.prices()[10], -5.0);
  const auto fit = fit_seasonal(series);
  EXPECT_EQ(fit.replaced, (std::vector<std::size_t>{10}));
  const auto x = deseasonalize(series, fit.coefficients);
  for (double v : x.values) EXPECT_GT(v, 0.0);
}
