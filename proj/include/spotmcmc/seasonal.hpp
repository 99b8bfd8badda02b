#pragma once

// Deterministic seasonal trend S(t) = exp(f(t/260)) X(t) with
//   f(tau) = a1 + a2 tau + a3 sin 2 pi tau + a4 cos 2 pi tau
//               + a5 sin 4 pi tau + a6 cos 4 pi tau,
// tau measured in 260-day (weekday) years.

#include <Eigen/Dense>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "spotmcmc/model.hpp"

namespace spotmcmc {

inline constexpr double kDaysPerYear = 260.0;

using Date = std::chrono::year_month_day;

inline bool is_weekend(const Date& d) {
  const std::chrono::weekday w{std::chrono::sys_days{d}};
  return w == std::chrono::Saturday || w == std::chrono::Sunday;
}

/// Parses YYYY-MM-DD; throws std::invalid_argument otherwise.
inline Date parse_iso_date(const std::string& s) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw std::invalid_argument("not an ISO-8601 date: '" + s + "'");
  }
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw std::invalid_argument("invalid calendar date: '" + s + "'");
  return date;
}

inline std::string format_iso_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

/// Weekday-only dated price series. Rows falling on a weekend are dropped on
/// construction; `days` counts weekdays from the first retained date, so a
/// missing weekday (e.g. a holiday absent from the data) leaves a gap of 2.
class CalendarSeries {
 public:
  CalendarSeries() = default;

  CalendarSeries(const std::vector<Date>& dates, const std::vector<double>& prices, std::string currency = {})
      : currency_(std::move(currency)) {
    if (dates.size() != prices.size()) throw std::invalid_argument("CalendarSeries: dates/prices length mismatch");
    for (std::size_t i = 0; i < dates.size(); ++i) {
      if (i > 0 && !(std::chrono::sys_days{dates[i]} > std::chrono::sys_days{dates[i - 1]})) {
        throw std::invalid_argument("CalendarSeries: dates must be strictly increasing (row " + std::to_string(i) + ")");
      }
      if (!std::isfinite(prices[i])) throw std::invalid_argument("CalendarSeries: non-finite price");
      if (is_weekend(dates[i])) {
        ++weekend_rows_dropped_;
        continue;
      }
      dates_.push_back(dates[i]);
      prices_.push_back(prices[i]);
    }
    index_days();
  }

  [[nodiscard]] std::size_t size() const noexcept { return prices_.size(); }
  [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
  [[nodiscard]] const std::vector<double>& prices() const noexcept { return prices_; }
  /// Weekday count since the first retained observation.
  [[nodiscard]] const std::vector<double>& days() const noexcept { return days_; }
  [[nodiscard]] const std::string& currency() const noexcept { return currency_; }
  [[nodiscard]] std::size_t weekend_rows_dropped() const noexcept { return weekend_rows_dropped_; }

  [[nodiscard]] TimeGrid grid() const { return TimeGrid(days_); }

 private:
  void index_days() {
    days_.resize(dates_.size());
    if (dates_.empty()) return;
    const std::chrono::sys_days start{dates_.front()};
    for (std::size_t i = 0; i < dates_.size(); ++i) {
      const auto calendar = (std::chrono::sys_days{dates_[i]} - start).count();
      // Weekdays in [start, date): whole weeks contribute 5.
      long weeks = calendar / 7;
      long count = weeks * 5;
      std::chrono::sys_days cur = start + std::chrono::days{weeks * 7};
      while (cur < std::chrono::sys_days{dates_[i]}) {
        if (!is_weekend(Date{cur})) ++count;
        cur += std::chrono::days{1};
      }
      days_[i] = static_cast<double>(count);
    }
  }

  std::vector<Date> dates_;
  std::vector<double> prices_;
  std::vector<double> days_;
  std::string currency_;
  std::size_t weekend_rows_dropped_ = 0;
};

/// a_1..a_6 acting on log price, tau in years.
struct SeasonalCoefficients {
  std::array<double, 6> a{};

  [[nodiscard]] double operator()(double tau) const {
    const double w = 2.0 * std::numbers::pi * tau;
    return a[0] + a[1] * tau + a[2] * std::sin(w) + a[3] * std::cos(w) + a[4] * std::sin(2.0 * w) +
           a[5] * std::cos(2.0 * w);
  }

  friend bool operator==(const SeasonalCoefficients&, const SeasonalCoefficients&) = default;
};

/// Regressors {1, tau, sin 2 pi tau, cos 2 pi tau, sin 4 pi tau, cos 4 pi tau}.
inline std::array<double, 6> seasonal_basis(double tau) {
  const double w = 2.0 * std::numbers::pi * tau;
  return {1.0, tau, std::sin(w), std::cos(w), std::sin(2.0 * w), std::cos(2.0 * w)};
}

struct PriceRepair {
  std::vector<double> prices;
  std::vector<std::size_t> replaced;
};

/// Replaces non-positive prices by the average of the nearest positive
/// neighbours on each side (or the single available neighbour at the ends).
inline PriceRepair repair_nonpositive(const std::vector<double>& prices) {
  PriceRepair out{prices, {}};
  const std::size_t n = prices.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (prices[i] > 0.0) continue;
    out.replaced.push_back(i);
    double left = NAN;
    double right = NAN;
    for (std::size_t j = i; j-- > 0;) {
      if (prices[j] > 0.0) {
        left = prices[j];
        break;
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (prices[j] > 0.0) {
        right = prices[j];
        break;
      }
    }
    if (std::isnan(left) && std::isnan(right)) throw std::invalid_argument("no positive prices to repair from");
    out.prices[i] = std::isnan(left) ? right : std::isnan(right) ? left : 0.5 * (left + right);
  }
  return out;
}

struct SeasonalFit {
  SeasonalCoefficients coefficients;
  double residual_norm = 0.0;               ///< Euclidean norm of log-price residuals
  std::array<double, 6> standard_errors{};  ///< OLS standard errors
  std::vector<std::size_t> replaced;        ///< rows whose price was repaired
};

/// Least-squares fit of log price on the seasonal basis.
inline SeasonalFit fit_seasonal(const std::vector<double>& days, const std::vector<double>& prices) {
  if (days.size() != prices.size()) throw std::invalid_argument("fit_seasonal: days/prices length mismatch");
  const std::size_t n = prices.size();
  if (n < 7) throw std::invalid_argument("fit_seasonal: at least 7 observations required");
  auto repaired = repair_nonpositive(prices);

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 6);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = seasonal_basis(days[i] / kDaysPerYear);
    for (int c = 0; c < 6; ++c) design(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)];
    y(static_cast<Eigen::Index>(i)) = std::log(repaired.prices[i]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) throw std::runtime_error("fit_seasonal: singular design matrix (rank " + std::to_string(qr.rank()) + ")");
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd resid = y - design * coef;

  SeasonalFit fit;
  for (int c = 0; c < 6; ++c) fit.coefficients.a[static_cast<std::size_t>(c)] = coef(c);
  fit.residual_norm = resid.norm();
  const Eigen::MatrixXd cov = (design.transpose() * design).inverse();
  const double s2 = resid.squaredNorm() / static_cast<double>(n - 6);
  for (int c = 0; c < 6; ++c) fit.standard_errors[static_cast<std::size_t>(c)] = std::sqrt(s2 * cov(c, c));
  fit.replaced = std::move(repaired.replaced);
  return fit;
}

inline SeasonalFit fit_seasonal(const CalendarSeries& series) { return fit_seasonal(series.days(), series.prices()); }

/// X(t) = S(t) exp(-f(t/260)).
inline std::vector<double> deseasonalize(const std::vector<double>& days, const std::vector<double>& prices,
                                         const SeasonalCoefficients& coeffs) {
  if (days.size() != prices.size()) throw std::invalid_argument("deseasonalize: days/prices length mismatch");
  std::vector<double> x(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) x[i] = prices[i] * std::exp(-coeffs(days[i] / kDaysPerYear));
  return x;
}

/// Deseasonalised path on the weekday grid; non-positive prices are repaired
/// first.
inline PricePath deseasonalize(const CalendarSeries& series, const SeasonalCoefficients& coeffs) {
  const auto repaired = repair_nonpositive(series.prices());
  return PricePath(series.grid(), deseasonalize(series.days(), repaired.prices, coeffs));
}

/// S(t) = X(t) exp(f(t/260)).
inline std::vector<double> reseasonalize(const std::vector<double>& days, const std::vector<double>& values,
                                         const SeasonalCoefficients& coeffs) {
  if (days.size() != values.size()) throw std::invalid_argument("reseasonalize: days/values length mismatch");
  std::vector<double> s(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) s[i] = values[i] * std::exp(coeffs(days[i] / kDaysPerYear));
  return s;
}

inline std::vector<double> reseasonalize(const PricePath& path, const SeasonalCoefficients& coeffs) {
  return reseasonalize(std::vector<double>(path.grid.times().begin(), path.grid.times().end()), path.values, coeffs);
}

}  // namespace spotmcmc
