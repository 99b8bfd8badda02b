#pragma once

// Model types and the exact transition mathematics of the superposed
// Ornstein-Uhlenbeck model
//
//   X(t) = Y_0(t) + sum_{i>=1} w_i Y_i(t),
//
// where Y_0 is a Gaussian OU process and each Y_i is a non-negative OU
// process driven by a compound Poisson process with Ex(beta_i) marks.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>


namespace spotmcmc {

// ---------------------------------------------------------------------------
// Time grid

/// Observation times t_0 = 0 < t_1 < ... < t_N, in days.
class TimeGrid {
 public:
  TimeGrid() : times_{0.0}, uniform_step_(1.0) {}

  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty()) throw std::invalid_argument("TimeGrid: no observation times");
    if (times_.front() != 0.0) throw std::invalid_argument("TimeGrid: t_0 must be 0");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i] > times_[i - 1]) || !std::isfinite(times_[i])) {
        throw std::invalid_argument("TimeGrid: times must be finite and strictly increasing (index " +
                                    std::to_string(i) + ")");
      }
    }
    detect_uniform();
  }

  /// N+1 equally spaced points 0, dt, ..., N dt.
  static TimeGrid regular(std::size_t steps, double dt = 1.0) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) t[i] = static_cast<double>(i) * dt;
    return TimeGrid(std::move(t));
  }

  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  /// Number of increments N.
  [[nodiscard]] std::size_t steps() const noexcept { return times_.size() - 1; }
  [[nodiscard]] double horizon() const noexcept { return times_.back(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return times_[i]; }
  /// Delta_i = t_i - t_{i-1}, for i >= 1.
  [[nodiscard]] double delta(std::size_t i) const noexcept { return times_[i] - times_[i - 1]; }
  [[nodiscard]] std::span<const double> times() const noexcept { return times_; }
  /// Common step when the grid is equidistant.
  [[nodiscard]] std::optional<double> uniform_step() const noexcept { return uniform_step_; }

  /// Index of the first grid time >= t (size() if none).
  [[nodiscard]] std::size_t first_at_or_after(double t) const noexcept {
    return static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.times_ == b.times_; }

 private:
  void detect_uniform() {
    uniform_step_.reset();
    if (times_.size() < 2) {
      uniform_step_ = 1.0;
      return;
    }
    const double dt = times_[1] - times_[0];
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (std::abs((times_[i] - times_[i - 1]) - dt) > 1e-12 * std::max(1.0, dt)) return;
    }
    uniform_step_ = dt;
  }

  std::vector<double> times_;
  std::optional<double> uniform_step_;
};

// ---------------------------------------------------------------------------
// Model specification

enum class IntensityKind { constant, periodic };

struct JumpComponentSpec {
  int sign = +1;  ///< w_i, +1 or -1
  IntensityKind kind = IntensityKind::constant;
  double period = 130.0;  ///< k_i in days; only used by the periodic kind

  friend bool operator==(const JumpComponentSpec&, const JumpComponentSpec&) = default;
};

/// Number, signs and intensity kinds of the jump components. Components of
/// equal sign must be adjacent; consecutive members of a same-sign group are
/// ordered by decreasing mean-reversion time (rho_{i+1} < rho_i).
struct ModelSpec {
  std::vector<JumpComponentSpec> components;

  [[nodiscard]] std::size_t n() const noexcept { return components.size(); }

  /// `positive` components of sign +1 followed by `negative` of sign -1, all
  /// with constant intensity.
  static ModelSpec with_signs(std::size_t positive, std::size_t negative) {
    ModelSpec s;
    for (std::size_t i = 0; i < positive; ++i) s.components.push_back({+1, IntensityKind::constant, 130.0});
    for (std::size_t i = 0; i < negative; ++i) s.components.push_back({-1, IntensityKind::constant, 130.0});
    return s;
  }

  /// True when at least two components share a sign.
  [[nodiscard]] bool ordered() const noexcept {
    for (std::size_t i = 1; i < components.size(); ++i) {
      if (components[i].sign == components[i - 1].sign) return true;
    }
    return false;
  }

  /// The component whose rho bounds component i from above, if any.
  [[nodiscard]] std::optional<std::size_t> ordered_predecessor(std::size_t i) const noexcept {
    if (i == 0 || i >= components.size()) return std::nullopt;
    if (components[i].sign == components[i - 1].sign) return i - 1;
    return std::nullopt;
  }

  [[nodiscard]] std::size_t positive_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(components.begin(), components.end(), [](const auto& c) { return c.sign > 0; }));
  }

  [[nodiscard]] std::size_t negative_count() const noexcept { return n() - positive_count(); }

  void validate() const {
    for (std::size_t i = 0; i < components.size(); ++i) {
      const auto& c = components[i];
      if (c.sign != 1 && c.sign != -1) throw std::invalid_argument("ModelSpec: sign must be +1 or -1");
      if (c.kind == IntensityKind::periodic && !(c.period > 0.0 && std::isfinite(c.period))) {
        throw std::invalid_argument("ModelSpec: periodic intensity needs a positive period");
      }
      for (std::size_t j = i + 2; j < components.size(); ++j) {
        if (components[j].sign == c.sign && components[j - 1].sign != c.sign) {
          throw std::invalid_argument("ModelSpec: components of equal sign must be adjacent");
        }
      }
    }
  }

  /// Short label such as "2-OU(+)" or "3-OU(+,-)[I1]".
  [[nodiscard]] std::string label() const {
    std::string s = std::to_string(n() + 1) + "-OU(";
    std::string periodic;
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (i) s += ",";
      s += components[i].sign > 0 ? "+" : "-";
      if (components[i].kind == IntensityKind::periodic) periodic += "I" + std::to_string(i + 1);
    }
    s += ")";
    if (!periodic.empty()) s += "[" + periodic + "]";
    return s;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// ---------------------------------------------------------------------------
// Parameters

/// rho = exp(-1/lambda) <-> lambda.
inline double rho_to_lambda(double rho) { return -1.0 / std::log(rho); }
inline double lambda_to_rho(double lambda) { return std::exp(-1.0 / lambda); }

struct JumpParams {
  double rho = 0.5;    ///< exp(-1/lambda_i)
  double beta = 0.5;   ///< mean jump size
  double eta = 0.1;    ///< (maximum) jump rate per day
  double theta = 0.0;  ///< phase of the periodic intensity, days
  double delta = 1.0;  ///< shape exponent of the periodic intensity

  [[nodiscard]] double lambda() const { return rho_to_lambda(rho); }
  friend bool operator==(const JumpParams&, const JumpParams&) = default;
};

struct Params {
  double mu = 1.0;
  double sigma2 = 0.01;
  double rho0 = 0.8;
  std::vector<JumpParams> jumps;

  [[nodiscard]] double lambda0() const { return rho_to_lambda(rho0); }
  friend bool operator==(const Params&, const Params&) = default;
};

inline bool in_unit_interval(double r) { return r > 0.0 && r < 1.0; }

/// Whether `p` satisfies every parameter invariant for `spec`.
inline bool params_valid(const Params& p, const ModelSpec& spec) {
  if (p.jumps.size() != spec.n()) return false;
  if (!std::isfinite(p.mu) || !(p.sigma2 > 0.0) || !std::isfinite(p.sigma2) || !in_unit_interval(p.rho0)) {
    return false;
  }
  for (std::size_t i = 0; i < p.jumps.size(); ++i) {
    const auto& j = p.jumps[i];
    if (!in_unit_interval(j.rho) || !(j.beta > 0.0) || !std::isfinite(j.beta)) return false;
    if (!(j.eta > 0.0) || !std::isfinite(j.eta)) return false;
    if (spec.components[i].kind == IntensityKind::periodic) {
      if (!std::isfinite(j.theta) || !(j.delta > 0.0) || !std::isfinite(j.delta)) return false;
    }
    if (auto prev = spec.ordered_predecessor(i); prev && !(j.rho < p.jumps[*prev].rho)) return false;
  }
  return true;
}

inline void validate_params(const Params& p, const ModelSpec& spec) {
  if (!params_valid(p, spec)) throw std::invalid_argument("Params violate the model invariants");
}

// ---------------------------------------------------------------------------
// Marked point process

struct Jump {
  double time = 0.0;  ///< tau_j, days
  double size = 0.0;  ///< xi_j > 0
  friend bool operator==(const Jump&, const Jump&) = default;
};

/// Jump times with positive marks on [0, T], kept sorted by time.
class MarkedPointProcess {
 public:
  MarkedPointProcess() = default;
  explicit MarkedPointProcess(double horizon, std::vector<Jump> jumps = {}) : horizon_(horizon), jumps_(std::move(jumps)) {
    if (!(horizon_ >= 0.0)) throw std::invalid_argument("MarkedPointProcess: negative horizon");
    std::sort(jumps_.begin(), jumps_.end(), [](const Jump& a, const Jump& b) { return a.time < b.time; });
    for (const auto& j : jumps_) check(j);
  }

  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t size() const noexcept { return jumps_.size(); }
  [[nodiscard]] bool empty() const noexcept { return jumps_.empty(); }
  [[nodiscard]] const Jump& operator[](std::size_t i) const noexcept { return jumps_[i]; }
  [[nodiscard]] auto begin() const noexcept { return jumps_.begin(); }
  [[nodiscard]] auto end() const noexcept { return jumps_.end(); }
  [[nodiscard]] const std::vector<Jump>& jumps() const noexcept { return jumps_; }

  [[nodiscard]] double total_size() const noexcept {
    double s = 0.0;
    for (const auto& j : jumps_) s += j.size;
    return s;
  }

  /// Inserts keeping time order; returns the new index.
  std::size_t insert(Jump j) {
    check(j);
    auto it = std::upper_bound(jumps_.begin(), jumps_.end(), j.time,
                               [](double t, const Jump& x) { return t < x.time; });
    const auto idx = static_cast<std::size_t>(it - jumps_.begin());
    jumps_.insert(it, j);
    return idx;
  }

  void erase(std::size_t i) { jumps_.erase(jumps_.begin() + static_cast<std::ptrdiff_t>(i)); }

  /// Replaces jump i; the new time must keep the sequence sorted.
  void replace(std::size_t i, Jump j) {
    check(j);
    if ((i > 0 && j.time < jumps_[i - 1].time) || (i + 1 < jumps_.size() && j.time > jumps_[i + 1].time)) {
      throw std::invalid_argument("MarkedPointProcess: replacement breaks time order");
    }
    jumps_[i] = j;
  }

  void set_size(std::size_t i, double size) {
    if (!(size > 0.0)) throw std::invalid_argument("MarkedPointProcess: marks must be positive");
    jumps_[i].size = size;
  }

  friend bool operator==(const MarkedPointProcess&, const MarkedPointProcess&) = default;

 private:
  void check(const Jump& j) const {
    if (!(j.size > 0.0) || !std::isfinite(j.size)) throw std::invalid_argument("MarkedPointProcess: marks must be positive");
    if (!(j.time >= 0.0 && j.time <= horizon_)) throw std::invalid_argument("MarkedPointProcess: jump time outside [0, T]");
  }

  double horizon_ = 0.0;
  std::vector<Jump> jumps_;
};

// ---------------------------------------------------------------------------
// Price paths

/// Observed (deseasonalised) values on a grid, optionally with the latent
/// decomposition Y_0..Y_n.
struct PricePath {
  TimeGrid grid;
  std::vector<double> values;
  std::vector<std::vector<double>> components;

  PricePath() : values(1, 0.0) {}
  PricePath(TimeGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("PricePath: values/grid length mismatch");
  }
  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

// ---------------------------------------------------------------------------
// Gaussian OU transition

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Conditional mean and variance of Y(t+s) given Y(t) = y for the Gaussian
/// OU process with level mu, time scale lambda0 and variance rate sigma2.
inline Moments gaussian_ou_moments(double y, double s, double mu, double lambda0, double sigma2) {
  if (!std::isfinite(y) || !std::isfinite(s) || !std::isfinite(mu) || !std::isfinite(lambda0) ||
      !std::isfinite(sigma2)) {
    throw std::invalid_argument("gaussian_ou_moments: non-finite input");
  }
  if (s < 0.0 || !(lambda0 > 0.0) || sigma2 < 0.0) {
    throw std::invalid_argument("gaussian_ou_moments: need s >= 0, lambda0 > 0, sigma2 >= 0");
  }
  const double decay = std::exp(-s / lambda0);
  return {mu + (y - mu) * decay, -0.5 * lambda0 * sigma2 * std::expm1(-2.0 * s / lambda0)};
}

// ---------------------------------------------------------------------------
// Jump OU paths

/// Y(t_j) = sum_{tau <= t_j} xi exp(-(t_j - tau)/lambda), zero initial value.
inline std::vector<double> jump_ou_path(const MarkedPointProcess& phi, double lambda, const TimeGrid& grid) {
  if (!(lambda > 0.0)) throw std::invalid_argument("jump_ou_path: lambda must be positive");
  std::vector<double> y(grid.size(), 0.0);
  const double rate = 1.0 / lambda;
  const auto step = grid.uniform_step();
  const double step_decay = step ? std::exp(-rate * *step) : 0.0;
  std::size_t next = 0;
  double level = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (j > 0) level *= step ? step_decay : std::exp(-rate * grid.delta(j));
    while (next < phi.size() && phi[next].time <= grid[j]) {
      level += phi[next].size * std::exp(-rate * (grid[j] - phi[next].time));
      ++next;
    }
    y[j] = level;
  }
  return y;
}

/// X = sum_i w_i Y_i pointwise; `signs` includes w_0.
inline std::vector<double> superpose(const std::vector<std::vector<double>>& components, std::span<const int> signs) {
  if (components.empty()) throw std::invalid_argument("superpose: no components");
  if (signs.size() != components.size()) throw std::invalid_argument("superpose: one sign per component required");
  const std::size_t len = components.front().size();
  std::vector<double> x(len, 0.0);
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].size() != len) throw std::invalid_argument("superpose: length mismatch");
    for (std::size_t j = 0; j < len; ++j) x[j] += signs[i] * components[i][j];
  }
  return x;
}

/// The diffusion part z = x - sum_{i>=1} w_i y_i.
inline std::vector<double> remove_jumps(std::span<const double> x, const std::vector<std::vector<double>>& jump_paths,
                                        const ModelSpec& spec) {
  if (jump_paths.size() != spec.n()) throw std::invalid_argument("remove_jumps: one path per jump component required");
  std::vector<double> z(x.begin(), x.end());
  for (std::size_t i = 0; i < jump_paths.size(); ++i) {
    if (jump_paths[i].size() != z.size()) throw std::invalid_argument("remove_jumps: length mismatch");
    const double w = spec.components[i].sign;
    for (std::size_t j = 0; j < z.size(); ++j) z[j] -= w * jump_paths[i][j];
  }
  return z;
}

// ---------------------------------------------------------------------------
// Intensity

/// Jump intensity I(theta, t): constant eta, or the periodic form
/// eta * [2 / (1 + |sin(pi (t - theta) / k)|) - 1]^delta.
struct Intensity {
  IntensityKind kind = IntensityKind::constant;
  double eta = 0.1;
  double theta = 0.0;
  double delta = 1.0;
  double period = 130.0;

  static Intensity constant(double eta) { return {IntensityKind::constant, eta, 0.0, 1.0, 130.0}; }
  static Intensity periodic(double eta, double theta, double delta, double period) {
    return {IntensityKind::periodic, eta, theta, delta, period};
  }
  static Intensity of(const JumpComponentSpec& c, const JumpParams& p) {
    return {c.kind, p.eta, p.theta, p.delta, c.period};
  }
};

namespace detail {

/// Periodic shape on a half period measured from the peak at theta.
inline double periodic_shape(double u, double period, double delta) {
  const double s = std::abs(std::sin(std::numbers::pi * u / period));
  const double bracket = (1.0 - s) / (1.0 + s);
  if (bracket <= 0.0) return 0.0;
  return std::pow(bracket, delta);
}

/// W(a) = integral of w^(2 delta) / (1 + w^2) over [0, a], 0 <= a <= 1: the
/// alternating power series below kSeriesEdge, Gauss-Kronrod above it.
inline double tangent_power_integral(double a, double delta) {
  constexpr double kSeriesEdge = 0.7;
  const double e = 2.0 * delta + 1.0;
  const double b = std::min(a, kSeriesEdge);
  double sum = 0.0;
  if (b > 0.0) {
    const double b2 = b * b;
    double power = std::pow(b, e);
    for (int n = 0; n < 400; ++n) {
      const double term = power / (e + 2.0 * n);
      sum += (n % 2 == 0) ? term : -term;
      if (term < 1e-17 * sum) break;
      power *= b2;
    }
  }
  if (a > kSeriesEdge) {
    auto f = [delta](double w) { return std::pow(w, 2.0 * delta) / (1.0 + w * w); };
    sum += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, kSeriesEdge, a, 6, 1e-11);
  }
  return sum;
}

/// Integral of the periodic shape over [0, u], 0 <= u <= period/2. With
/// y = pi/4 - pi v/(2 period) the shape is tan(y)^(2 delta), and w = tan y
/// turns the integral into W(1) - W(tan y_u), scaled by 2 period/pi.
inline double periodic_shape_partial(double u, double period, double delta) {
  if (u <= 0.0) return 0.0;
  const double y = std::max(0.0, 0.25 * std::numbers::pi - 0.5 * std::numbers::pi * u / period);
  return 2.0 * period / std::numbers::pi * (tangent_power_integral(1.0, delta) - tangent_power_integral(std::tan(y), delta));
}

}  // namespace detail

inline double intensity_eval(const Intensity& in, double t) {
  if (in.kind == IntensityKind::constant) return in.eta;
  return in.eta * detail::periodic_shape(t - in.theta, in.period, in.delta);
}

/// Expected number of jumps on [t0, t1]: exact for the constant kind, to
/// near machine precision for the periodic kind.
inline double intensity_integral(const Intensity& in, double t0, double t1) {
  if (!(t0 >= 0.0) || !(t1 >= t0)) throw std::invalid_argument("intensity_integral: need 0 <= t0 <= t1");
  if (t1 == t0) return 0.0;
  if (in.kind == IntensityKind::constant) return in.eta * (t1 - t0);

  const double k = in.period;
  const double half = detail::periodic_shape_partial(0.5 * k, k, in.delta);
  const double full = 2.0 * half;

  // Primitive measured from theta: G(t) = floor((t - theta)/k) * full + H(offset).
  auto primitive = [&](double t) {
    const double shifted = t - in.theta;
    const double whole = std::floor(shifted / k);
    double offset = shifted - whole * k;
    if (offset < 0.0) offset = 0.0;
    if (offset > k) offset = k;
    double partial = 0.0;
    if (offset <= 0.5 * k) {
      partial = detail::periodic_shape_partial(offset, k, in.delta);
    } else {
      partial = full - detail::periodic_shape_partial(k - offset, k, in.delta);
    }
    return whole * full + partial;
  };
  return in.eta * (primitive(t1) - primitive(t0));
}

// ---------------------------------------------------------------------------
// Observation likelihood

/// Per-increment transition coefficients of the Gaussian OU component:
/// decay_i = exp(-Delta_i/lambda0) and unit_var_i = lambda0 (1 - decay_i^2)/2,
/// so that Sigma_i^2 = sigma2 * unit_var_i.
struct OuTransitions {
  std::vector<double> decay;
  std::vector<double> unit_var;
  double sum_log_unit_var = 0.0;

  OuTransitions() = default;
  OuTransitions(const TimeGrid& grid, double rho0) { reset(grid, rho0); }

  void reset(const TimeGrid& grid, double rho0) {
    const std::size_t n = grid.steps();
    decay.resize(n + 1);
    unit_var.resize(n + 1);
    const double log_rho = std::log(rho0);
    const double lambda0 = -1.0 / log_rho;
    if (n == 0) {
      sum_log_unit_var = 0.0;
      return;
    }
    if (auto dt = grid.uniform_step()) {
      const double d = std::exp(*dt * log_rho);
      const double v = -0.5 * lambda0 * std::expm1(2.0 * *dt * log_rho);
      std::fill(decay.begin() + 1, decay.end(), d);
      std::fill(unit_var.begin() + 1, unit_var.end(), v);
      sum_log_unit_var = static_cast<double>(n) * std::log(v);
    } else {
      sum_log_unit_var = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        decay[i] = std::exp(grid.delta(i) * log_rho);
        unit_var[i] = -0.5 * lambda0 * std::expm1(2.0 * grid.delta(i) * log_rho);
        sum_log_unit_var += std::log(unit_var[i]);
      }
    }
    decay[0] = 1.0;
    unit_var[0] = 1.0;
  }
};

/// Sum over increments of r_i^2 / unit_var_i with
/// r_i = z_i - mu - (z_{i-1} - mu) decay_i.
inline double weighted_sq_residuals(std::span<const double> z, double mu, const OuTransitions& tr) {
  double s = 0.0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    const double r = z[i] - mu - (z[i - 1] - mu) * tr.decay[i];
    s += r * r / tr.unit_var[i];
  }
  return s;
}

/// Gaussian OU log-likelihood of the diffusion series z.
inline double ou_log_likelihood(std::span<const double> z, double mu, double sigma2, const OuTransitions& tr) {
  const double n = static_cast<double>(z.size() - 1);
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * tr.sum_log_unit_var -
         0.5 * weighted_sq_residuals(z, mu, tr) / sigma2;
}

/// log l(x | mu, lambda0, sigma, Y_1..Y_n): product of exact Gaussian OU
/// transitions of z = x - sum w_i y_i.
inline double log_likelihood_obs(const PricePath& x, const Params& params, const ModelSpec& spec,
                                 const std::vector<std::vector<double>>& jump_paths) {
  const auto z = remove_jumps(x.values, jump_paths, spec);
  const OuTransitions tr(x.grid, params.rho0);
  return ou_log_likelihood(z, params.mu, params.sigma2, tr);
}

/// Jump paths of every component for the given latent processes.
inline std::vector<std::vector<double>> jump_paths(const std::vector<MarkedPointProcess>& phis, const Params& params,
                                                   const TimeGrid& grid) {
  if (phis.size() != params.jumps.size()) throw std::invalid_argument("jump_paths: one process per component required");
  std::vector<std::vector<double>> out;
  out.reserve(phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i) out.push_back(jump_ou_path(phis[i], params.jumps[i].lambda(), grid));
  return out;
}

}  // namespace spotmcmc
