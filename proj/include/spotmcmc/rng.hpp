#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace spotmcmc {

/// SplitMix64 finaliser; used to derive decorrelated stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream `stream` derived from `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// FNV-1a, for naming streams by string.
constexpr std::uint64_t stream_id(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seedable random source. The engine is mt19937_64 and all variates are
/// produced by hand-written transforms of its output so that a given seed
/// yields the same sequence on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent child stream; does not advance this generator.
  [[nodiscard]] Rng stream(std::uint64_t id) const { return Rng(derive_seed(seed_of_this(), id)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  /// Standard normal via the polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Exponential with the given mean.
  double exponential(double mean) { return -mean * std::log(uniform()); }

  /// Gamma(shape, rate): mean shape/rate. Marsaglia-Tsang.
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  /// InverseGamma(shape, scale): mean scale/(shape-1).
  double inverse_gamma(double shape, double scale) { return scale / gamma(shape, 1.0); }

  /// Poisson by products of uniforms. Large means are split into
  /// independent halves (Poisson is additive), so the draw stays exact.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) return poisson(mean / 2.0) + poisson(mean / 2.0);
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

 private:
  std::uint64_t seed_of_this() const {
    // Snapshot of the engine state hash: copying the engine and drawing
    // keeps this const.
    auto copy = engine_;
    return copy();
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spotmcmc
