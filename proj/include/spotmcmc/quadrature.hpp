#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace spotmcmc {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) {
    throw QuadratureError("adaptive Simpson did not converge on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "]");
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance
/// `tol`. Throws QuadratureError when the recursion depth is exhausted.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-8, int max_depth = 60) {
  if (b == a) return 0.0;
  if (b < a) return -adaptive_simpson(f, b, a, tol, max_depth);
  // A few fixed panels first, so a coincidental agreement of the coarsest
  // estimates cannot terminate the refinement.
  constexpr int panels = 8;
  const double h = (b - a) / panels;
  double total = 0.0;
  double left = a;
  double f_left = f(a);
  for (int i = 1; i <= panels; ++i) {
    const double right = i == panels ? b : a + i * h;
    const double f_right = f(right);
    const double m = 0.5 * (left + right);
    const double fm = f(m);
    const double whole = (right - left) / 6.0 * (f_left + 4.0 * fm + f_right);
    total += detail::simpson_step(f, left, f_left, right, f_right, m, fm, whole, tol / panels,
                                  max_depth);
    left = right;
    f_left = f_right;
  }
  return total;
}

}  // namespace spotmcmc
