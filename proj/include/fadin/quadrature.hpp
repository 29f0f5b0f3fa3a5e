#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>
#include <algorithm>

namespace fadin::quad {

namespace detail {

template <typename F>
double simpson_step(const F& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10,
                        int max_depth = 50) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

/// Same as adaptive_simpson but first splits [a, b] at the given interior
/// breakpoints (kinks, discontinuities, narrow peaks). Points outside (a, b)
/// are ignored.
template <typename F>
double adaptive_simpson_split(const F& f, double a, double b,
                              std::vector<double> breaks, double tol = 1e-10) {
  if (!(b > a)) return 0.0;
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                              [&](double x) { return !(x > a && x < b); }),
               breaks.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = 0.0;
  double lo = a;
  const double piece_tol = tol / static_cast<double>(breaks.size() + 1);
  for (double x : breaks) {
    total += adaptive_simpson(f, lo, x, piece_tol);
    lo = x;
  }
  total += adaptive_simpson(f, lo, b, piece_tol);
  return total;
}

}  // namespace fadin::quad
