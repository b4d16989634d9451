#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace landmark::quad {

struct QuadratureError : std::runtime_error {
  explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Gauss 7 / Kronrod 15 pair on [-1, 1] (QUADPACK abscissae/weights).
inline constexpr double kronrod_x[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993945, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kronrod_w[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double gauss_w[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

template <class F>
std::pair<double, double> gk15(F&& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double gauss = 0.0, kronrod = 0.0;
  for (int i = 0; i < 8; ++i) {
    double fv;
    if (i == 7) {
      fv = f(c);
      kronrod += kronrod_w[i] * fv;
      gauss += gauss_w[3] * fv;
    } else {
      const double f1 = f(c - h * kronrod_x[i]);
      const double f2 = f(c + h * kronrod_x[i]);
      fv = f1 + f2;
      kronrod += kronrod_w[i] * fv;
      if (i % 2 == 1) gauss += gauss_w[i / 2] * fv;
    }
    if (!std::isfinite(fv))
      throw QuadratureError("integrand non-finite at an interior node near r=" +
                            std::to_string(c));
  }
  kronrod *= h;
  gauss *= h;
  return {kronrod, std::abs(kronrod - gauss)};
}

template <class F>
double adaptive_impl(F&& f, double lo, double hi, double abs_tol,
                     double rel_tol, int depth) {
  auto [value, err] = gk15(f, lo, hi);
  if (err <= std::max(abs_tol, rel_tol * std::abs(value)) || depth <= 0)
    return value;
  const double mid = 0.5 * (lo + hi);
  return adaptive_impl(f, lo, mid, 0.5 * abs_tol, rel_tol, depth - 1) +
         adaptive_impl(f, mid, hi, 0.5 * abs_tol, rel_tol, depth - 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [lo, hi]. The integrand must
// be finite at every node; singular endpoints are handled by the callers
// (panel splitting plus log substitution, see completeness.hpp).
template <class F>
double integrate(F&& f, double lo, double hi, double abs_tol = 1e-10,
                 double rel_tol = 1e-10, int max_depth = 48) {
  if (!(lo < hi)) return 0.0;
  return detail::adaptive_impl(f, lo, hi, abs_tol, rel_tol, max_depth);
}

// Same, integrating in t = log r: integral of f(r) dr over [lo, hi] with
// 0 < lo < hi. Keeps node spacing proportional to r, which resolves
// power-law behavior near a singular left endpoint.
template <class F>
double integrate_log(F&& f, double lo, double hi, double abs_tol = 1e-10,
                     double rel_tol = 1e-10, int max_depth = 48) {
  if (!(lo < hi)) return 0.0;
  if (!(lo > 0.0)) throw QuadratureError("log-substituted panel needs lo > 0");
  auto g = [&f](double t) {
    const double r = std::exp(t);
    return f(r) * r;
  };
  return detail::adaptive_impl(g, std::log(lo), std::log(hi), abs_tol, rel_tol,
                               max_depth);
}

}  // namespace landmark::quad
