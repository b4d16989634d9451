#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "landmark/kernels.hpp"
#include "landmark/quadrature.hpp"

namespace landmark::completeness {

enum class IntegralStatus { convergent, divergent, inconclusive };

// Least-squares power law f ~ D r^gamma in log-log coordinates.
struct ExponentFit {
  double gamma = 0.0;
  double D = 0.0;
  double residual = 0.0;  // RMS residual of the log-log fit
};

struct IntegralVerdict {
  IntegralStatus status = IntegralStatus::inconclusive;
  double value = std::numeric_limits<double>::quiet_NaN();
  // (cutoff eps, integral over [eps, a]); cutoffs strictly decreasing,
  // partials nondecreasing.
  std::vector<std::pair<double, double>> evidence;
  std::optional<ExponentFit> exponent_fit;  // integrand, 3 smallest decades
};

struct QuadOpts {
  int decades = 12;                  // cutoffs eps_k = a 10^-k, k = 1..decades
  double abs_tol = 1e-10;            // per-panel quadrature tolerance
  double rel_tol = 1e-10;
  double cauchy_rel = 1e-8;          // relative Cauchy tolerance on partials
  double divergence_partial = 1e6;   // partial-sum blowup threshold
  double fit_residual_max = 0.05;    // a fit above this is not trusted
  int fit_decades = 6;               // window for the tail-model fits
};

namespace detail {

struct LinFit {
  double slope = 0.0, intercept = 0.0, residual = 0.0;
  bool ok = false;
};

inline LinFit linear_fit(const std::vector<double>& x,
                         const std::vector<double>& y) {
  LinFit f;
  const std::size_t n = x.size();
  if (n < 3) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-30) return f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy * sxx - sx * sxy) / det;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.ok = true;
  return f;
}

}  // namespace detail

// Convergence analysis of the improper integral of a positive integrand f
// over (0, a]. Partial integrals over [eps_k, a] are accumulated down a
// decade ladder; each panel below a/2 is integrated in log-substituted
// coordinates so the singular end is resolved. The verdict comes from, in
// order: partial-sum blowup; a tail model fitted to the integrand on the
// smallest decades (pure power C r^p, or the critical family
// C r^-1 (1 - log r)^-q whose local exponent creeps toward -1); and a plain
// Cauchy test on the partials. Anything else is reported inconclusive
// rather than coerced.
template <class F>
IntegralVerdict improper_integral(F&& f, double a, const QuadOpts& opts = {}) {
  if (!(a > 0.0)) throw std::invalid_argument("improper_integral: a <= 0");

  IntegralVerdict v;
  const int K = opts.decades;

  // panel boundaries a, a/2, eps_1, ..., eps_K
  std::vector<double> cuts;
  cuts.push_back(a);
  cuts.push_back(0.5 * a);
  for (int k = 1; k <= K; ++k) cuts.push_back(a * std::pow(10.0, -k));

  double partial = quad::integrate(f, cuts[1], cuts[0], opts.abs_tol,
                                   opts.rel_tol);
  std::vector<double> partial_at_eps;
  for (int k = 1; k <= K; ++k) {
    partial += quad::integrate_log(f, cuts[static_cast<std::size_t>(k) + 1],
                                   cuts[static_cast<std::size_t>(k)],
                                   opts.abs_tol, opts.rel_tol);
    partial_at_eps.push_back(partial);
    v.evidence.emplace_back(cuts[static_cast<std::size_t>(k) + 1], partial);
  }
  const double eps_min = cuts.back();
  const double P = partial_at_eps.back();

  // reported exponent fit: integrand over the three smallest decades
  {
    std::vector<double> lx, ly;
    const int pts = 31;
    for (int i = 0; i < pts; ++i) {
      const double lr =
          std::log(eps_min) + 3.0 * std::log(10.0) * i / (pts - 1);
      const double r = std::exp(lr);
      const double fr = f(r);
      if (fr > 0.0 && std::isfinite(fr)) {
        lx.push_back(lr);
        ly.push_back(std::log(fr));
      }
    }
    auto fit = detail::linear_fit(lx, ly);
    if (fit.ok)
      v.exponent_fit =
          ExponentFit{fit.slope, std::exp(fit.intercept), fit.residual};
  }

  if (P > opts.divergence_partial) {
    v.status = IntegralStatus::divergent;
    return v;
  }

  // tail-model fits over the lowest fit_decades decades
  std::vector<double> lr_s, lf_s, w_s, z_s;
  {
    const int pts = 10 * opts.fit_decades + 1;
    for (int i = 0; i < pts; ++i) {
      const double lr = std::log(eps_min) +
                        opts.fit_decades * std::log(10.0) * i / (pts - 1);
      const double r = std::exp(lr);
      const double fr = f(r);
      if (!(fr > 0.0) || !std::isfinite(fr)) continue;
      lr_s.push_back(lr);
      lf_s.push_back(std::log(fr));
      w_s.push_back(std::log(1.0 - lr));        // log(1 - log r)
      z_s.push_back(std::log(fr) + lr);         // log(r f(r))
    }
  }
  const auto power = detail::linear_fit(lr_s, lf_s);
  const auto critical = detail::linear_fit(w_s, z_s);
  const double slope_eps = 1e-6;

  if (critical.ok && power.ok && critical.residual < power.residual &&
      critical.residual < opts.fit_residual_max) {
    // f ~ C r^-1 (1 - log r)^-q with q = -slope
    const double q = -critical.slope;
    const double C = std::exp(critical.intercept);
    if (q <= 1.0 + slope_eps) {
      v.status = IntegralStatus::divergent;
    } else {
      const double U = 1.0 - std::log(eps_min);
      v.status = IntegralStatus::convergent;
      v.value = P + C * std::pow(U, 1.0 - q) / (q - 1.0);
    }
    return v;
  }

  if (power.ok && power.residual < opts.fit_residual_max) {
    const double p = power.slope;
    if (p <= -1.0 + slope_eps) {
      v.status = IntegralStatus::divergent;
      return v;
    }
    const double C = std::exp(power.intercept);
    v.status = IntegralStatus::convergent;
    v.value = P + C * std::pow(eps_min, p + 1.0) / (p + 1.0);
    return v;
  }

  if (partial_at_eps.size() >= 2) {
    const double prev = partial_at_eps[partial_at_eps.size() - 2];
    if (P - prev <= opts.cauchy_rel * std::max(P, 1e-300)) {
      v.status = IntegralStatus::convergent;
      v.value = P;
      return v;
    }
  }

  v.status = IntegralStatus::inconclusive;
  return v;
}

enum class Geodesic { complete, incomplete, inconclusive };

struct CompletenessReport {
  Geodesic geodesic = Geodesic::inconclusive;
  IntegralVerdict criterion;
  double a_used = 1.0;
};

// Geodesic completeness from the behavior of 1/sqrt(K(0) - K(r)) near
// collision: the landmark space is complete exactly when that integral
// diverges at 0. The verdict is a-independent; a only sets the ladder.
inline CompletenessReport classify_geodesic(const kernels::Kernel& kernel,
                                            double a = 1.0,
                                            const QuadOpts& opts = {}) {
  if (!(a > 0.0)) throw std::invalid_argument("classify_geodesic: a <= 0");
  CompletenessReport rep;
  rep.a_used = a;
  rep.criterion = improper_integral(
      [&kernel](double r) { return 1.0 / std::sqrt(kernel.gap(r)); }, a,
      opts);
  switch (rep.criterion.status) {
    case IntegralStatus::divergent:
      rep.geodesic = Geodesic::complete;
      break;
    case IntegralStatus::convergent:
      rep.geodesic = Geodesic::incomplete;
      break;
    case IntegralStatus::inconclusive:
      rep.geodesic = Geodesic::inconclusive;
      break;
  }
  return rep;
}

// Fit gap(r) ~ D r^gamma over r in [1e-6, 1e-2] (40 log-spaced points).
inline ExponentFit estimate_gap_exponent(const kernels::Kernel& kernel) {
  std::vector<double> lx, ly;
  const int pts = 40;
  bool any = false;
  for (int i = 0; i < pts; ++i) {
    const double lr = std::log(1e-6) +
                      (std::log(1e-2) - std::log(1e-6)) * i / (pts - 1);
    const double g = kernel.gap(std::exp(lr));
    if (g > 1e-300) any = true;
    if (g > 0.0 && std::isfinite(g)) {
      lx.push_back(lr);
      ly.push_back(std::log(g));
    }
  }
  if (!any || lx.size() < 3)
    throw std::runtime_error("estimate_gap_exponent: gap underflow, unfittable");
  auto fit = detail::linear_fit(lx, ly);
  if (!fit.ok)
    throw std::runtime_error("estimate_gap_exponent: degenerate fit");
  return {fit.slope, std::exp(fit.intercept), fit.residual};
}

}  // namespace landmark::completeness
