#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "landmark/completeness.hpp"
#include "landmark/kernels.hpp"
#include "landmark/quadrature.hpp"

namespace landmark::stochastic {

using kernels::Kernel;

// Coefficients of the radial two-landmark diffusion
//   dr = sigma(r) dB + b(r) dt,
//   sigma(r) = sqrt(2 (K(0) - K(r))),
//   b(r) = ((d-1) K(r) - K(0)) K'(r) / (K(0) + K(r)).
struct SdeCoeffs {
  Kernel kernel;
  int d = 2;

  double sigma(double r) const { return std::sqrt(2.0 * kernel.gap(r)); }
  double sigma2(double r) const { return 2.0 * kernel.gap(r); }
  double drift(double r) const {
    const double K = kernel.eval(r);
    return ((d - 1) * K - kernel.k0()) * kernel.deriv(r) /
           (kernel.k0() + K);
  }
};

inline SdeCoeffs sde_coeffs(const Kernel& kernel, int d) {
  if (d < 1) throw std::invalid_argument("sde_coeffs: d < 1");
  return SdeCoeffs{kernel, d};
}

// Scale density in closed form:
//   rho(r) = ((K(0)-K(a))/(K(0)-K(r)))^{1-d/2}
//            ((K(0)+K(a))/(K(0)+K(r)))^{-d/2};
// for d = 2 this reduces to (K(0)+K(r))/(K(0)+K(a)).
inline double rho(const Kernel& kernel, int d, double a, double r) {
  if (r > a && r <= a * (1.0 + 1e-9)) r = a;  // node rounding at the endpoint
  if (!(r > 0.0 && r <= a))
    throw std::domain_error("rho: need 0 < r <= a, got r=" +
                            std::to_string(r) + " a=" + std::to_string(a));
  if (d == 2)
    return (kernel.k0() + kernel.eval(r)) / (kernel.k0() + kernel.eval(a));
  const double half_d = 0.5 * d;
  const double g_ratio = kernel.gap(a) / kernel.gap(r);
  const double s_ratio =
      (kernel.k0() + kernel.eval(a)) / (kernel.k0() + kernel.eval(r));
  return std::pow(g_ratio, 1.0 - half_d) * std::pow(s_ratio, -half_d);
}

enum class Conclusion { hits_zero_positive_prob, conditions_not_met, inconclusive };

// Kleene conjunction of the three Cherny-Engelbert conditions:
// integral of rho converges AND speed integral diverges AND s-weighted
// speed integral converges. A certified failure wins over any inconclusive
// member; otherwise inconclusive propagates.
inline Conclusion ce_conclusion(completeness::IntegralStatus i_rho,
                                completeness::IntegralStatus i_speed,
                                completeness::IntegralStatus i_speed_s) {
  using S = completeness::IntegralStatus;
  int unknown = 0;
  auto check = [&unknown](S got, S want) {
    if (got == S::inconclusive) {
      ++unknown;
      return true;
    }
    return got == want;
  };
  bool ok = true;
  ok &= check(i_rho, S::convergent);
  ok &= check(i_speed, S::divergent);
  ok &= check(i_speed_s, S::convergent);
  if (!ok) return Conclusion::conditions_not_met;
  if (unknown > 0) return Conclusion::inconclusive;
  return Conclusion::hits_zero_positive_prob;
}

struct CeReport {
  completeness::IntegralVerdict I_rho;      // integral of rho over (0, a]
  completeness::IntegralVerdict I_speed;    // (1+|b|)/(rho sigma^2)
  completeness::IntegralVerdict I_speed_s;  // (1+|b|) s /(rho sigma^2)
  Conclusion conclusion = Conclusion::inconclusive;
  bool heuristic = false;  // d != 2 lies outside the validated regime
  double a_used = 1.0;
  int d = 2;
};

inline double default_ce_a(const Kernel& kernel) {
  return kernel.variant() == kernels::Variant::log_modified ? 0.4 : 1.0;
}

namespace detail {

// Cumulative s(r) = integral_0^r rho on a log grid, refined locally by a
// short Kronrod rule inside the query cell. Built once per ce_classify.
class ScaleFunction {
 public:
  ScaleFunction(const Kernel& kernel, int d, double a) {
    const int per_decade = 64;
    const double lr_min = std::log(a) - 13.5 * std::log(10.0);
    const double lr_max = std::log(a);
    const int cells =
        static_cast<int>(std::ceil((lr_max - lr_min) / std::log(10.0))) *
        per_decade;
    grid_.resize(cells + 1);
    cum_.resize(cells + 1);
    for (int i = 0; i <= cells; ++i)
      grid_[i] = std::exp(lr_min + (lr_max - lr_min) * i / cells);
    grid_.back() = a;

    auto f = [&](double r) { return rho(kernel, d, a, r); };

    // tail below the grid from the local power behavior of rho
    const double r0 = grid_.front();
    nu_ = std::log(f(r0 * 1.05) / f(r0 / 1.05)) / std::log(1.05 * 1.05);
    if (nu_ <= -1.0 + 1e-9)
      throw quad::QuadratureError(
          "scale function: rho not integrable at 0 on this grid");
    cum_[0] = f(r0) * r0 / (nu_ + 1.0);
    for (int i = 1; i <= cells; ++i)
      cum_[i] = cum_[i - 1] +
                quad::integrate(f, grid_[i - 1], grid_[i], 1e-14, 1e-12);
    rho_ = f;
  }

  double operator()(double r) const {
    if (r <= grid_.front())
      return cum_.front() * std::pow(r / grid_.front(), nu_ + 1.0);
    auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    std::size_t j = static_cast<std::size_t>(it - grid_.begin());
    if (j == 0) j = 1;
    if (j > grid_.size() - 1) j = grid_.size() - 1;
    return cum_[j - 1] + quad::integrate(rho_, grid_[j - 1], r, 1e-14, 1e-12);
  }

 private:
  std::vector<double> grid_, cum_;
  double nu_ = 0.0;
  std::function<double(double)> rho_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline int worker_count(int requested) {
  if (requested > 0) return requested;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("LANDMARK_DYN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) hw = std::min(hw, cap);
  }
  return hw;
}

}  // namespace detail

// Cherny-Engelbert classification of the boundary point 0 for the radial
// SDE: the three integral tests are run through the same singular-integral
// engine as the completeness criterion.
inline CeReport ce_classify(const Kernel& kernel, int d, double a,
                            const completeness::QuadOpts& opts = {}) {
  if (!(a > 0.0)) throw std::invalid_argument("ce_classify: a <= 0");
  CeReport rep;
  rep.a_used = a;
  rep.d = d;
  rep.heuristic = (d != 2);
  const SdeCoeffs co = sde_coeffs(kernel, d);

  rep.I_rho = completeness::improper_integral(
      [&](double r) { return rho(kernel, d, a, r); }, a, opts);

  auto speed = [&](double r) {
    return (1.0 + std::abs(co.drift(r))) / (rho(kernel, d, a, r) * co.sigma2(r));
  };
  rep.I_speed = completeness::improper_integral(speed, a, opts);

  if (rep.I_rho.status == completeness::IntegralStatus::convergent) {
    detail::ScaleFunction s(kernel, d, a);
    rep.I_speed_s = completeness::improper_integral(
        [&](double r) { return speed(r) * s(r); }, a, opts);
  } else {
    // s(r) is infinite (or uncertified); leave the verdict open
    rep.I_speed_s.status = completeness::IntegralStatus::inconclusive;
  }

  rep.conclusion = ce_conclusion(rep.I_rho.status, rep.I_speed.status,
                                 rep.I_speed_s.status);
  return rep;
}

struct SimOpts {
  double r0 = 0.1;
  double dt = 1e-4;
  double horizon = 5.0;
  long n_paths = 10000;
  std::uint64_t seed = 42;
  double eps_hit = 1e-4;
  int threads = 0;  // 0: hardware concurrency, capped by LANDMARK_DYN_THREADS
};

struct HittingEstimate {
  long n_paths = 0;
  long n_hits = 0;
  double horizon = 0.0;
  double r0 = 0.0;
  double p_hat = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};  // Wilson interval
  std::uint64_t seed = 0;
  double eps_hit = 1e-4;
};

inline std::pair<double, double> wilson_ci95(long hits, long n) {
  if (n <= 0) return {0.0, 0.0};
  const double z = 1.959963984540054;
  const double p = static_cast<double>(hits) / n;
  const double z2n = z * z / n;
  const double denom = 1.0 + z2n;
  const double center = (p + 0.5 * z2n) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Euler-Maruyama paths of the radial SDE with absorption at eps_hit; a step
// landing at or below the threshold (including negative overshoots) counts
// as a hit at that step. Paths use independent generators seeded from
// (seed, path index), so the estimate is schedule-independent and exactly
// reproducible. Extra thresholds are resolved from the same paths by
// tracking the running minimum.
inline std::vector<HittingEstimate> simulate_paths_multi(
    const Kernel& kernel, int d, const SimOpts& opts,
    const std::vector<double>& extra_thresholds = {}) {
  if (!(opts.r0 > 0.0)) throw std::invalid_argument("simulate_paths: r0 <= 0");
  if (!(opts.dt > 0.0) || opts.dt > opts.horizon / 100.0)
    throw std::invalid_argument("simulate_paths: need 0 < dt <= horizon/100");

  std::vector<double> thresholds = extra_thresholds;
  thresholds.push_back(opts.eps_hit);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  const double absorb = thresholds.back();
  const std::size_t n_thr = thresholds.size();

  const SdeCoeffs co = sde_coeffs(kernel, d);
  const long n_steps = static_cast<long>(std::llround(opts.horizon / opts.dt));
  const double sqrt_dt = std::sqrt(opts.dt);

  const int n_workers = static_cast<int>(
      std::max<long>(1, std::min<long>(detail::worker_count(opts.threads),
                                       std::max<long>(1, opts.n_paths / 64))));
  std::vector<std::vector<long>> hits_per_worker(
      n_workers, std::vector<long>(n_thr, 0));

  auto run_range = [&](int w, long lo, long hi) {
    auto& hits = hits_per_worker[w];
    for (long idx = lo; idx < hi; ++idx) {
      std::mt19937_64 rng(detail::splitmix64(
          opts.seed ^ detail::splitmix64(static_cast<std::uint64_t>(idx))));
      std::normal_distribution<double> normal(0.0, 1.0);
      double r = opts.r0;
      double r_min = r;
      for (long k = 0; k < n_steps && r > absorb; ++k) {
        const double z = normal(rng);
        r += co.sigma(r) * sqrt_dt * z + co.drift(r) * opts.dt;
        if (r < r_min) r_min = r;
      }
      for (std::size_t ti = 0; ti < n_thr; ++ti)
        if (r_min <= thresholds[ti]) ++hits[ti];
    }
  };

  if (n_workers == 1) {
    run_range(0, 0, opts.n_paths);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (opts.n_paths + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const long lo = w * chunk;
      const long hi = std::min<long>(opts.n_paths, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, w, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<HittingEstimate> out(n_thr);
  for (std::size_t ti = 0; ti < n_thr; ++ti) {
    long hits = 0;
    for (const auto& h : hits_per_worker) hits += h[ti];
    auto& e = out[ti];
    e.n_paths = opts.n_paths;
    e.n_hits = hits;
    e.horizon = opts.horizon;
    e.r0 = opts.r0;
    e.seed = opts.seed;
    e.eps_hit = thresholds[ti];
    e.p_hat = static_cast<double>(hits) / static_cast<double>(opts.n_paths);
    e.ci95 = wilson_ci95(hits, opts.n_paths);
  }
  return out;
}

inline HittingEstimate simulate_paths(const Kernel& kernel, int d, double r0,
                                      double dt, double horizon, long n_paths,
                                      std::uint64_t seed) {
  SimOpts opts;
  opts.r0 = r0;
  opts.dt = dt;
  opts.horizon = horizon;
  opts.n_paths = n_paths;
  opts.seed = seed;
  return simulate_paths_multi(kernel, d, opts).front();
}

// One-sided two-proportion z statistic for p1 > p2 (pooled variance).
inline double two_proportion_z(long hits1, long n1, long hits2, long n2) {
  const double p1 = static_cast<double>(hits1) / n1;
  const double p2 = static_cast<double>(hits2) / n2;
  const double pool = static_cast<double>(hits1 + hits2) / (n1 + n2);
  const double se =
      std::sqrt(pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2));
  if (!(se > 0.0)) return p1 > p2 ? std::numeric_limits<double>::infinity() : 0.0;
  return (p1 - p2) / se;
}

}  // namespace landmark::stochastic
