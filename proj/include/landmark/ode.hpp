#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace landmark::ode {

using Vec = Eigen::VectorXd;

struct StepOpts {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 0.0;  // 0 = automatic
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 10'000'000;
};

// Event fires when g crosses zero in the given direction
// (-1 downward, +1 upward, 0 either).
struct EventSpec {
  std::function<double(double, const Vec&)> g;
  int direction = 0;
};

enum class StopReason { reached_t_end, event, step_failure };

// Quartic dense-output segment of an accepted DOPRI5 step. Valid on
// [t0, t_hi]; t_hi < t0 + h when an event cut the step short.
struct DenseSegment {
  double t0 = 0.0, h = 0.0, t_hi = 0.0;
  Vec r1, r2, r3, r4, r5;

  Vec eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

struct IntegrationResult {
  StopReason reason = StopReason::reached_t_end;
  int event_index = -1;
  double t_final = 0.0;
  Vec y_final;
  long n_steps = 0;
  long n_rejected = 0;
};

namespace detail {

inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                        e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0,
                        d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0,
                        d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0,
                        d7 = 69997945.0 / 29380423.0;
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                        c5 = 8.0 / 9;

inline double scaled_norm(const Vec& v, const Vec& y0, const Vec& y1,
                          double atol, double rtol) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double sc =
        atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = v[i] / sc;
    s += q * q;
  }
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace detail

// Adaptive embedded Dormand-Prince 5(4) with FSAL, quartic dense output and
// bisection event localization. step_callback receives each accepted
// segment and may consume dense samples; events terminate the integration
// at the crossing, localized to time accuracy 1e-10.
template <class RHS>
IntegrationResult integrate_dopri5(
    RHS&& f, double t0, Vec y0, double t_end, const StepOpts& opts,
    const std::vector<EventSpec>& events = {},
    const std::function<void(const DenseSegment&)>& step_callback = nullptr) {
  using namespace detail;
  const Eigen::Index n = y0.size();
  IntegrationResult res;
  res.y_final = y0;
  res.t_final = t0;

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
  f(t0, y0, k1);
  if (!k1.allFinite()) {
    res.reason = StopReason::step_failure;
    return res;
  }

  std::vector<double> gprev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e)
    gprev[e] = events[e].g(t0, y0);

  // initial step size (Hairer-style heuristic)
  double h = opts.h_init;
  if (h <= 0.0) {
    const double d0 = detail::scaled_norm(y0, y0, y0, opts.atol, opts.rtol);
    const double d1 = detail::scaled_norm(k1, y0, y0, opts.atol, opts.rtol);
    double h0 = (d0 > 1e-10 && d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6;
    h0 = std::min(h0, std::abs(t_end - t0));
    ytmp = y0 + h0 * k1;
    f(t0 + h0, ytmp, k2);
    const double d2 =
        detail::scaled_norm((k2 - k1).eval(), y0, y0, opts.atol, opts.rtol) /
        h0;
    double h1;
    if (std::max(d1, d2) > 1e-15)
      h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    else
      h1 = std::max(1e-6, h0 * 1e-3);
    h = std::min({100.0 * h0, h1, opts.h_max, std::abs(t_end - t0)});
  }

  double t = t0;
  while (t < t_end) {
    if (res.n_steps++ > opts.max_steps) {
      res.reason = StopReason::step_failure;
      return res;
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() *
                std::max(std::abs(t), 1.0)) {
      res.reason = StopReason::step_failure;
      return res;
    }
    h = std::min(h, t_end - t);

    ytmp = y0 + h * (a21 * k1);
    f(t + c2 * h, ytmp, k2);
    ytmp = y0 + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y0 + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y0 + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y0 + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    y1 = y0 + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, y1, k7);

    bool finite = y1.allFinite() && k7.allFinite();
    double err_norm = std::numeric_limits<double>::infinity();
    if (finite) {
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      err_norm = detail::scaled_norm(err, y0, y1, opts.atol, opts.rtol);
    }

    if (!(err_norm <= 1.0)) {
      ++res.n_rejected;
      const double fac =
          finite ? std::max(0.2, 0.9 * std::pow(err_norm, -0.2)) : 0.5;
      h *= std::min(fac, 0.9);
      continue;
    }

    DenseSegment seg;
    seg.t0 = t;
    seg.h = h;
    seg.t_hi = t + h;
    seg.r1 = y0;
    seg.r2 = y1 - y0;
    seg.r3 = h * k1 - seg.r2;
    seg.r4 = seg.r2 - h * k7 - seg.r3;
    seg.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

    // event check on dense output at a few interior points per step
    double t_event = std::numeric_limits<double>::quiet_NaN();
    int event_idx = -1;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double g0_step = gprev[e];
      double lo = t, glo = g0_step;
      bool bracketed = false;
      for (int q = 1; q <= 4; ++q) {
        const double tq = t + h * q / 4.0;
        const double gq = events[e].g(tq, q == 4 ? y1 : seg.eval(tq));
        const bool crossed = (glo > 0.0 && gq <= 0.0 &&
                              events[e].direction <= 0) ||
                             (glo < 0.0 && gq >= 0.0 &&
                              events[e].direction >= 0);
        if (crossed) {
          double hi = tq, ghi = gq;
          while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            const double gm = events[e].g(mid, seg.eval(mid));
            if ((glo > 0.0 && gm <= 0.0) || (glo < 0.0 && gm >= 0.0)) {
              hi = mid;
              ghi = gm;
            } else {
              lo = mid;
              glo = gm;
            }
          }
          (void)ghi;
          if (!(t_event == t_event) || hi < t_event) {
            t_event = hi;
            event_idx = static_cast<int>(e);
          }
          bracketed = true;
          break;
        }
        lo = tq;
        glo = gq;
      }
      if (!bracketed) gprev[e] = events[e].g(t + h, y1);
    }

    if (event_idx >= 0) {
      res.reason = StopReason::event;
      res.event_index = event_idx;
      res.t_final = t_event;
      res.y_final = seg.eval(t_event);
      seg.t_hi = t_event;
      if (step_callback && seg.t_hi > seg.t0) step_callback(seg);
      return res;
    }

    if (step_callback) step_callback(seg);

    t += h;
    y0 = y1;
    k1 = k7;  // FSAL
    res.t_final = t;
    res.y_final = y0;

    const double fac =
        std::min(5.0, std::max(0.2, 0.9 * std::pow(err_norm, -0.2)));
    h = std::min(h * fac, opts.h_max);
  }

  res.reason = StopReason::reached_t_end;
  return res;
}

}  // namespace landmark::ode
