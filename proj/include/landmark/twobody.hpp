#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "landmark/completeness.hpp"
#include "landmark/dynamics.hpp"
#include "landmark/kernels.hpp"
#include "landmark/ode.hpp"

namespace landmark::twobody {

using kernels::Kernel;

// Center-of-mass coordinates of the two-landmark system:
//   u = x1 - x2, v = (x1 + x2)/2, P = p1 + p2, Q = (p1 - p2)/2,
// with c = |P|^2 / 4 constant along the flow.
struct TwoBodyState {
  Eigen::VectorXd u, Q, v, P;
  double c = 0.0;

  double r() const { return u.norm(); }
  int d() const { return static_cast<int>(u.size()); }
};

inline TwoBodyState make_state(const Eigen::VectorXd& u,
                               const Eigen::VectorXd& Q,
                               const Eigen::VectorXd& P) {
  if (u.size() != Q.size() || u.size() != P.size())
    throw std::invalid_argument("two-body state: dimension mismatch");
  TwoBodyState tb;
  tb.u = u;
  tb.Q = Q;
  tb.P = P;
  tb.v = Eigen::VectorXd::Zero(u.size());
  tb.c = 0.25 * P.squaredNorm();
  return tb;
}

inline TwoBodyState to_com(const dynamics::PhasePoint& s) {
  if (s.n() != 2) throw std::invalid_argument("to_com: need exactly n = 2");
  TwoBodyState tb;
  tb.u = (s.x.row(0) - s.x.row(1)).transpose();
  tb.v = 0.5 * (s.x.row(0) + s.x.row(1)).transpose();
  tb.P = (s.p.row(0) + s.p.row(1)).transpose();
  tb.Q = 0.5 * (s.p.row(0) - s.p.row(1)).transpose();
  tb.c = 0.25 * tb.P.squaredNorm();
  return tb;
}

inline dynamics::PhasePoint from_com(const TwoBodyState& tb) {
  const int d = tb.d();
  dynamics::PhasePoint s;
  s.x.resize(2, d);
  s.p.resize(2, d);
  s.x.row(0) = (tb.v + 0.5 * tb.u).transpose();
  s.x.row(1) = (tb.v - 0.5 * tb.u).transpose();
  s.p.row(0) = (0.5 * tb.P + tb.Q).transpose();
  s.p.row(1) = (0.5 * tb.P - tb.Q).transpose();
  return s;
}

// Reduced equations of motion:
//   du = 2 (K(0) - K(r)) Q
//   dQ = K'(r) u / r (|Q|^2 - c)
//   dv = 1/2 (K(0) + K(r)) P
inline void reduced_rhs(const TwoBodyState& tb, const Kernel& kernel,
                        Eigen::VectorXd& du, Eigen::VectorXd& dQ,
                        Eigen::VectorXd& dv) {
  const double r = tb.r();
  if (!(r > 0.0)) throw std::domain_error("reduced_rhs: r = 0");
  du = 2.0 * kernel.gap(r) * tb.Q;
  dQ = (kernel.deriv(r) / r) * (tb.Q.squaredNorm() - tb.c) * tb.u;
  dv = 0.5 * (kernel.k0() + kernel.eval(r)) * tb.P;
}

// Conserved pair (D, omega): D = (K(0) - K(r)) (|Q|^2 - c) from energy
// conservation, omega = |u ^ Q| from angular momentum.
inline std::pair<double, double> invariants_2b(const TwoBodyState& tb,
                                               const Kernel& kernel) {
  const double D = kernel.gap(tb.r()) * (tb.Q.squaredNorm() - tb.c);
  const double omega = dynamics::wedge(tb.u, tb.Q).norm();
  return {D, omega};
}

// |u ^ Q|^2 + <u, Q>^2 - r^2 |Q|^2, zero in exact arithmetic.
inline double wedge_identity_residual(const TwoBodyState& tb) {
  const double w2 = dynamics::wedge(tb.u, tb.Q).squaredNorm();
  const double dot = tb.u.dot(tb.Q);
  return w2 + dot * dot - tb.u.squaredNorm() * tb.Q.squaredNorm();
}

struct CollisionTime {
  bool collapses = false;
  double T = std::numeric_limits<double>::quiet_NaN();
};

// Head-on collision time T = integral_0^a du / (2 sqrt(E) sqrt(K(0)-K(u))).
// Finite exactly when the completeness criterion integral converges;
// returns non-collapsing when it diverges.
inline CollisionTime collision_time(const Kernel& kernel, double a, double E,
                                    const completeness::QuadOpts& opts = {}) {
  if (!(a > 0.0) || !(E > 0.0))
    throw std::invalid_argument("collision_time: need a > 0, E > 0");
  const double pre = 1.0 / (2.0 * std::sqrt(E));
  auto verdict = completeness::improper_integral(
      [&kernel, pre](double u) { return pre / std::sqrt(kernel.gap(u)); }, a,
      opts);
  if (verdict.status == completeness::IntegralStatus::divergent)
    return {false, std::numeric_limits<double>::infinity()};
  if (verdict.status == completeness::IntegralStatus::convergent)
    return {true, verdict.value};
  throw std::runtime_error("collision_time: criterion integral inconclusive");
}

// Closed-form head-on collision solution for the Laplacian kernel
// (n = 2, d = 1):
//   x1 = log cosh(b (T - t)),  p1 = -b / tanh(b (T - t)),  x2 = -x1, p2 = -p1.
// Collides at t = T with momentum blow-up.
inline dynamics::PhasePoint laplacian_exact(double b, double T, double t) {
  if (!(b > 0.0) || !(T > 0.0))
    throw std::invalid_argument("laplacian_exact: need b > 0, T > 0");
  if (!(t >= 0.0 && t < T))
    throw std::domain_error("laplacian_exact: t outside [0, T)");
  const double s = b * (T - t);
  dynamics::PhasePoint st;
  st.x.resize(2, 1);
  st.p.resize(2, 1);
  // log cosh s = log1p(2 sinh^2(s/2)), full precision near collision
  const double sh = std::sinh(0.5 * s);
  st.x(0, 0) = std::log1p(2.0 * sh * sh);
  st.x(1, 0) = -st.x(0, 0);
  st.p(0, 0) = -b / std::tanh(s);
  st.p(1, 0) = -st.p(0, 0);
  return st;
}

enum class Verdict { global_existence, finite_time_collision, inconclusive };

struct Forecast {
  Verdict verdict = Verdict::inconclusive;
  double D = 0.0;
  double omega = 0.0;
  std::optional<double> bound;        // certified floor on r(t), case D <= 0
  std::optional<double> predicted_T;  // head-on collision time
  std::string evidence;
};

// Breakdown forecast for the reduced two-body system. Nonzero angular
// momentum guarantees global existence for any kernel; with D <= 0 the
// certified floor r >= omega / sqrt(c) is attached. Head-on data (omega = 0,
// inward, zero total momentum) on an incomplete kernel collapses at the
// separable-quadrature time. Configurations the case analysis does not
// cover are reported inconclusive.
inline Forecast breakdown_forecast(const TwoBodyState& tb, const Kernel& kernel,
                                   const completeness::QuadOpts& opts = {}) {
  constexpr double omega_tol = 1e-12;
  Forecast fc;
  std::tie(fc.D, fc.omega) = invariants_2b(tb, kernel);

  if (fc.omega > omega_tol) {
    fc.verdict = Verdict::global_existence;
    if (fc.D <= 0.0) {
      // D <= 0 with omega != 0 forces c > 0
      fc.bound = fc.omega / std::sqrt(tb.c);
      fc.evidence = "case 1 (D <= 0): r(t) >= omega/sqrt(c)";
    } else {
      fc.evidence = "case 2 (D > 0): no quantitative floor";
    }
    return fc;
  }

  const auto rep = completeness::classify_geodesic(kernel, 1.0, opts);
  if (rep.geodesic == completeness::Geodesic::complete) {
    fc.verdict = Verdict::global_existence;
    fc.evidence = "zero angular momentum, complete kernel";
    return fc;
  }
  const bool inward = tb.u.dot(tb.Q) < 0.0;
  if (rep.geodesic == completeness::Geodesic::incomplete && inward &&
      tb.c < 1e-15) {
    fc.verdict = Verdict::finite_time_collision;
    const double r0 = tb.r();
    const double E = kernel.gap(r0) * tb.Q.squaredNorm();
    fc.predicted_T = collision_time(kernel, r0, E, opts).T;
    fc.evidence = "head-on inward data, incomplete kernel";
    return fc;
  }
  fc.verdict = Verdict::inconclusive;
  fc.evidence = "zero angular momentum, outside the analyzed cases";
  return fc;
}

struct ReducedTrajectory {
  std::vector<double> times;
  std::vector<TwoBodyState> states;
  double d_drift = 0.0;      // |D(t) - D(0)| / max(1, |D(0)|)
  double omega_drift = 0.0;  // same for omega
  double min_r = std::numeric_limits<double>::infinity();
  dynamics::Termination termination = dynamics::Termination::reached_t_end;
  double t_event = std::numeric_limits<double>::quiet_NaN();
};

// Integrate the reduced (u, Q, v) system with the same adaptive engine and
// collision event as the full dynamics.
inline ReducedTrajectory simulate(const TwoBodyState& tb0, const Kernel& kernel,
                                  double t_end,
                                  const dynamics::IntOpts& opts = {}) {
  if (!(tb0.r() > opts.eps_coll))
    throw std::invalid_argument("simulate: initial separation inside threshold");
  const int d = tb0.d();
  const double c = tb0.c;
  const Eigen::VectorXd P = tb0.P;

  auto pack = [d](const TwoBodyState& tb) {
    Eigen::VectorXd y(3 * d);
    y.segment(0, d) = tb.u;
    y.segment(d, d) = tb.Q;
    y.segment(2 * d, d) = tb.v;
    return y;
  };
  auto unpack = [d, c, &P](const Eigen::VectorXd& y) {
    TwoBodyState tb;
    tb.u = y.segment(0, d);
    tb.Q = y.segment(d, d);
    tb.v = y.segment(2 * d, d);
    tb.P = P;
    tb.c = c;
    return tb;
  };

  auto odef = [&](double, const ode::Vec& y, ode::Vec& dy) {
    const TwoBodyState tb = unpack(y);
    Eigen::VectorXd du, dQ, dv;
    reduced_rhs(tb, kernel, du, dQ, dv);
    dy.resize(3 * d);
    dy.segment(0, d) = du;
    dy.segment(d, d) = dQ;
    dy.segment(2 * d, d) = dv;
  };

  std::vector<ode::EventSpec> events;
  events.push_back({[d, &opts](double, const ode::Vec& y) {
                      return y.segment(0, d).norm() - opts.eps_coll;
                    },
                    -1});

  ReducedTrajectory traj;
  const auto [D0, w0] = invariants_2b(tb0, kernel);
  auto record = [&](double t, const Eigen::VectorXd& y) {
    const TwoBodyState tb = unpack(y);
    traj.times.push_back(t);
    traj.states.push_back(tb);
    traj.min_r = std::min(traj.min_r, tb.r());
    const auto [D, w] = invariants_2b(tb, kernel);
    traj.d_drift = std::max(traj.d_drift,
                            std::abs(D - D0) / std::max(1.0, std::abs(D0)));
    traj.omega_drift = std::max(
        traj.omega_drift, std::abs(w - w0) / std::max(1.0, std::abs(w0)));
  };

  record(0.0, pack(tb0));
  double next_sample = opts.sample_dt;
  auto on_step = [&](const ode::DenseSegment& seg) {
    if (opts.sample_dt > 0.0) {
      while (next_sample <= seg.t_hi + 1e-15) {
        if (next_sample > seg.t0 - 1e-15)
          record(next_sample, seg.eval(std::min(next_sample, seg.t_hi)));
        next_sample += opts.sample_dt;
      }
    } else {
      record(seg.t_hi, seg.eval(seg.t_hi));
    }
  };

  ode::StepOpts sopts;
  sopts.rtol = opts.rtol;
  sopts.atol = opts.atol;
  sopts.max_steps = opts.max_steps;
  auto res =
      ode::integrate_dopri5(odef, 0.0, pack(tb0), t_end, sopts, events, on_step);

  switch (res.reason) {
    case ode::StopReason::reached_t_end:
      traj.termination = dynamics::Termination::reached_t_end;
      break;
    case ode::StopReason::step_failure:
      traj.termination = dynamics::Termination::step_failure;
      break;
    case ode::StopReason::event:
      traj.termination = dynamics::Termination::collision;
      traj.t_event = res.t_final;
      break;
  }
  if (traj.times.empty() || traj.times.back() < res.t_final)
    record(res.t_final, res.y_final);
  return traj;
}

}  // namespace landmark::twobody
