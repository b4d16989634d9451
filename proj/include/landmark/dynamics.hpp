#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "landmark/kernels.hpp"
#include "landmark/ode.hpp"

namespace landmark::dynamics {

using kernels::Kernel;

// Point of the cotangent bundle: n landmark positions and momenta in R^d,
// stored one landmark per row. Valid states keep all pairwise distances
// positive.
struct PhasePoint {
  Eigen::MatrixXd x;  // n x d
  Eigen::MatrixXd p;  // n x d

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
};

inline void check_shape(const PhasePoint& s) {
  if (s.x.rows() != s.p.rows() || s.x.cols() != s.p.cols())
    throw std::invalid_argument("PhasePoint: x and p shapes differ");
  if (s.n() < 2 || s.d() < 1)
    throw std::invalid_argument("PhasePoint: need n >= 2, d >= 1");
}

inline double min_pairwise_distance(const PhasePoint& s) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.n(); ++i)
    for (int j = i + 1; j < s.n(); ++j)
      m = std::min(m, (s.x.row(i) - s.x.row(j)).norm());
  return m;
}

// Wedge product y ^ z in R^{d(d-1)/2}, entries y_k z_l - y_l z_k ordered
// lexicographically by (k, l), k < l. Empty for d = 1.
inline Eigen::VectorXd wedge(const Eigen::VectorXd& y,
                             const Eigen::VectorXd& z) {
  if (y.size() != z.size())
    throw std::invalid_argument("wedge: dimension mismatch");
  const Eigen::Index d = y.size();
  Eigen::VectorXd w(d * (d - 1) / 2);
  Eigen::Index m = 0;
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = k + 1; l < d; ++l)
      w[m++] = y[k] * z[l] - y[l] * z[k];
  return w;
}

// H = 1/2 sum_{i,j} K(|x_i - x_j|) <p_i, p_j>, diagonal terms included
// with K(0).
inline double hamiltonian(const PhasePoint& s, const Kernel& kernel) {
  check_shape(s);
  const int n = s.n();
  double H = 0.0;
  for (int i = 0; i < n; ++i) {
    H += 0.5 * kernel.k0() * s.p.row(i).squaredNorm();
    for (int j = i + 1; j < n; ++j) {
      const double r = (s.x.row(i) - s.x.row(j)).norm();
      H += kernel.eval(r) * s.p.row(i).dot(s.p.row(j));
    }
  }
  return H;
}

// Hamilton's equations:
//   dx_i = sum_j K(|x_i - x_j|) p_j           (j = i term uses K(0))
//   dp_i = -sum_{j != i} K'(|x_i - x_j|) (x_i - x_j)/|x_i - x_j| <p_i, p_j>
inline void rhs(const PhasePoint& s, const Kernel& kernel, Eigen::MatrixXd& dx,
                Eigen::MatrixXd& dp) {
  const int n = s.n(), d = s.d();
  dx.setZero(n, d);
  dp.setZero(n, d);
  for (int i = 0; i < n; ++i) dx.row(i) = kernel.k0() * s.p.row(i);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::RowVectorXd diff = s.x.row(i) - s.x.row(j);
      const double r = diff.norm();
      if (!(r > 0.0))
        throw std::domain_error("rhs: evaluation at a collided configuration");
      const double K = kernel.eval(r);
      dx.row(i) += K * s.p.row(j);
      dx.row(j) += K * s.p.row(i);
      const double pij = s.p.row(i).dot(s.p.row(j));
      const Eigen::RowVectorXd pull = kernel.deriv(r) * (pij / r) * diff;
      dp.row(i) -= pull;
      dp.row(j) += pull;
    }
  }
}

struct ConservedSet {
  double H = 0.0;
  Eigen::VectorXd P;  // total momentum, R^d
  Eigen::VectorXd L;  // total angular momentum, R^{d(d-1)/2}
};

inline ConservedSet conserved(const PhasePoint& s, const Kernel& kernel) {
  ConservedSet c;
  c.H = hamiltonian(s, kernel);
  c.P = s.p.colwise().sum().transpose();
  c.L = Eigen::VectorXd::Zero(s.d() * (s.d() - 1) / 2);
  for (int i = 0; i < s.n(); ++i)
    c.L += wedge(s.x.row(i).transpose(), s.p.row(i).transpose());
  return c;
}

struct IntOpts {
  double rtol = 1e-9;
  double atol = 1e-12;
  double eps_coll = 1e-6;  // collision threshold on min pairwise distance
  double r_esc = 1e6;      // escape radius on any |x_i|
  long max_steps = 10'000'000;
  double sample_dt = 0.0;  // > 0: record dense uniform samples instead of steps
};

enum class Termination { reached_t_end, collision, escape, step_failure };

// Max deviation of each conserved quantity from its t = 0 value, relative
// to max(1, |value at 0|), over all recorded states.
struct ConservedDrift {
  double H = 0.0, P = 0.0, L = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PhasePoint> states;
  ConservedDrift conserved_drift;
  Termination termination = Termination::reached_t_end;
  std::pair<int, int> collision_pair{-1, -1};
  int escape_index = -1;
  double t_event = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline Eigen::VectorXd flatten(const PhasePoint& s) {
  const int n = s.n(), d = s.d();
  Eigen::VectorXd y(2 * n * d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) {
      y[i * d + k] = s.x(i, k);
      y[n * d + i * d + k] = s.p(i, k);
    }
  return y;
}

inline PhasePoint unflatten(const Eigen::VectorXd& y, int n, int d) {
  PhasePoint s;
  s.x.resize(n, d);
  s.p.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) {
      s.x(i, k) = y[i * d + k];
      s.p(i, k) = y[n * d + i * d + k];
    }
  return s;
}

}  // namespace detail

// Numerical geodesic shooting: adaptive integration of Hamilton's equations
// with collision and escape events localized on dense output. Conserved
// quantities are monitored, not enforced; their drift is recorded against
// the initial values.
inline Trajectory integrate(const PhasePoint& s0, const Kernel& kernel,
                            double t_end, const IntOpts& opts = {}) {
  check_shape(s0);
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end <= 0");
  if (!(min_pairwise_distance(s0) > opts.eps_coll))
    throw std::invalid_argument("integrate: initial state inside collision threshold");
  const int n = s0.n(), d = s0.d();

  auto odef = [&](double, const ode::Vec& y, ode::Vec& dy) {
    const PhasePoint s = detail::unflatten(y, n, d);
    Eigen::MatrixXd dx, dp;
    rhs(s, kernel, dx, dp);
    PhasePoint ds{dx, dp};
    dy = detail::flatten(ds);
  };

  std::vector<ode::EventSpec> events;
  events.push_back({[&, n, d](double, const ode::Vec& y) {
                      return min_pairwise_distance(detail::unflatten(y, n, d)) -
                             opts.eps_coll;
                    },
                    -1});
  events.push_back({[&, n, d](double, const ode::Vec& y) {
                      const PhasePoint s = detail::unflatten(y, n, d);
                      return opts.r_esc - s.x.rowwise().norm().maxCoeff();
                    },
                    -1});

  Trajectory traj;
  const ConservedSet c0 = conserved(s0, kernel);
  auto record = [&](double t, const Eigen::VectorXd& y) {
    const PhasePoint s = detail::unflatten(y, n, d);
    traj.times.push_back(t);
    traj.states.push_back(s);
    const ConservedSet c = conserved(s, kernel);
    traj.conserved_drift.H =
        std::max(traj.conserved_drift.H,
                 std::abs(c.H - c0.H) / std::max(1.0, std::abs(c0.H)));
    for (Eigen::Index k = 0; k < c.P.size(); ++k)
      traj.conserved_drift.P = std::max(
          traj.conserved_drift.P,
          std::abs(c.P[k] - c0.P[k]) / std::max(1.0, std::abs(c0.P[k])));
    for (Eigen::Index m = 0; m < c.L.size(); ++m)
      traj.conserved_drift.L = std::max(
          traj.conserved_drift.L,
          std::abs(c.L[m] - c0.L[m]) / std::max(1.0, std::abs(c0.L[m])));
  };

  record(0.0, detail::flatten(s0));
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
  auto res = ode::integrate_dopri5(odef, 0.0, detail::flatten(s0), t_end,
                                   sopts, events, on_step);

  switch (res.reason) {
    case ode::StopReason::reached_t_end:
      traj.termination = Termination::reached_t_end;
      break;
    case ode::StopReason::step_failure:
      traj.termination = Termination::step_failure;
      break;
    case ode::StopReason::event: {
      traj.t_event = res.t_final;
      const PhasePoint s = detail::unflatten(res.y_final, n, d);
      if (res.event_index == 0) {
        traj.termination = Termination::collision;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            const double r = (s.x.row(i) - s.x.row(j)).norm();
            if (r < best) {
              best = r;
              traj.collision_pair = {i, j};
            }
          }
      } else {
        traj.termination = Termination::escape;
        int best = 0;
        double bn = 0.0;
        for (int i = 0; i < n; ++i) {
          const double r = s.x.row(i).norm();
          if (r > bn) {
            bn = r;
            best = i;
          }
        }
        traj.escape_index = best;
      }
      if (traj.times.empty() || traj.times.back() < res.t_final)
        record(res.t_final, res.y_final);
      break;
    }
  }
  if (traj.termination == Termination::reached_t_end &&
      (traj.times.empty() || traj.times.back() < res.t_final))
    record(res.t_final, res.y_final);
  return traj;
}

}  // namespace landmark::dynamics
