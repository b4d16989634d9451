#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "landmark/kernels.hpp"

namespace landmark::geometry {

using kernels::Kernel;

// Piecewise-linear sampled configuration curve; each point is an n x d
// landmark configuration. Interior points must stay off the collision set.
struct SampledCurve {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> points;

  int segments() const { return static_cast<int>(points.size()) - 1; }
};

inline void check_curve(const SampledCurve& c) {
  if (c.points.size() != c.times.size())
    throw std::invalid_argument("curve: times/points size mismatch");
  if (c.points.size() < 2)
    throw std::invalid_argument("curve: need at least 2 samples");
  for (std::size_t k = 1; k < c.times.size(); ++k)
    if (!(c.times[k] > c.times[k - 1]))
      throw std::invalid_argument("curve: times must strictly increase");
}

namespace detail {

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const Kernel& kernel) {
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = kernel.k0();
    for (int j = i + 1; j < n; ++j) {
      const double r = (x.row(i) - x.row(j)).norm();
      if (r < 1e-10)
        throw std::domain_error(
            "metric: landmarks within 1e-10, Gram matrix near singular");
      A(i, j) = A(j, i) = kernel.eval(r);
    }
  }
  return A;
}

}  // namespace detail

// Metric matrix G = inverse of the cometric block matrix
// [K(|x_i - x_j|)] (x) I_d; positive definite by Schoenberg.
struct MetricMatrix {
  Eigen::MatrixXd G;        // nd x nd
  Eigen::MatrixXd gram;     // n x n cometric Gram matrix
  double rcond = 0.0;       // reciprocal condition estimate of the Gram
  int n = 0, d = 0;
};

inline MetricMatrix metric_matrix(const Eigen::MatrixXd& x,
                                  const Kernel& kernel) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  MetricMatrix m;
  m.n = n;
  m.d = d;
  m.gram = detail::gram(x, kernel);
  Eigen::LLT<Eigen::MatrixXd> llt(m.gram);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("metric: Gram matrix not positive definite");
  m.rcond = llt.rcond();
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  m.G.setZero(n * d, n * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < d; ++k) m.G(i * d + k, j * d + k) = inv(i, j);
  return m;
}

// <delta, G(x) delta> evaluated through a Gram solve (no nd x nd assembly);
// delta is an n x d displacement.
inline double metric_quadratic_form(const Eigen::MatrixXd& x,
                                    const Kernel& kernel,
                                    const Eigen::MatrixXd& delta) {
  const Eigen::MatrixXd A = detail::gram(x, kernel);
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("metric: Gram matrix not positive definite");
  const Eigen::MatrixXd y = llt.solve(delta);
  return (delta.array() * y.array()).sum();
}

// Riemannian length of the sampled curve, midpoint-metric rule:
// sum_k sqrt(<dx_k, G(mid_k) dx_k>).
inline double curve_length(const SampledCurve& c, const Kernel& kernel) {
  check_curve(c);
  double len = 0.0;
  for (int k = 0; k < c.segments(); ++k) {
    const Eigen::MatrixXd mid = 0.5 * (c.points[k] + c.points[k + 1]);
    const Eigen::MatrixXd delta = c.points[k + 1] - c.points[k];
    len += std::sqrt(std::max(0.0, metric_quadratic_form(mid, kernel, delta)));
  }
  return len;
}

// Cauchy-Schwarz lower bound on the length contributed by the (i, j)
// separation change: sum_k |delta r_k| / sqrt(2 (K(0) - K(r at midpoint))).
// Uses the cometric identity g^{-1}(df_ij, df_ij) = 2 (K(0) - K(f_ij)).
inline double collision_bound(const SampledCurve& c, int i, int j,
                              const Kernel& kernel) {
  check_curve(c);
  if (i == j) throw std::invalid_argument("collision_bound: need i != j");
  const int n = static_cast<int>(c.points.front().rows());
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw std::out_of_range("collision_bound: landmark index");
  double bound = 0.0;
  for (int k = 0; k < c.segments(); ++k) {
    const double r0 = (c.points[k].row(i) - c.points[k].row(j)).norm();
    const double r1 = (c.points[k + 1].row(i) - c.points[k + 1].row(j)).norm();
    if (r0 == r1) continue;
    const Eigen::MatrixXd mid = 0.5 * (c.points[k] + c.points[k + 1]);
    const double rm = (mid.row(i) - mid.row(j)).norm();
    bound += std::abs(r1 - r0) / std::sqrt(2.0 * kernel.gap(rm));
  }
  return bound;
}

// Lower bound from the escape direction: variation of |x_i| divided by
// sqrt(K(0)), splitting any segment whose norm dips to an interior minimum
// (in particular through the origin) so each monotone piece counts.
inline double escape_bound(const SampledCurve& c, int i, const Kernel& kernel) {
  check_curve(c);
  const int n = static_cast<int>(c.points.front().rows());
  if (i < 0 || i >= n) throw std::out_of_range("escape_bound: landmark index");
  const double root_k0 = std::sqrt(kernel.k0());
  double bound = 0.0;
  for (int k = 0; k < c.segments(); ++k) {
    const Eigen::VectorXd a = c.points[k].row(i).transpose();
    const Eigen::VectorXd b = c.points[k + 1].row(i).transpose();
    const Eigen::VectorXd dv = b - a;
    const double n0 = a.norm(), n1 = b.norm();
    double var = std::abs(n1 - n0);
    const double dd = dv.squaredNorm();
    if (dd > 0.0) {
      const double s = -a.dot(dv) / dd;
      if (s > 0.0 && s < 1.0) {
        const double m = (a + s * dv).norm();
        if (m < std::min(n0, n1)) var = (n0 - m) + (n1 - m);
      }
    }
    bound += var / root_k0;
  }
  return bound;
}

}  // namespace landmark::geometry
