#pragma once

// Shared generators for randomized tests: admissible landmark systems
// (pairwise separated, bounded momenta) and smooth sampled curves.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "landmark/dynamics.hpp"
#include "landmark/geometry.hpp"

namespace testsupport {

inline landmark::dynamics::PhasePoint random_system(std::mt19937& rng, int n,
                                                    int d,
                                                    double min_sep = 0.5,
                                                    double p_max = 1.0) {
  std::uniform_real_distribution<double> box(0.0, 1.5 * n);
  std::uniform_real_distribution<double> mom(-1.0, 1.0);
  landmark::dynamics::PhasePoint s;
  s.x.resize(n, d);
  s.p.resize(n, d);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) s.x(i, k) = box(rng);
    if (landmark::dynamics::min_pairwise_distance(s) >= min_sep) break;
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) s.p(i, k) = mom(rng);
    const double norm = s.p.row(i).norm();
    if (norm > p_max) s.p.row(i) *= p_max / norm;
  }
  // keep the energy scale away from zero so relative drift is meaningful
  if (s.p.row(0).norm() < 0.3) {
    s.p(0, 0) = 0.5;
  }
  return s;
}

// Smooth closed-form wiggle per landmark; samples points along [0, 1].
inline landmark::geometry::SampledCurve random_curve(std::mt19937& rng, int n,
                                                     int d, int samples) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int attempt = 0; attempt < 200; ++attempt) {
    Eigen::MatrixXd base(n, d);
    std::vector<Eigen::MatrixXd> amp(3, Eigen::MatrixXd(n, d));
    std::vector<Eigen::MatrixXd> phase(3, Eigen::MatrixXd(n, d));
    std::uniform_real_distribution<double> box(0.0, 1.2 * n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) {
        base(i, k) = box(rng);
        for (int m = 0; m < 3; ++m) {
          amp[m](i, k) = 0.25 * U(rng);
          phase[m](i, k) = 3.141592653589793 * U(rng);
        }
      }
    landmark::geometry::SampledCurve c;
    bool ok = true;
    for (int s = 0; s < samples; ++s) {
      const double t = static_cast<double>(s) / (samples - 1);
      Eigen::MatrixXd pt = base;
      for (int m = 0; m < 3; ++m)
        pt += (amp[m].array() * ((m + 1) * 6.28318530717958 * t +
                                 phase[m].array())
                                    .sin())
                  .matrix();
      c.times.push_back(t);
      c.points.push_back(pt);
      landmark::dynamics::PhasePoint probe;
      probe.x = pt;
      probe.p = Eigen::MatrixXd::Zero(n, d);
      if (n >= 2 && landmark::dynamics::min_pairwise_distance(probe) < 0.05)
        ok = false;
    }
    if (ok) return c;
  }
  throw std::runtime_error("random_curve: could not build an admissible curve");
}

}  // namespace testsupport
