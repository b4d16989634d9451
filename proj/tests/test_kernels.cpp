#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "landmark/kernels.hpp"

using namespace landmark;
using kernels::Kernel;
using kernels::KernelSpec;
using kernels::Variant;

TEST_CASE("builtin kernel point values") {
  const auto lap = kernels::laplacian();
  CHECK(lap.eval(0.0) == 1.0);
  CHECK(lap.k0() == 1.0);

  const auto bes = kernels::c1_bessel();
  CHECK(bes.k0() == 2.0);
  CHECK_THAT(bes.eval(1.0),
             Catch::Matchers::WithinRel(4.0 * std::exp(-1.0), 1e-14));

  // Theorem-family value at the edge of its defining window, checked
  // against a direct high-precision evaluation of 1 - r^2 (1 - log r)^c.
  const auto lm = kernels::log_modified(2.0);
  const double expect = 1.0 - 0.25 * std::pow(1.0 - std::log(0.5), 2.0);
  CHECK_THAT(lm.eval(0.5), Catch::Matchers::WithinRel(expect, 1e-14));
  CHECK_THAT(lm.eval(0.5), Catch::Matchers::WithinAbs(0.2833131562404770, 1e-12));
}

TEST_CASE("gap values and stability near zero") {
  const auto lap = kernels::laplacian();
  CHECK(lap.gap(0.0) == 0.0);
  CHECK_THAT(lap.gap(1.0),
             Catch::Matchers::WithinRel(1.0 - std::exp(-1.0), 1e-14));

  const auto pg = kernels::power_gap(1.0, 2.0);
  CHECK_THAT(pg.gap(0.1), Catch::Matchers::WithinRel(0.01, 1e-14));

  // stable forms must not lose the leading order in double precision
  const auto gau = kernels::gaussian();
  CHECK_THAT(gau.gap(1e-8), Catch::Matchers::WithinRel(1e-16, 1e-10));
  const auto bes = kernels::c1_bessel();
  CHECK_THAT(bes.gap(1e-8), Catch::Matchers::WithinRel(1e-16, 1e-6));
  CHECK(bes.gap(1e-12) > 0.0);
}

TEST_CASE("c1_bessel gap series matches direct form where both are accurate") {
  const auto bes = kernels::c1_bessel();
  for (double r : {0.05, 0.1, 0.2, 0.24}) {
    const double direct = 2.0 - 2.0 * (1.0 + r) * std::exp(-r);
    CHECK_THAT(bes.gap(r), Catch::Matchers::WithinRel(direct, 1e-12));
  }
}

TEST_CASE("make_kernel rejects bad parameters") {
  KernelSpec s;
  s.variant = Variant::log_modified;
  s.c = 1.0;  // boundary excluded
  CHECK_THROWS_AS(kernels::make_kernel(s), std::invalid_argument);
  s.c = 2.5;
  CHECK_THROWS_AS(kernels::make_kernel(s), std::invalid_argument);

  s = KernelSpec{};
  s.variant = Variant::power_gap;
  s.D = -1.0;
  CHECK_THROWS_AS(kernels::make_kernel(s), std::invalid_argument);

  s = KernelSpec{};
  s.variant = Variant::tabulated;
  s.samples = {{0.0, 1.0}, {1.0, 1.5}, {2.0, 2.0}};  // increasing values
  CHECK_THROWS_AS(kernels::make_kernel(s), std::invalid_argument);
  s.samples = {{1.0, 0.5}, {2.0, 0.4}, {3.0, 0.3}};  // eval(0) missing
  CHECK_THROWS_AS(kernels::make_kernel(s), std::invalid_argument);
}

TEST_CASE("log_modified extension is C1-matched and strictly decreasing") {
  for (double c : {1.1, 1.5, 2.0}) {
    const auto k = kernels::log_modified(c);
    const double h = 1e-7;
    // value continuity and one-sided slopes agree across r = 1/2
    CHECK_THAT(k.eval(0.5 - h), Catch::Matchers::WithinRel(k.eval(0.5 + h), 1e-5));
    const double dl = (k.eval(0.5) - k.eval(0.5 - h)) / h;
    const double dr = (k.eval(0.5 + h) - k.eval(0.5)) / h;
    CHECK_THAT(dl, Catch::Matchers::WithinRel(dr, 1e-4));
    // strictly decreasing through and beyond the junction
    double prev = k.eval(0.3);
    for (double r = 0.35; r < 3.0; r += 0.05) {
      const double v = k.eval(r);
      CHECK(v < prev);
      CHECK(v > 0.0);
      prev = v;
    }
  }
}

TEST_CASE("gap of log_modified is exactly the defining formula on (0, 1/2]") {
  const auto k = kernels::log_modified(1.5);
  for (double r : {1e-8, 1e-4, 0.01, 0.3, 0.5}) {
    const double expect = r * r * std::pow(1.0 - std::log(r), 1.5);
    CHECK_THAT(k.gap(r), Catch::Matchers::WithinRel(expect, 1e-15));
  }
  // gap(r)/r^2 increases without bound along r = 10^-1 .. 10^-8
  double prev = 0.0;
  for (int e = 1; e <= 8; ++e) {
    const double r = std::pow(10.0, -e);
    const double ratio = k.gap(r) / (r * r);
    CHECK(ratio > prev);
    prev = ratio;
  }
}

TEST_CASE("strict decrease and positivity on random pairs") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(std::log(1e-3), std::log(100.0));
  const Kernel ks[] = {kernels::laplacian(), kernels::c1_bessel(),
                       kernels::gaussian(), kernels::log_modified(1.5),
                       kernels::power_gap(1.0, 2.0)};
  for (const auto& k : ks) {
    for (int trial = 0; trial < 300; ++trial) {
      double r1 = std::exp(U(rng)), r2 = std::exp(U(rng));
      if (r1 > r2) std::swap(r1, r2);
      if (r1 == r2) continue;
      const double v1 = k.eval(r1), v2 = k.eval(r2);
      CHECK(v1 >= 0.0);
      CHECK(v2 >= 0.0);
      if (v1 > 1e-290) {
        // below ~1e-290 the tail of exp(-r^2) floors at double underflow
        CHECK(v1 > v2);
        if (v2 > 0.0) CHECK(v2 < v1);
      }
    }
  }
}

TEST_CASE("derivative matches central finite differences") {
  const Kernel ks[] = {kernels::laplacian(), kernels::c1_bessel(),
                       kernels::gaussian(), kernels::log_modified(1.5),
                       kernels::power_gap(1.0, 2.0),
                       kernels::power_gap(3.0, 0.5)};
  for (const auto& k : ks) {
    for (double lr = std::log(1e-2); lr <= std::log(100.0) + 1e-9;
         lr += 0.37) {
      const double r = std::exp(lr);
      const double h = 1e-6 * std::max(r, 1.0);
      bool skip = false;
      for (double b : k.breakpoints())
        if (std::abs(r - b) < 10 * h) skip = true;
      if (skip) continue;
      const double d = k.deriv(r);
      const double fd = (k.eval(r + h) - k.eval(r - h)) / (2 * h);
      if (std::abs(d) < 1e-250) continue;
      CHECK_THAT(fd, Catch::Matchers::WithinRel(d, 1e-5));
      CHECK(d < 0.0);
    }
  }
}

TEST_CASE("deriv at zero: raises for non-C1 profiles, zero for C1") {
  CHECK_THROWS_AS(kernels::laplacian().deriv(0.0), std::domain_error);
  CHECK_THROWS_AS(kernels::power_gap(1.0, 1.0).deriv(0.0), std::domain_error);
  CHECK_THROWS_AS(kernels::power_gap(1.0, 0.5).deriv(0.0), std::domain_error);
  CHECK(kernels::c1_bessel().deriv(0.0) == 0.0);
  CHECK(kernels::gaussian().deriv(0.0) == 0.0);
  CHECK(kernels::log_modified(1.5).deriv(0.0) == 0.0);
  CHECK(kernels::power_gap(1.0, 2.0).deriv(0.0) == 0.0);
}

TEST_CASE("validate flags constructed violations") {
  // increasing "kernel" presented directly as component maps
  const auto bad = Kernel::custom_kernel(
      "bad_tab", 1.0,
      [](double r) { return 1.0 + 0.5 * r; },
      [](double) { return 0.5; });
  const auto rep = kernels::validate(bad, {0.0, 0.5, 1.0});
  CHECK_FALSE(rep.pass());
  bool monotonicity_at_1 = false;
  for (const auto& v : rep.violations)
    if (v.kind == "monotonicity" && v.r == 1.0) monotonicity_at_1 = true;
  CHECK(monotonicity_at_1);

  CHECK_THROWS_AS(kernels::validate(bad, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("validate passes builtins with small derivative mismatch") {
  std::vector<double> grid;
  grid.push_back(0.0);
  for (int i = 0; i <= 40; ++i)
    grid.push_back(std::pow(10.0, -3.0 + 4.0 * i / 40.0));
  const auto rep = kernels::validate(kernels::gaussian(), grid);
  CHECK(rep.pass());
  CHECK(rep.max_deriv_mismatch < 1e-6);
  CHECK(kernels::validate(kernels::laplacian(), grid).pass());
}

TEST_CASE("tabulated kernel interpolates monotonically") {
  KernelSpec s;
  s.variant = Variant::tabulated;
  const auto ref = kernels::laplacian();
  s.samples.push_back({0.0, 1.0});
  for (double r = 0.1; r <= 5.01; r += 0.1) s.samples.push_back({r, ref.eval(r)});
  const auto k = kernels::make_kernel(s);
  CHECK(k.k0() == 1.0);
  for (double r = 0.05; r < 5.0; r += 0.07)
    CHECK_THAT(k.eval(r), Catch::Matchers::WithinRel(ref.eval(r), 5e-3));
  // beyond the last sample only the shape is guaranteed
  double prev = k.eval(5.0);
  for (double r = 5.2; r < 8.0; r += 0.2) {
    CHECK(k.eval(r) > 0.0);
    CHECK(k.eval(r) < prev);
    prev = k.eval(r);
  }
  // gap below the smallest positive sample follows a fitted power law
  const double g1 = k.gap(0.05), g2 = k.gap(0.025);
  const double gamma_fit = std::log(g1 / g2) / std::log(2.0);
  CHECK(gamma_fit > 0.8);
  CHECK(gamma_fit < 1.2);
}

TEST_CASE("kernel spec ranges for power_gap behave as a gamma dial") {
  for (double g : {0.5, 1.0, 1.9, 2.0, 3.0}) {
    const auto k = kernels::power_gap(1.0, g);
    CHECK_THAT(k.gap(1e-3), Catch::Matchers::WithinRel(std::pow(1e-3, g), 1e-12));
  }
}
