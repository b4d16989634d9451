#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "landmark/completeness.hpp"
#include "landmark/kernels.hpp"

using namespace landmark;
using completeness::Geodesic;
using completeness::IntegralStatus;

// Closed forms used as oracles: with u = 1 - log r,
// integral_0^1 dr / (r (1 - log r)^beta) = 1/(beta-1) for beta > 1 and
// diverges for beta <= 1 (change of variables to u^-beta on [1, inf)).
static double log_power_integrand(double r, double beta) {
  return 1.0 / (r * std::pow(1.0 - std::log(r), beta));
}

TEST_CASE("engine: convergent log-power integrals hit the closed form") {
  for (double beta : {1.5, 2.0, 3.0}) {
    const auto v = completeness::improper_integral(
        [beta](double r) { return log_power_integrand(r, beta); }, 1.0);
    REQUIRE(v.status == IntegralStatus::convergent);
    CHECK_THAT(v.value,
               Catch::Matchers::WithinAbs(1.0 / (beta - 1.0), 1e-6));
  }
}

TEST_CASE("engine: divergent log-power integrals") {
  for (double beta : {0.5, 1.0}) {
    const auto v = completeness::improper_integral(
        [beta](double r) { return log_power_integrand(r, beta); }, 1.0);
    CHECK(v.status == IntegralStatus::divergent);
  }
}

TEST_CASE("engine: pure powers") {
  const auto v = completeness::improper_integral(
      [](double r) { return 1.0 / std::sqrt(r); }, 1.0);
  REQUIRE(v.status == IntegralStatus::convergent);
  CHECK_THAT(v.value, Catch::Matchers::WithinAbs(2.0, 1e-8));

  const auto d1 = completeness::improper_integral(
      [](double r) { return 1.0 / r; }, 1.0);
  CHECK(d1.status == IntegralStatus::divergent);
  const auto d2 = completeness::improper_integral(
      [](double r) { return std::pow(r, -1.5); }, 1.0);
  CHECK(d2.status == IntegralStatus::divergent);
}

TEST_CASE("engine: evidence is monotone with decreasing cutoffs") {
  const auto v = completeness::improper_integral(
      [](double r) { return 1.0 / std::sqrt(r); }, 2.0);
  REQUIRE(v.evidence.size() >= 2);
  for (std::size_t i = 1; i < v.evidence.size(); ++i) {
    CHECK(v.evidence[i].first < v.evidence[i - 1].first);
    CHECK(v.evidence[i].second >= v.evidence[i - 1].second);
  }
  REQUIRE(v.exponent_fit.has_value());
  CHECK_THAT(v.exponent_fit->gamma, Catch::Matchers::WithinAbs(-0.5, 1e-6));
}

TEST_CASE("engine: non-finite integrand raises") {
  CHECK_THROWS_AS(completeness::improper_integral(
                      [](double r) {
                        return r < 0.3 ? std::numeric_limits<double>::quiet_NaN()
                                       : 1.0;
                      },
                      1.0),
                  quad::QuadratureError);
}

TEST_CASE("classify: builtin kernels match the characterization") {
  CHECK(completeness::classify_geodesic(kernels::laplacian()).geodesic ==
        Geodesic::incomplete);
  CHECK(completeness::classify_geodesic(kernels::c1_bessel()).geodesic ==
        Geodesic::complete);
  CHECK(completeness::classify_geodesic(kernels::gaussian()).geodesic ==
        Geodesic::complete);
  for (double c : {1.1, 1.5, 2.0})
    CHECK(completeness::classify_geodesic(kernels::log_modified(c)).geodesic ==
          Geodesic::complete);
}

TEST_CASE("classify: verdict flips exactly at gamma = 2") {
  for (double g : {0.5, 1.0, 1.5, 1.9})
    CHECK(completeness::classify_geodesic(kernels::power_gap(1.0, g)).geodesic ==
          Geodesic::incomplete);
  for (double g : {2.0, 2.5, 3.0})
    CHECK(completeness::classify_geodesic(kernels::power_gap(1.0, g)).geodesic ==
          Geodesic::complete);
}

TEST_CASE("classify: verdict is a-independent") {
  const kernels::Kernel ks[] = {kernels::laplacian(), kernels::c1_bessel(),
                                kernels::gaussian(),
                                kernels::log_modified(1.5),
                                kernels::power_gap(1.0, 2.0)};
  for (const auto& k : ks) {
    const auto g1 = completeness::classify_geodesic(k, 0.1).geodesic;
    const auto g2 = completeness::classify_geodesic(k, 1.0).geodesic;
    const auto g3 = completeness::classify_geodesic(k, 5.0).geodesic;
    CHECK(g1 == g2);
    CHECK(g2 == g3);
  }
}

TEST_CASE("classify: log_modified is decided by the integral engine") {
  // the gap exponent fit drifts below 2 because of the log factor, yet the
  // verdict must still be complete for every admissible c
  for (double c : {1.1, 1.5, 2.0}) {
    const auto k = kernels::log_modified(c);
    const auto fit = completeness::estimate_gap_exponent(k);
    CHECK(fit.gamma < 2.0);
    CHECK(completeness::classify_geodesic(k).geodesic == Geodesic::complete);
  }
}

TEST_CASE("gap exponent estimation") {
  const auto pg = completeness::estimate_gap_exponent(kernels::power_gap(3.0, 2.0));
  CHECK_THAT(pg.gamma, Catch::Matchers::WithinAbs(2.0, 1e-6));
  CHECK_THAT(pg.D, Catch::Matchers::WithinAbs(3.0, 1e-4));
  CHECK(pg.residual < 1e-8);

  // Taylor oracles: 1 - e^-r = r + O(r^2), 1 - e^-r^2 = r^2 + O(r^4)
  const auto lap = completeness::estimate_gap_exponent(kernels::laplacian());
  CHECK_THAT(lap.gamma, Catch::Matchers::WithinAbs(1.0, 1e-2));
  const auto gau = completeness::estimate_gap_exponent(kernels::gaussian());
  CHECK_THAT(gau.gamma, Catch::Matchers::WithinAbs(2.0, 1e-2));
  const auto bes = completeness::estimate_gap_exponent(kernels::c1_bessel());
  CHECK_THAT(bes.gamma, Catch::Matchers::WithinAbs(2.0, 1e-2));
}

TEST_CASE("gap exponent: underflowed gap is reported unfittable") {
  const auto zero = kernels::Kernel::custom_kernel(
      "tiny_gap", 1.0, [](double) { return 1.0; }, [](double) { return -0.0; },
      "stub", [](double) { return 0.0; });
  CHECK_THROWS(completeness::estimate_gap_exponent(zero));
}
