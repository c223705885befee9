#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "crossover/errors.hpp"
#include "crossover/params.hpp"

using namespace crossover;

namespace {

SystemParams make(int n, double omega, double kappa, double w, double t2 = 0.0) {
  SystemParams p;
  p.n_atoms = n;
  p.coupling = omega;
  p.kappa = kappa;
  p.repump = w;
  p.t2_inv = t2;
  return p;
}

}  // namespace

TEST_CASE("decoherence and bare inversion at w = 2") {
  const auto d = derive(make(1, 1.0, 1.0, 2.0));
  CHECK(d.Gamma == doctest::Approx(3.0));
  CHECK(d.d0 == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("small-ensemble superradiant set: N=40, Omega=5, kappa=25") {
  // Omega^2/(kappa gamma) = 1 and xi = 0.2 fix kappa = N/(8 xi) = 25.
  const int n = 40;
  const double kappa = n / (8.0 * 0.2);
  const double omega = std::sqrt(kappa);
  CHECK(kappa == 25.0);
  const auto d = derive(make(n, omega, kappa, 19.0));
  CHECK(d.xi == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(d.w_opt == doctest::Approx(n * 25.0 / (2 * 25.0) - 1.0));
  CHECK(d.w_opt == doctest::Approx(19.0));
  CHECK(d.photons_opt == doctest::Approx(8.0));
  CHECK(d.w2 == doctest::Approx(40.0));
  CHECK(d.cooperativity == doctest::Approx(2.0));
}

TEST_CASE("large-ensemble crossover set: N=1e4, Omega^2=12.5, kappa=125") {
  const auto d = derive(make(10000, std::sqrt(12.5), 125.0, 0.0));
  CHECK(d.xi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.w_opt == doctest::Approx(499.0));
  CHECK(d.photons_opt == doctest::Approx(1e4));
}

TEST_CASE("crossover parameter examples") {
  CHECK(crossover_xi(make(40, 1.0, 1.0, 0.0)) == doctest::Approx(5.0));
  CHECK(crossover_xi(make(8, 3.0, 3.0, 0.0)) == doctest::Approx(1.0));
  CHECK(crossover_xi(make(10000, std::sqrt(1.25), 12.5, 0.0)) == doctest::Approx(10.0));
}

TEST_CASE("regime labels and boundaries") {
  CHECK(regime_label(0.2) == Regime::superradiant);
  CHECK(regime_label(1.0) == Regime::crossover);
  CHECK(regime_label(5.0) == Regime::lasing);
  CHECK(regime_label(0.5) == Regime::crossover);
  CHECK(regime_label(2.0) == Regime::crossover);
  CHECK(regime_label(std::nextafter(0.5, 0.0)) == Regime::superradiant);
  CHECK(regime_label(std::nextafter(2.0, 3.0)) == Regime::lasing);
  CHECK_THROWS_AS(regime_label(0.0), InvalidParams);
  CHECK_THROWS_AS(regime_label(-1.0), InvalidParams);
  CHECK(to_string(Regime::lasing) == "lasing");
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(validate(make(0, 1.0, 1.0, 1.0)), InvalidParams);
  CHECK_THROWS_AS(validate(make(1, 0.0, 1.0, 1.0)), InvalidParams);
  CHECK_THROWS_AS(validate(make(1, 1.0, -1.0, 1.0)), InvalidParams);
  CHECK_THROWS_AS(validate(make(1, 1.0, 1.0, -0.1)), InvalidParams);
  CHECK_THROWS_AS(validate(make(1, 1.0, 1.0, 1.0, -1.0)), InvalidParams);
  auto p = make(1, 1.0, 1.0, 1.0);
  p.omega_a = INFINITY;
  CHECK_THROWS_AS(validate(p), InvalidParams);
  p = make(1, 1.0, 1.0, 1.0);
  p.gamma = 0.0;
  CHECK_THROWS_AS(validate(p), InvalidParams);
}

TEST_CASE("negative optimum is reported, not rejected") {
  const auto d = derive(make(2, 0.1, 10.0, 1.0));
  CHECK(d.w_opt < 0.0);
  CHECK(d.w_opt_negative);
}

TEST_CASE("property: derived quantities over random parameters") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<int>(1 + 100000 * u(rng));
    auto p = make(n, 0.01 + 10.0 * u(rng), 0.1 + 1000.0 * u(rng), 1000.0 * u(rng), 100.0 * u(rng));
    p.omega_a = 50.0 * (u(rng) - 0.5);
    p.omega_c = 50.0 * (u(rng) - 0.5);
    const auto d = derive(p);
    CHECK(d.Gamma == p.repump + p.gamma + 2.0 * p.t2_inv);
    CHECK(d.d0 == (p.repump - p.gamma) / (p.repump + p.gamma));
    CHECK(std::abs(d.d0) <= 1.0);
    CHECK(d.xi == crossover_xi(p));
    CHECK(d.photons_opt / n == doctest::Approx(d.xi).epsilon(1e-15));
    if (d.w_opt > 0.0) CHECK(d.w_opt < d.w2);
    CHECK(d.w1 == p.gamma);

    // A common frequency shift moves nothing but the line center.
    auto q = p;
    const double shift = 1e3 * (u(rng) - 0.5);
    q.omega_a += shift;
    q.omega_c += shift;
    const auto e = derive(q);
    CHECK(e.xi == d.xi);
    CHECK(e.Gamma == d.Gamma);
    CHECK(e.d0 == d.d0);
    CHECK(e.w_opt == d.w_opt);
    CHECK(e.w2 == d.w2);
    CHECK(e.line_center == doctest::Approx(d.line_center + shift).epsilon(1e-12));
  }
}
