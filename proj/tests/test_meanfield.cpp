#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "crossover/errors.hpp"
#include "crossover/meanfield.hpp"

using namespace crossover;
using meanfield::MeanFieldState;

namespace {

SystemParams small_set(double w) {
  SystemParams p;
  p.n_atoms = 40;
  p.coupling = 5.0;
  p.kappa = 25.0;
  p.repump = w;
  return p;
}

std::vector<meanfield::MeanFieldSample> relax(const SystemParams& p, double t_end) {
  MeanFieldState init;
  init.s_minus = {1e-3, 0.0};
  const double dt = meanfield::max_step(p);
  return meanfield::integrate(p, init, t_end, dt, 100);
}

}  // namespace

TEST_CASE("steady state at the small-ensemble optimum") {
  const auto s = meanfield::steady_state_analytic(small_set(19.0));
  CHECK(s.above_threshold);
  CHECK(s.s_z == doctest::Approx(0.5));
  // N (w+gamma)/(2 kappa) (d0 - 1/C) = 16 * 0.4
  CHECK(s.photons == doctest::Approx(6.4));
  CHECK(s.omega == 0.0);
}

TEST_CASE("photon number of the crossover ensemble at its optimum") {
  SystemParams p;
  p.n_atoms = 10000;
  p.coupling = std::sqrt(12.5);
  p.kappa = 125.0;
  p.repump = 499.0;
  CHECK(meanfield::steady_state_analytic(p).photons == doctest::Approx(9920.0));
}

TEST_CASE("noise-free integration converges to the analytic steady state") {
  const auto p = small_set(19.0);
  const auto traj = relax(p, 40.0);
  const auto& last = traj.back().state;
  const auto s = meanfield::steady_state_analytic(p);
  CHECK(std::norm(last.a0) == doctest::Approx(s.photons).epsilon(0.01));
  CHECK(last.s_z == doctest::Approx(s.s_z).epsilon(0.01));
  CHECK(traj.front().t == 0.0);
  CHECK(traj.back().t == doctest::Approx(40.0));
}

TEST_CASE("detuned integration: pulled frequency and exact photon balance") {
  auto p = small_set(19.0);
  p.omega_a = 2.0;
  p.omega_c = -0.5;
  const auto s = meanfield::steady_state_analytic(p);
  const double pulled = (p.kappa * p.omega_a + 20.0 * p.omega_c) / (p.kappa + 20.0);
  CHECK(s.omega == doctest::Approx(pulled));

  const auto traj = relax(p, 60.0);
  const auto& a = traj[traj.size() - 11].state;
  const auto& b = traj.back().state;
  const double span = traj.back().t - traj[traj.size() - 11].t;
  // Phase of the field in the frame rotating at omega_c advances at -(omega - omega_c).
  const double rate = -std::arg(b.a0 / a.a0) / span;
  CHECK(rate == doctest::Approx(s.omega - p.omega_c).epsilon(1e-4));
  CHECK(b.s_z == doctest::Approx(s.s_z).epsilon(1e-4));
  // Energy balance of the inversion equation, valid for any detuning.
  const double balance = p.n_atoms * (p.repump + p.gamma) / (2.0 * p.kappa) * ((p.repump - 1.0) / (p.repump + 1.0) - s.s_z);
  CHECK(std::norm(b.a0) == doctest::Approx(balance).epsilon(1e-4));
}

TEST_CASE("below threshold the field decays") {
  const auto p = small_set(0.5);
  const auto s = meanfield::steady_state_analytic(p);
  CHECK_FALSE(s.above_threshold);
  CHECK(s.photons < 0.0);
  const auto traj = relax(p, 20.0);
  CHECK(std::abs(traj.back().state.a0) < 1e-6);
  CHECK(traj.back().state.s_z == doctest::Approx((0.5 - 1.0) / 1.5).epsilon(1e-6));
}

TEST_CASE("step size is bounded") {
  const auto p = small_set(19.0);
  MeanFieldState init;
  CHECK_THROWS_AS(meanfield::integrate(p, init, 1.0, 2.0 * meanfield::max_step(p)), StepSizeViolation);
  CHECK_THROWS_AS(meanfield::integrate(p, init, -1.0, meanfield::max_step(p)), InvalidParams);
}

TEST_CASE("pulling coefficients") {
  auto p = small_set(9.0);
  const auto s = meanfield::sensitivity(p);
  CHECK(s.d_omega_c == doctest::Approx(2.0 / 7.0));
  CHECK(s.d_omega_a == doctest::Approx(5.0 / 7.0));
  CHECK(s.d_omega_c == doctest::Approx(0.2857).epsilon(1e-3));
  CHECK(s.d_omega_a == doctest::Approx(0.7143).epsilon(1e-3));
}

TEST_CASE("property: pulling coefficients sum to one and match finite differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    SystemParams p;
    p.n_atoms = 1 + static_cast<int>(1e4 * u(rng));
    p.coupling = 0.1 + 5 * u(rng);
    p.kappa = 0.1 + 1e3 * u(rng);
    p.repump = 1e3 * u(rng);
    p.t2_inv = 10 * u(rng);
    p.omega_a = u(rng);
    p.omega_c = -u(rng);
    const auto s = meanfield::sensitivity(p);
    CHECK(s.d_omega_a + s.d_omega_c == doctest::Approx(1.0).epsilon(1e-14));
    const double h = 1e-4;
    auto qa = p, qc = p;
    qa.omega_a += h;
    qc.omega_c += h;
    const double w0 = meanfield::steady_state_analytic(p).omega;
    CHECK((meanfield::steady_state_analytic(qa).omega - w0) / h == doctest::Approx(s.d_omega_a).epsilon(1e-6));
    CHECK((meanfield::steady_state_analytic(qc).omega - w0) / h == doctest::Approx(s.d_omega_c).epsilon(1e-6));
  }
}

TEST_CASE("photon curve changes sign at the two thresholds") {
  SystemParams p;
  p.n_atoms = 10000;
  p.coupling = std::sqrt(12.5);
  p.kappa = 125.0;
  std::vector<double> grid;
  for (double w = 0.5; w < 1200.0; w *= 1.001) grid.push_back(w);
  const auto curve = meanfield::photon_curve(p, grid);
  std::vector<double> crossings;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if ((curve[i - 1].solution.photons > 0.0) != (curve[i].solution.photons > 0.0))
      crossings.push_back(0.5 * (curve[i - 1].repump + curve[i].repump));
  REQUIRE(crossings.size() == 2);
  // d0 = 1/C reduces to w^2 - (w2 - 2) w + (w2 + 1) = 0 with w2 = N Omega^2 / kappa = 1000.
  const double b = 998.0, c = 1001.0;
  const double lo = 0.5 * (b - std::sqrt(b * b - 4 * c));
  const double hi = 0.5 * (b + std::sqrt(b * b - 4 * c));
  CHECK(crossings[0] == doctest::Approx(lo).epsilon(1e-3));
  CHECK(crossings[1] == doctest::Approx(hi).epsilon(1e-3));
  CHECK(lo == doctest::Approx(1.004).epsilon(1e-3));
  CHECK(hi == doctest::Approx(997.0).epsilon(1e-3));

  const std::vector<double> descending = {3.0, 2.0};
  CHECK_THROWS_AS(meanfield::photon_curve(p, descending), InvalidParams);
}

TEST_CASE("property: steady state is a fixed point of the equations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    SystemParams p;
    p.n_atoms = 10 + static_cast<int>(1e4 * u(rng));
    p.coupling = 0.5 + 3 * u(rng);
    p.kappa = 1.0 + 50 * u(rng);
    p.repump = 2.0 + 50 * u(rng);
    const auto s = meanfield::steady_state_analytic(p);
    if (!s.above_threshold) continue;
    // Resonant solution: real field, s_minus fixed by the field equation.
    MeanFieldState x;
    x.a0 = std::sqrt(s.photons);
    x.s_minus = Complex(0.0, p.kappa * x.a0.real() / (p.n_atoms * p.coupling));
    x.s_z = s.s_z;
    const auto d = meanfield::rhs(x, p);
    const double scale = p.kappa * std::abs(x.a0) + 1.0;
    CHECK(std::abs(d.a0) / scale < 1e-12);
    CHECK(std::abs(d.s_minus) / scale < 1e-12);
    CHECK(std::abs(d.s_z) / scale < 1e-10);
  }
}
