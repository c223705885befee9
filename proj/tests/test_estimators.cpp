#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crossover/errors.hpp"
#include "crossover/estimators.hpp"

using namespace crossover;
using namespace crossover::langevin;
using namespace crossover::estimators;

namespace {

TrajectoryArchive empty_archive(int n_atoms, std::size_t n_traj, std::size_t n_times, double stride) {
  TrajectoryArchive a;
  a.n_atoms = n_atoms;
  a.n_traj = n_traj;
  a.times.resize(n_times);
  for (std::size_t k = 0; k < n_times; ++k) a.times[k] = stride * static_cast<double>(k);
  a.samples.assign(n_traj * n_times, PhaseSpacePoint::Zero());
  return a;
}

// Symmetric-ordered samples of a field: coherent amplitude alpha plus vacuum noise,
// optionally thermal with n_th extra photons.
TrajectoryArchive field_archive(double alpha, double n_th, std::size_t n_traj, std::size_t n_times,
                                std::uint64_t seed) {
  auto a = empty_archive(10, n_traj, n_times, 1.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.25 + 0.5 * n_th));
  for (auto& x : a.samples) {
    x[kQ] = alpha + g(rng);
    x[kP] = g(rng);
    x[kSz] = -1.0;
  }
  return a;
}

// Field of constant amplitude whose phase performs a Wiener walk with rate d:
// |<a*(t+tau) a(t)>| = A^2 exp(-d tau / 2), i.e. a Lorentzian of FWHM d.
TrajectoryArchive diffusing_phase(double amp, double d, double stride, std::size_t n_traj, std::size_t n_times,
                                  std::uint64_t seed) {
  auto a = empty_archive(10, n_traj, n_times, stride);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < n_traj; ++i) {
    double phi = u(rng);
    for (std::size_t k = 0; k < n_times; ++k) {
      if (k > 0) phi += std::sqrt(d * stride) * g(rng);
      auto& x = a.samples[i * n_times + k];
      x[kQ] = amp * std::cos(phi);
      x[kP] = -amp * std::sin(phi);
    }
  }
  return a;
}

}  // namespace

TEST_CASE("vacuum field carries no photons") {
  const auto a = field_archive(0.0, 0.0, 400, 200, 1);
  const auto m = field_moments(a);
  CHECK(std::abs(m.photons) < 3.0 * m.photons_err + 1e-12);
  CHECK(m.photons_err < 0.01);
  CHECK(std::abs(m.photons2) < 0.02);
}

TEST_CASE("coherent field: photons alpha^2 and g2 = 1") {
  const double alpha = 3.0;
  const auto a = field_archive(alpha, 0.0, 400, 200, 2);
  const auto m = field_moments(a);
  CHECK(m.photons == doctest::Approx(alpha * alpha).epsilon(0.01));
  CHECK(std::abs(m.photons - alpha * alpha) < 4.0 * m.photons_err);
  CHECK(m.photons2 == doctest::Approx(std::pow(alpha, 4)).epsilon(0.02));
  CHECK(std::abs(m.g2 - 1.0) < 4.0 * m.g2_err);
}

TEST_CASE("thermal field: g2 = 2") {
  const auto a = field_archive(0.0, 5.0, 400, 200, 3);
  const auto m = field_moments(a);
  CHECK(m.photons == doctest::Approx(5.0).epsilon(0.02));
  CHECK(std::abs(m.g2 - 2.0) < 4.0 * m.g2_err);
  CHECK(m.g2_err < 0.05);
}

TEST_CASE("negative photon number beyond the noise floor is reported") {
  auto a = empty_archive(10, 10, 10, 1.0);
  // Every sample at the origin: symmetric intensity 0, i.e. -1/2 photons with zero scatter.
  CHECK_THROWS_AS(field_moments(a), BelowNoiseFloor);
}

TEST_CASE("jackknife error of a plain mean equals the standard error") {
  auto a = empty_archive(10, 50, 1, 1.0);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(50);
  double m = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    a.samples[i][kQ] = 2.0 + 0.3 * g(rng);
    v[i] = a.samples[i][kQ] * a.samples[i][kQ];
    m += v[i];
  }
  m /= 50.0;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / 49.0 / 50.0);
  const auto f = field_moments(a);
  CHECK(f.photons == doctest::Approx(m - 0.5));
  CHECK(f.photons_err == doctest::Approx(se).epsilon(1e-10));
}

TEST_CASE("spin moments of independent atoms") {
  // Independent atoms at inversion d0: symmetric-ordered transverse moment
  // <Sx^2 + Sy^2> = 1/(2N), so <S^+ S^-> = (1 + d0)/(2N) and no pair correlation.
  const int n = 50;
  const double d0 = 0.6;
  auto a = empty_archive(n, 2, 1, 1.0);
  a.samples[0] << 0.0, 0.0, std::sqrt(0.5 / n), 0.0, d0;
  a.samples[1] << 0.0, 0.0, 0.0, std::sqrt(0.5 / n), d0;
  const auto s = spin_moments(a, n);
  CHECK(s.sz == doctest::Approx(d0));
  CHECK(s.sz_err == 0.0);
  CHECK(std::abs(s.spin_corr) < 1e-15);
  CHECK_THROWS_AS(spin_moments(a, 1), InvalidParams);
}

TEST_CASE("spin correlation of a coherent spin state") {
  // All atoms in the same pure state with Bloch vector (sin th, 0, cos th):
  // <sigma_1^+ sigma_2^-> = sin^2(th)/4 exactly.
  const int n = 200;
  const double th = 0.7;
  auto a = empty_archive(n, 2, 1, 1.0);
  // Symmetric ordering adds the single-atom transverse variance 1/(4N) per quadrature,
  // minus the longitudinal part: Var(Sy) = 1/(4N), Var(Sx) = cos^2(th)/(4N).
  const double sx = 0.5 * std::sin(th);
  const double vy = 1.0 / (4.0 * n), vx = std::cos(th) * std::cos(th) / (4.0 * n);
  a.samples[0] << 0.0, 0.0, sx + std::sqrt(vx), std::sqrt(vy), std::cos(th);
  a.samples[1] << 0.0, 0.0, sx - std::sqrt(vx), -std::sqrt(vy), std::cos(th);
  const auto s = spin_moments(a, n);
  CHECK(s.spin_corr.real() == doctest::Approx(std::sin(th) * std::sin(th) / 4.0).epsilon(1e-12));
}

TEST_CASE("g1 of a constant field is flat") {
  auto a = empty_archive(10, 3, 64, 0.5);
  for (auto& x : a.samples) x << 2.0, 1.0, 0.0, 0.0, 0.0;
  const auto c = g1_correlation(a, 10.0, 50);
  REQUIRE(c.tau.size() == 21);
  for (std::size_t j = 0; j < c.tau.size(); ++j) {
    CHECK(c.tau[j] == doctest::Approx(0.5 * j));
    CHECK(c.value[j].real() == doctest::Approx(5.0));
    CHECK(std::abs(c.value[j].imag()) < 1e-12);
    CHECK(c.stderr_abs[j] < 1e-12);
  }
  CHECK_THROWS_AS(g1_correlation(a, 100.0), InvalidParams);
}

TEST_CASE("g1 matches the direct double sum") {
  auto a = empty_archive(10, 4, 37, 0.1);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& x : a.samples) x << g(rng), g(rng), 0.0, 0.0, 0.0;
  const auto c = g1_correlation(a, 1.5, 0);
  for (std::size_t j = 0; j < c.tau.size(); ++j) {
    Complex ref{};
    for (std::size_t i = 0; i < a.n_traj; ++i) {
      Complex s{};
      for (std::size_t k = 0; k + j < a.n_times(); ++k) {
        const Complex later(a.at(i, k + j)[kQ], -a.at(i, k + j)[kP]);
        const Complex now(a.at(i, k)[kQ], -a.at(i, k)[kP]);
        s += std::conj(later) * now;
      }
      ref += s / static_cast<double>(a.n_times() - j);
    }
    ref /= static_cast<double>(a.n_traj);
    CHECK(std::abs(c.value[j] - ref) < 1e-12);
  }
}

TEST_CASE("pure exponential decay is recovered") {
  CorrelationSeries c;
  const double width = 0.37;
  for (int j = 0; j <= 200; ++j) {
    c.tau.push_back(0.05 * j);
    c.value.push_back(3.0 * std::exp(Complex(-0.5 * width, 1.3) * (0.05 * j)));
  }
  const auto f = fit_linewidth(c);
  CHECK(f.linewidth == doctest::Approx(width).epsilon(1e-3));
  CHECK(f.rms_residual < 1e-10);
  CHECK_FALSE(f.fit_quality_warning);
  CHECK(f.n_points >= 3);
  // Window: |C| between 0.8 and 0.2 of its initial value.
  const double t_lo = -2.0 * std::log(0.8) / width, t_hi = -2.0 * std::log(0.2) / width;
  CHECK(static_cast<double>(f.n_points) == doctest::Approx((t_hi - t_lo) / 0.05).epsilon(0.05));
}

TEST_CASE("white noise gives no fit window") {
  CorrelationSeries c;
  c.tau = {0.0, 1.0, 2.0, 3.0, 4.0};
  c.value = {1.0, 0.01, -0.02, 0.005, 0.0};
  CHECK_THROWS_AS(fit_linewidth(c), WindowTooShort);
  CorrelationSeries flat;
  flat.tau = {0.0, 1.0, 2.0, 3.0};
  flat.value = {1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(fit_linewidth(flat), WindowTooShort);
}

TEST_CASE("phase-diffusing oscillator calibration") {
  const double d = 0.4;
  const auto a = diffusing_phase(1.5, d, 0.1, 200, 2000, 6);
  const auto c = g1_correlation(a, 15.0);
  const auto f = fit_linewidth(c);
  CHECK(f.linewidth == doctest::Approx(d).epsilon(0.05));
  CHECK(std::abs(f.linewidth - d) < 4.0 * f.linewidth_err + 0.01 * d);
  CHECK(f.linewidth_err > 0.0);
  CHECK(std::abs(c.value[0]) == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("trend test separates drift from fluctuations") {
  auto still = field_archive(2.0, 0.0, 200, 100, 8);
  auto moving = still;
  for (std::size_t i = 0; i < moving.n_traj; ++i)
    for (std::size_t k = 0; k < moving.n_times(); ++k) moving.samples[i * 100 + k][kQ] += 0.01 * k;
  CHECK_FALSE(trend(still).significant());
  const auto t = trend(moving);
  CHECK(t.significant());
  CHECK(t.slope > 0.0);
  for (auto& x : moving.samples) x[kSz] = 0.3;
  CHECK(trend(moving, true).slope == doctest::Approx(0.0));
}

TEST_CASE("observables bundle the two moment groups") {
  auto a = field_archive(2.0, 0.0, 50, 20, 9);
  const auto r = observables(a);
  const auto f = field_moments(a);
  const auto s = spin_moments(a, a.n_atoms);
  CHECK(r.photons == f.photons);
  CHECK(r.g2 == f.g2);
  CHECK(r.sz == s.sz);
  CHECK(r.spin_corr == s.spin_corr);
  CHECK_FALSE(r.linewidth.has_value());
}
