#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "crossover/bruteforce.hpp"
#include "crossover/errors.hpp"
#include "crossover/su4_basis.hpp"
#include "crossover/su4_exact.hpp"

using namespace crossover;
using namespace crossover::su4;

namespace {

SystemParams test_params(int n) {
  SystemParams p;
  p.n_atoms = n;
  p.coupling = 0.9;
  p.kappa = 1.7;
  p.repump = 2.3;
  p.t2_inv = 0.4;
  p.omega_a = 0.3;
  p.omega_c = -0.2;
  return p;
}

DetState random_det(const Basis& b, int cutoff, std::uint64_t seed) {
  DetState s = ground_state_det(b, cutoff);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < s.coeff.size(); ++i) s.coeff[i] = Complex(g(rng), g(rng));
  return s;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST_CASE("basis sizes") {
  CHECK(basis_size(1) == 4);
  CHECK(basis_size(2) == 10);
  CHECK(basis_size(40) == 12341);
  CHECK(Basis(2).size() == 10);
  for (int n = 1; n <= 60; ++n) {
    // Weak compositions of n into four parts.
    std::uint64_t count = 0;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b) count += static_cast<std::uint64_t>(n - a - b + 1);
    CHECK(basis_size(n) == count);
  }
  CHECK(Basis(60).size() == basis_size(60));
  CHECK_THROWS_AS(Basis(200, 1000), CapacityError);
}

TEST_CASE("basis index, moves, partners and multiplicities") {
  for (int n : {1, 3, 7}) {
    const Basis b(n);
    double total = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      const Counts& c = b[k];
      CHECK(c.ee + c.gg + c.eg + c.ge == n);
      CHECK(b.index(c) == static_cast<std::ptrdiff_t>(k));
      if (k > 0) {
        const Counts& prev = b[k - 1];
        const bool ordered = prev.ee < c.ee || (prev.ee == c.ee && (prev.gg < c.gg || (prev.gg == c.gg && prev.eg < c.eg)));
        CHECK(ordered);
      }
      const Counts& q = b[b.partner(k)];
      CHECK(q.eg == c.ge);
      CHECK(q.ge == c.eg);
      CHECK(b.partner(b.partner(k)) == k);
      const double mult = factorial(n) / (factorial(c.ee) * factorial(c.gg) * factorial(c.eg) * factorial(c.ge));
      CHECK(b.multiplicity(k) == doctest::Approx(mult));
      total += b.multiplicity(k);
      for (int from = 0; from < 4; ++from)
        for (int to = 0; to < 4; ++to) {
          const auto j = b.move(k, from, to);
          if (c[from] == 0) {
            CHECK(j == Basis::npos);
            continue;
          }
          REQUIRE(j != Basis::npos);
          for (int t = 0; t < 4; ++t) {
            const int expected = c[t] - (t == from) + (t == to);
            CHECK(b[static_cast<std::size_t>(j)][t] == expected);
          }
        }
    }
    CHECK(total == std::pow(4.0, n));
  }
}

TEST_CASE("Liouvillian matches the dense master equation") {
  for (int n : {1, 2, 3}) {
    const auto p = test_params(n);
    const Basis b(n);
    const int cutoff = 4;
    const auto g = bruteforce::build_generator(p, cutoff);
    const auto x = random_det(b, cutoff, 10 + n);
    const auto lx = apply_liouvillian_det(b, p, x);
    const Eigen::MatrixXcd dense = g.apply(bruteforce::expand_symmetric(b, x).rho);
    const Eigen::MatrixXcd mine = bruteforce::expand_symmetric(b, lx).rho;
    CHECK((dense - mine).norm() < 1e-12 * dense.norm());
  }
}

TEST_CASE("trace is conserved and Hermiticity preserved") {
  const int n = 4, cutoff = 5;
  const auto p = test_params(n);
  const Basis b(n);
  const auto x = random_det(b, cutoff, 3);
  const auto lx = apply_liouvillian_det(b, p, x);
  CHECK(std::abs(trace(b, lx)) < 1e-12 * lx.coeff.norm());

  auto dagger = [&](const DetState& s) {
    DetState d = s;
    for (std::size_t k = 0; k < b.size(); ++k)
      for (int m = 0; m < cutoff; ++m)
        for (int nn = 0; nn < cutoff; ++nn) d.at(k, m, nn) = std::conj(s.at(b.partner(k), nn, m));
    return d;
  };
  const auto l_of_dagger = apply_liouvillian_det(b, p, dagger(x));
  const auto dagger_of_l = dagger(lx);
  CHECK((l_of_dagger.coeff - dagger_of_l.coeff).norm() < 1e-12 * lx.coeff.norm());
}

TEST_CASE("spontaneous decay of fully excited atoms") {
  SystemParams p;
  p.n_atoms = 3;
  p.coupling = 1e-9;
  p.kappa = 1.0;
  const Basis b(3);
  DetState s = ground_state_det(b, 2);
  s.coeff.setZero();
  s.at(static_cast<std::size_t>(b.index({3, 0, 0, 0})), 0, 0) = 1.0;
  std::vector<double> t, sz;
  evolve_det(b, p, s, 3.0, 0.01, 1.0, [&](const DetState& x) {
    t.push_back(x.t);
    sz.push_back(observables(b, x).sz);
  });
  REQUIRE(t.size() == 4);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(sz[i] == doctest::Approx(2.0 * std::exp(-t[i]) - 1.0).epsilon(1e-9));
}

TEST_CASE("empty-cavity regression gives the cavity linewidth") {
  SystemParams p;
  p.n_atoms = 2;
  p.coupling = 1e-9;
  p.kappa = 2.5;
  const Basis b(2);
  const auto one_photon = ground_state_det(b, 3, 1);
  const auto r = linewidth_regression(b, p, one_photon, 2.0, 0.02, 0.01);
  CHECK(r.fit.linewidth == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(std::abs(r.series.value[0]) == doctest::Approx(1.0));
}

TEST_CASE("cutoff overflow is detected") {
  auto p = test_params(3);
  p.coupling = 3.0;
  p.repump = 10.0;
  const Basis b(3);
  auto s = ground_state_det(b, 2);
  CHECK_THROWS_AS(evolve_det(b, p, s, 5.0, 0.0), CutoffOverflow);
}

TEST_CASE("deterministic steady state is stationary") {
  const auto p = test_params(3);
  const Basis b(3);
  SteadyOptions o;
  o.cutoff = 14;
  o.tolerance = 1e-10;
  const auto ss = steady_state_det(b, p, o);
  CHECK(trace(b, ss.state).real() == doctest::Approx(1.0).epsilon(1e-10));
  const auto l = apply_liouvillian_det(b, p, ss.state);
  CHECK(l.coeff.norm() < 1e-7 * ss.state.coeff.norm());
  CHECK(ss.obs.sz > -1.0);
  CHECK(ss.obs.sz < 1.0);
}

TEST_CASE("jump examples") {
  auto p = test_params(3);
  const Basis b(3);
  auto s = ground_state_mc(b);
  CHECK(trace(b, s) == doctest::Approx(1.0));
  const auto w = jump_weights(b, p, s);
  CHECK(w[0] == doctest::Approx(3.0 * p.repump));
  CHECK(w[1] == 0.0);
  CHECK(w[2] == doctest::Approx(1.5 * p.t2_inv));
  CHECK(w[3] == 0.0);

  apply_jump(b, p, s, JumpChannel::kRepump);
  CHECK(s.quanta == 1);
  // One excitation shared symmetrically: each arrangement carries weight 1/3.
  CHECK(s.coeff[b.index({1, 2, 0, 0})].real() == doctest::Approx(1.0 / 3.0));
  CHECK(observables(b, s).sz == doctest::Approx(-1.0 / 3.0));
  CHECK(observables(b, s).photons == 0.0);

  // No photons yet: a cavity jump has zero weight and leaves nothing behind.
  auto dead = s;
  CHECK_THROWS_AS(apply_jump(b, p, dead, JumpChannel::kCavity), DeadState);

  // Dephasing leaves populations alone.
  auto z = s;
  apply_jump(b, p, z, JumpChannel::kDephasing);
  CHECK(z.quanta == 1);
  CHECK(observables(b, z).sz == doctest::Approx(-1.0 / 3.0));

  for (int i = 0; i < 200; ++i) effective_step_mc(b, p, s, 0.01);
  const auto before = observables(b, s);
  CHECK(before.photons > 0.0);
  apply_jump(b, p, s, JumpChannel::kCavity);
  CHECK(s.quanta == 0);
  CHECK(observables(b, s).sz == doctest::Approx(-1.0));
  CHECK(s.jumps[0] == 1);
  CHECK(s.jumps[3] == 1);
  CHECK(s.quanta == s.initial_quanta + s.jumps[0] - s.jumps[1] - s.jumps[3]);
}

TEST_CASE("jump selection") {
  const std::array<double, 4> w = {1.0, 0.0, 2.0, 1.0};
  CHECK(sample_jump(w, 0.0) == JumpChannel::kRepump);
  CHECK(sample_jump(w, 0.2) == JumpChannel::kRepump);
  CHECK(sample_jump(w, 0.3) == JumpChannel::kDephasing);
  CHECK(sample_jump(w, 0.74) == JumpChannel::kDephasing);
  CHECK(sample_jump(w, 0.76) == JumpChannel::kCavity);
  CHECK(sample_jump(w, 0.999999) == JumpChannel::kCavity);
  CHECK_THROWS_AS(sample_jump({0.0, 0.0, 0.0, 0.0}, 0.5), DeadState);
  CHECK(to_string(JumpChannel::kSpontaneous) == "spontaneous");
}

TEST_CASE("effective evolution never increases the trace") {
  const auto p = test_params(4);
  const Basis b(4);
  auto s = ground_state_mc(b);
  apply_jump(b, p, s, JumpChannel::kRepump);
  apply_jump(b, p, s, JumpChannel::kRepump);
  double prev = trace(b, s);
  for (int i = 0; i < 300; ++i) {
    effective_step_mc(b, p, s, 0.01);
    const double now = trace(b, s);
    CHECK(now <= prev * (1.0 + 1e-12));
    prev = now;
  }
  CHECK(prev < 1.0);
}

TEST_CASE("unraveling reproduces the deterministic solution") {
  auto p = test_params(2);
  const Basis b(2);
  const double t_end = 2.0;
  DetState det = ground_state_det(b, 10);
  evolve_det(b, p, det, t_end, 0.0);
  const auto exact = observables(b, det);

  MCOptions o;
  o.n_traj = 8000;
  o.t_end = t_end;
  o.sample_every = t_end;
  o.seed = 21;
  o.threads = 2;
  const auto mc = run_mc(b, p, o);
  REQUIRE(mc.times.size() == 2);
  CHECK(mc.times.back() == doctest::Approx(t_end));
  const auto& r = mc.series.back();
  CHECK(std::abs(r.sz - exact.sz) < 4.0 * r.sz_err);
  CHECK(std::abs(r.photons - exact.photons) < 4.0 * r.photons_err);
  CHECK(std::abs(r.photons2 - exact.photons2) < 4.0 * r.photons2_err + 1e-12);
  CHECK(std::abs(r.spin_corr.real() - exact.spin_corr.real()) < 4.0 * r.spin_corr_err);
  CHECK(mc.jumps[0] > 0);
  CHECK(mc.jumps[2] > 0);
}

TEST_CASE("unraveling is reproducible and thread independent") {
  auto p = test_params(3);
  const Basis b(3);
  MCOptions o;
  o.n_traj = 40;
  o.t_end = 1.0;
  o.sample_every = 0.25;
  o.average_from = 0.5;
  o.seed = 5;
  o.threads = 1;
  const auto a = run_mc(b, p, o);
  o.threads = 3;
  const auto c = run_mc(b, p, o);
  REQUIRE(a.series.size() == c.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    CHECK(a.series[i].sz == c.series[i].sz);
    CHECK(a.series[i].photons == c.series[i].photons);
  }
  REQUIRE(a.time_averaged.has_value());
  CHECK(a.time_averaged->sz == c.time_averaged->sz);
  CHECK(a.jumps == c.jumps);
}
