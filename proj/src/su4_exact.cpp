#include "crossover/su4_exact.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crossover/errors.hpp"
#include "crossover/integrators.hpp"
#include "crossover/meanfield.hpp"

namespace crossover::su4 {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_cutoff(const Basis& basis, int cutoff) {
  if (cutoff < 2) throw InvalidParams("photon cutoff must be at least 2");
  const double elements = static_cast<double>(basis.size()) * cutoff * cutoff;
  if (elements > 5e7) {
    std::ostringstream os;
    os << "deterministic state with " << elements << " coefficients exceeds the memory limit";
    throw CapacityError(os.str());
  }
}

Eigen::VectorXcd diagonal_det(const Basis& basis, const SystemParams& p, int cutoff) {
  const double delta = p.detuning();
  Eigen::VectorXcd d(static_cast<Eigen::Index>(basis.size()) * cutoff * cutoff);
  Eigen::Index i = 0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    const double atomic = -0.5 * p.gamma * (2 * c.ee + c.eg + c.ge) - 0.5 * p.repump * (2 * c.gg + c.eg + c.ge) -
                          p.t2_inv * (c.eg + c.ge);
    const Complex precession = -kI * delta * static_cast<double>(c.eg - c.ge);
    for (int m = 0; m < cutoff; ++m)
      for (int n = 0; n < cutoff; ++n) d[i++] = precession + atomic - 0.5 * p.kappa * (m + n);
  }
  return d;
}

// Everything except the diagonal: cavity sandwich, population transfer and
// the coherent atom-field exchange, written as a pull over target elements.
void offdiagonal_det(const Basis& basis, const SystemParams& p, int cutoff, const Eigen::VectorXcd& in,
                     Eigen::VectorXcd& out) {
  const auto mm = static_cast<std::size_t>(cutoff);
  const Complex minus_half_i_omega = -0.5 * kI * p.coupling;
  auto c_at = [&](std::ptrdiff_t k, int m, int n) -> Complex {
    return in[static_cast<Eigen::Index>((static_cast<std::size_t>(k) * mm + m) * mm + n)];
  };
  out.resize(in.size());
  const long kmax = static_cast<long>(basis.size());
#pragma omp parallel for schedule(static)
  for (long kl = 0; kl < kmax; ++kl) {
    const auto k = static_cast<std::size_t>(kl);
    const Counts& c = basis[k];
    const std::ptrdiff_t from_e_to_g = basis.move(k, kG, kE);  // source of gamma decay into this element
    const std::ptrdiff_t from_g_to_e = basis.move(k, kE, kG);  // source of repumping
    const std::ptrdiff_t sa1 = basis.move(k, kD, kE), sa2 = basis.move(k, kG, kU);
    const std::ptrdiff_t sb1 = basis.move(k, kU, kG), sb2 = basis.move(k, kE, kD);
    const std::ptrdiff_t sc1 = basis.move(k, kD, kG), sc2 = basis.move(k, kE, kU);
    const std::ptrdiff_t sd1 = basis.move(k, kU, kE), sd2 = basis.move(k, kG, kD);
    for (int m = 0; m < cutoff; ++m) {
      const double sm = std::sqrt(static_cast<double>(m)), sm1 = std::sqrt(m + 1.0);
      for (int n = 0; n < cutoff; ++n) {
        const double sn = std::sqrt(static_cast<double>(n)), sn1 = std::sqrt(n + 1.0);
        Complex acc = 0.0;
        if (m + 1 < cutoff && n + 1 < cutoff) acc += p.kappa * sm1 * sn1 * c_at(static_cast<std::ptrdiff_t>(k), m + 1, n + 1);
        if (from_e_to_g != Basis::npos) acc += p.gamma * c.gg * c_at(from_e_to_g, m, n);
        if (from_g_to_e != Basis::npos) acc += p.repump * c.ee * c_at(from_g_to_e, m, n);

        Complex left = 0.0;  // a^dag sigma^- rho + sigma^+ a rho
        if (m > 0) {
          if (sa1 != Basis::npos) left += c.ge * sm * c_at(sa1, m - 1, n);
          if (sa2 != Basis::npos) left += c.gg * sm * c_at(sa2, m - 1, n);
        }
        if (m + 1 < cutoff) {
          if (sb1 != Basis::npos) left += c.eg * sm1 * c_at(sb1, m + 1, n);
          if (sb2 != Basis::npos) left += c.ee * sm1 * c_at(sb2, m + 1, n);
        }
        Complex right = 0.0;  // rho a^dag sigma^- + rho sigma^+ a
        if (n + 1 < cutoff) {
          if (sc1 != Basis::npos) right += c.ge * sn1 * c_at(sc1, m, n + 1);
          if (sc2 != Basis::npos) right += c.ee * sn1 * c_at(sc2, m, n + 1);
        }
        if (n > 0) {
          if (sd1 != Basis::npos) right += c.eg * sn * c_at(sd1, m, n - 1);
          if (sd2 != Basis::npos) right += c.gg * sn * c_at(sd2, m, n - 1);
        }
        acc += minus_half_i_omega * (left - right);
        out[static_cast<Eigen::Index>((k * mm + m) * mm + n)] = acc;
      }
    }
  }
}

// Classical RK4 on the full generator: trace-conserving, with the stationary
// states as fixed points.
struct DetStepper {
  const Basis& basis;
  const SystemParams& p;
  int cutoff;
  Eigen::VectorXcd diag;
  Rk4Workspace<Eigen::VectorXcd> ws;

  DetStepper(const Basis& b, const SystemParams& params, int m)
      : basis(b), p(params), cutoff(m), diag(diagonal_det(b, params, m)) {}

  void step(Eigen::VectorXcd& y, double dt) {
    rk4_step(y, dt,
             [this](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
               offdiagonal_det(basis, p, cutoff, in, out);
               out += diag.cwiseProduct(in);
             },
             ws);
  }

  // Advance by `span` in steps no longer than dt, landing exactly on the end.
  void advance(Eigen::VectorXcd& y, double span, double dt) {
    const auto n = static_cast<long>(std::ceil(span / dt - 1e-9));
    if (n <= 0) return;
    const double h = span / static_cast<double>(n);
    for (long i = 0; i < n; ++i) step(y, h);
    if (!y.allFinite()) throw NumericalFailure("deterministic symmetric solver produced a non-finite coefficient");
  }
};

double diag_trace_weight(const Basis& basis, std::size_t k) {
  return basis[k].diagonal() ? basis.multiplicity(k) : 0.0;
}

}  // namespace

DetState ground_state_det(const Basis& basis, int cutoff, int n_photons) {
  require_cutoff(basis, cutoff);
  if (n_photons < 0 || n_photons >= cutoff) throw InvalidParams("initial photon number outside the cutoff");
  DetState s;
  s.cutoff = cutoff;
  s.coeff = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()) * cutoff * cutoff);
  const auto k = static_cast<std::size_t>(basis.index({0, basis.n_atoms(), 0, 0}));
  s.at(k, n_photons, n_photons) = 1.0;
  return s;
}

int default_cutoff(const SystemParams& p) {
  const double photons = std::max(0.0, meanfield::steady_state_analytic(p).photons);
  return static_cast<int>(std::ceil(photons + 6.0 * std::sqrt(photons) + 10.0));
}

void apply_liouvillian_det(const Basis& basis, const SystemParams& p, const DetState& in, DetState& out) {
  const Eigen::VectorXcd d = diagonal_det(basis, p, in.cutoff);
  offdiagonal_det(basis, p, in.cutoff, in.coeff, out.coeff);
  out.coeff += d.cwiseProduct(in.coeff);
  out.cutoff = in.cutoff;
  out.t = in.t;
}

DetState apply_liouvillian_det(const Basis& basis, const SystemParams& p, const DetState& in) {
  DetState out;
  apply_liouvillian_det(basis, p, in, out);
  return out;
}

Complex trace(const Basis& basis, const DetState& s) {
  Complex tr = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (!basis[k].diagonal()) continue;
    Complex sum = 0.0;
    for (int m = 0; m < s.cutoff; ++m) sum += s.at(k, m, m);
    tr += basis.multiplicity(k) * sum;
  }
  return tr;
}

double cutoff_population(const Basis& basis, const DetState& s) {
  double top = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) top += diag_trace_weight(basis, k) * s.at(k, s.cutoff - 1, s.cutoff - 1).real();
  return top / trace(basis, s).real();
}

ObservableRecord observables(const Basis& basis, const DetState& s) {
  const double n = basis.n_atoms();
  double tr = 0.0, inversion = 0.0, photons = 0.0, photons2 = 0.0;
  Complex pair = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    const double mult = basis.multiplicity(k);
    if (c.diagonal()) {
      for (int m = 0; m < s.cutoff; ++m) {
        const double v = mult * s.at(k, m, m).real();
        tr += v;
        inversion += (c.ee - c.gg) * v;
        photons += m * v;
        photons2 += m * (m - 1.0) * v;
      }
    } else if (c.eg == 1 && c.ge == 1) {
      for (int m = 0; m < s.cutoff; ++m) pair += mult * s.at(k, m, m);
    }
  }
  if (!(tr > 0.0)) throw InvalidParams("state has nonpositive trace");
  ObservableRecord r;
  r.sz = inversion / (n * tr);
  r.spin_corr = n > 1 ? pair / (n * (n - 1.0) * tr) : Complex(0.0, 0.0);
  r.photons = photons / tr;
  r.photons2 = photons2 / tr;
  r.g2 = r.photons > 0.0 ? r.photons2 / (r.photons * r.photons) : std::nan("");
  return r;
}

double auto_step_det(const Basis& basis, const SystemParams& p, int cutoff) {
  const auto dim = static_cast<Eigen::Index>(basis.size()) * cutoff * cutoff;
  const Eigen::VectorXcd diag = diagonal_det(basis, p, cutoff);
  const double rho = growth_bound(dim, [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    offdiagonal_det(basis, p, cutoff, in, out);
    out += diag.cwiseProduct(in);
  });
  return std::min(1.0 / std::max(rho, 1e-12), 0.1);
}

void evolve_det(const Basis& basis, const SystemParams& p, DetState& s, double t_end, double dt,
                double sample_every, const std::function<void(const DetState&)>& on_sample) {
  validate(p);
  if (!(dt > 0.0)) dt = auto_step_det(basis, p, s.cutoff);
  DetStepper stepper(basis, p, s.cutoff);
  auto check_cutoff = [&] {
    const double top = cutoff_population(basis, s);
    if (top > 1e-8) {
      std::ostringstream os;
      os << "population " << top << " at the photon cutoff " << s.cutoff << " (t=" << s.t << ")";
      throw CutoffOverflow(os.str());
    }
  };
  if (on_sample) on_sample(s);
  const double chunk = sample_every > 0.0 ? sample_every : std::max(t_end - s.t, 0.0);
  while (s.t < t_end - 1e-12) {
    const double span = std::min(chunk, t_end - s.t);
    stepper.advance(s.coeff, span, dt);
    s.t += span;
    check_cutoff();
    if (on_sample && sample_every > 0.0) on_sample(s);
  }
}

SteadyStateDet steady_state_det(const Basis& basis, const SystemParams& p, const SteadyOptions& opts) {
  validate(p);
  const int cutoff = opts.cutoff > 0 ? opts.cutoff : default_cutoff(p);
  const double dt = opts.dt > 0.0 ? opts.dt : auto_step_det(basis, p, cutoff);
  SteadyStateDet out{ground_state_det(basis, cutoff), {}};
  DetStepper stepper(basis, p, cutoff);
  ObservableRecord prev = observables(basis, out.state);
  while (out.state.t < opts.horizon) {
    stepper.advance(out.state.coeff, opts.check_every, dt);
    out.state.t += opts.check_every;
    const double top = cutoff_population(basis, out.state);
    if (top > 1e-8) {
      std::ostringstream os;
      os << "population " << top << " at the photon cutoff " << cutoff;
      throw CutoffOverflow(os.str());
    }
    const ObservableRecord now = observables(basis, out.state);
    const double change = std::max({std::abs(now.sz - prev.sz), std::abs(now.spin_corr - prev.spin_corr),
                                    std::abs(now.photons - prev.photons), std::abs(now.photons2 - prev.photons2)});
    prev = now;
    if (change < opts.tolerance * opts.check_every) {
      out.obs = now;
      return out;
    }
  }
  throw NotConverged("deterministic steady state not reached within the horizon");
}

RegressionResult linewidth_regression(const Basis& basis, const SystemParams& p, const DetState& steady,
                                      double tau_max, double tau_step, double dt) {
  if (!(tau_max > 0.0) || !(tau_step > 0.0) || tau_step > tau_max) throw InvalidParams("bad regression delay grid");
  const int mm = steady.cutoff;
  if (!(dt > 0.0)) dt = auto_step_det(basis, p, mm);

  // X = a rho: X(k, m, n) = sqrt(m + 1) rho(k, m + 1, n).
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(steady.coeff.size());
  DetState view;
  view.cutoff = mm;
  for (std::size_t k = 0; k < basis.size(); ++k)
    for (int m = 0; m + 1 < mm; ++m)
      for (int n = 0; n < mm; ++n)
        x[static_cast<Eigen::Index>(view.offset(k, m, n))] = std::sqrt(m + 1.0) * steady.at(k, m + 1, n);

  // Tr[a^dag X] = sum_m sqrt(m + 1) X(m, m + 1) over trace-bearing atomic elements.
  auto correlate = [&](const Eigen::VectorXcd& v) {
    Complex sum = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      if (!basis[k].diagonal()) continue;
      Complex inner = 0.0;
      for (int m = 0; m + 1 < mm; ++m) inner += std::sqrt(m + 1.0) * v[static_cast<Eigen::Index>(view.offset(k, m, m + 1))];
      sum += basis.multiplicity(k) * inner;
    }
    return sum;
  };

  RegressionResult r;
  DetStepper stepper(basis, p, mm);
  const auto n_lags = static_cast<std::size_t>(std::floor(tau_max / tau_step + 1e-9)) + 1;
  r.series.tau.resize(n_lags);
  r.series.value.resize(n_lags);
  r.series.stderr_abs.assign(n_lags, 0.0);
  for (std::size_t j = 0; j < n_lags; ++j) {
    if (j > 0) stepper.advance(x, tau_step, dt);
    r.series.tau[j] = tau_step * static_cast<double>(j);
    r.series.value[j] = correlate(x);
  }
  r.fit = estimators::fit_linewidth(r.series);
  return r;
}

}  // namespace crossover::su4
