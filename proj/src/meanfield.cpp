#include "crossover/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crossover/errors.hpp"
#include "crossover/integrators.hpp"

namespace crossover::meanfield {

namespace {

constexpr Complex kI{0.0, 1.0};

using Packed = Eigen::Matrix<double, 5, 1>;

Packed pack(const MeanFieldState& s) {
  Packed v;
  v << s.a0.real(), s.a0.imag(), s.s_minus.real(), s.s_minus.imag(), s.s_z;
  return v;
}

MeanFieldState unpack(const Packed& v) {
  return {Complex(v[0], v[1]), Complex(v[2], v[3]), v[4]};
}

}  // namespace

MeanFieldState rhs(const MeanFieldState& s, const SystemParams& p) {
  const double n = p.n_atoms;
  const double omega = p.coupling;
  const double big_gamma = total_decoherence(p);
  const double d0 = bare_inversion(p);
  const double delta = p.detuning();

  MeanFieldState d;
  d.a0 = -0.5 * p.kappa * s.a0 - kI * (0.5 * n * omega) * s.s_minus;
  d.s_minus = -(0.5 * big_gamma + kI * delta) * s.s_minus + kI * (0.5 * omega) * s.a0 * s.s_z;
  d.s_z = -(p.repump + p.gamma) * (s.s_z - d0) - 2.0 * omega * std::imag(std::conj(s.a0) * s.s_minus);
  return d;
}

double max_step(const SystemParams& p) {
  const double rate = std::max({p.kappa, total_decoherence(p), 0.5 * p.n_atoms * p.coupling,
                                std::abs(p.detuning())});
  return 0.1 / rate;
}

std::vector<MeanFieldSample> integrate(const SystemParams& p, const MeanFieldState& init, double t_end,
                                       double dt, int sample_every) {
  validate(p);
  if (!(t_end > 0.0)) throw InvalidParams("t_end must be positive");
  if (!(dt > 0.0) || dt > max_step(p) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "mean-field step " << dt << " exceeds limit " << max_step(p);
    throw StepSizeViolation(os.str());
  }
  sample_every = std::max(sample_every, 1);

  const auto n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  const double h = t_end / static_cast<double>(n_steps);
  auto f = [&p](const Packed& y) { return pack(rhs(unpack(y), p)); };

  std::vector<MeanFieldSample> out;
  out.reserve(static_cast<std::size_t>(n_steps / sample_every + 2));
  Packed y = pack(init);
  out.push_back({0.0, init});
  for (long i = 1; i <= n_steps; ++i) {
    rk4_step(y, h, f);
    if (!y.allFinite()) {
      std::ostringstream os;
      os << "mean-field integration produced non-finite state at t=" << i * h;
      throw NumericalFailure(os.str());
    }
    if (i % sample_every == 0 || i == n_steps) out.push_back({i * h, unpack(y)});
  }
  return out;
}

SteadyStateSolution steady_state_analytic(const SystemParams& p) {
  const DerivedParams d = derive(p);
  const double n_omega2 = p.n_atoms * p.coupling * p.coupling;

  SteadyStateSolution s;
  s.omega = d.line_center;
  const Complex sz = (p.kappa + 2.0 * kI * (p.omega_c - s.omega)) *
                     (d.Gamma + 2.0 * kI * (p.omega_a - s.omega)) / n_omega2;
  s.s_z = sz.real();
  const double margin = d.d0 - 1.0 / d.cooperativity;
  s.photons = p.n_atoms * (p.repump + p.gamma) / (2.0 * p.kappa) * margin;
  s.above_threshold = margin > 0.0;
  return s;
}

Sensitivity sensitivity(const SystemParams& p) {
  const double big_gamma = total_decoherence(p);
  const double sum = p.kappa + big_gamma;
  if (!(sum > 0.0)) throw InvalidParams("kappa + Gamma must be positive");
  return {big_gamma / sum, p.kappa / sum};
}

std::vector<PhotonCurvePoint> photon_curve(const SystemParams& p, std::span<const double> w_grid) {
  if (!std::is_sorted(w_grid.begin(), w_grid.end()))
    throw InvalidParams("repump grid must be ascending");
  std::vector<PhotonCurvePoint> out;
  out.reserve(w_grid.size());
  SystemParams q = p;
  for (double w : w_grid) {
    if (!std::isfinite(w)) throw InvalidParams("repump grid must be finite");
    q.repump = w;
    out.push_back({w, steady_state_analytic(q)});
  }
  return out;
}

}  // namespace crossover::meanfield
