#include "crossover/params.hpp"

#include <cmath>
#include <string>

#include "crossover/errors.hpp"

namespace crossover {

void validate(const SystemParams& p) {
  auto fail = [](const std::string& what) { throw InvalidParams("invalid parameters: " + what); };
  if (p.n_atoms < 1) fail("n_atoms must be >= 1");
  if (!(p.coupling > 0.0) || !std::isfinite(p.coupling)) fail("coupling must be > 0");
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) fail("kappa must be > 0");
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) fail("gamma must be > 0");
  if (!(p.repump >= 0.0) || !std::isfinite(p.repump)) fail("repump must be >= 0");
  if (!(p.t2_inv >= 0.0) || !std::isfinite(p.t2_inv)) fail("t2_inv must be >= 0");
  if (!std::isfinite(p.omega_a) || !std::isfinite(p.omega_c) || !std::isfinite(p.detuning()))
    fail("frequencies must be finite");
}

double total_decoherence(const SystemParams& p) { return p.repump + p.gamma + 2.0 * p.t2_inv; }

double bare_inversion(const SystemParams& p) {
  return (p.repump - p.gamma) / (p.repump + p.gamma);
}

double cooperativity(const SystemParams& p) {
  return p.n_atoms * p.coupling * p.coupling / (p.kappa * total_decoherence(p));
}

double crossover_xi(const SystemParams& p) {
  return p.n_atoms * p.coupling * p.coupling / (8.0 * p.kappa * p.kappa);
}

DerivedParams derive(const SystemParams& p) {
  validate(p);
  const double n = p.n_atoms;
  const double omega2 = p.coupling * p.coupling;

  DerivedParams d;
  d.Gamma = total_decoherence(p);
  d.d0 = bare_inversion(p);
  d.cooperativity = cooperativity(p);
  d.xi = crossover_xi(p);
  d.w1 = p.gamma;
  d.w2 = n * omega2 / p.kappa;
  d.w_opt = n * omega2 / (2.0 * p.kappa) - p.gamma - p.t2_inv;
  // photons_opt / N reproduces xi bit-for-bit only if both share one expression.
  d.photons_opt = n * d.xi;
  d.line_center = (p.kappa * p.omega_a + d.Gamma * p.omega_c) / (p.kappa + d.Gamma);
  d.w_opt_negative = d.w_opt < 0.0;
  return d;
}

Regime regime_label(double xi) {
  if (!(xi > 0.0)) throw InvalidParams("crossover parameter must be positive");
  if (xi < 0.5) return Regime::superradiant;
  if (xi <= 2.0) return Regime::crossover;
  return Regime::lasing;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::superradiant: return "superradiant";
    case Regime::crossover: return "crossover";
    case Regime::lasing: return "lasing";
  }
  return "unknown";
}

}  // namespace crossover
