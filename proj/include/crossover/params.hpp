#pragma once

#include <string_view>

namespace crossover {

/// Physical parameters of one run. All rates are in units of the atomic
/// decay rate gamma, frequencies are relative to a common reference.
struct SystemParams {
  int n_atoms = 1;
  double coupling = 1.0;  // Omega
  double kappa = 1.0;
  double gamma = 1.0;
  double repump = 0.0;    // w
  double t2_inv = 0.0;    // 1/T2
  double omega_a = 0.0;
  double omega_c = 0.0;

  double detuning() const { return omega_a - omega_c; }
};

/// Throws InvalidParams when any invariant is violated.
void validate(const SystemParams& p);

struct DerivedParams {
  double Gamma = 0.0;          // w + gamma + 2/T2
  double d0 = 0.0;             // (w - gamma)/(w + gamma)
  double cooperativity = 0.0;  // N Omega^2 / (kappa Gamma)
  double xi = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  double w_opt = 0.0;
  double photons_opt = 0.0;
  double line_center = 0.0;
  bool w_opt_negative = false;
};

DerivedParams derive(const SystemParams& p);

double total_decoherence(const SystemParams& p);
double bare_inversion(const SystemParams& p);
double cooperativity(const SystemParams& p);

/// xi = N Omega^2 / (8 kappa^2): optimum photon number per atom.
double crossover_xi(const SystemParams& p);

enum class Regime { superradiant, crossover, lasing };

/// superradiant below 0.5, lasing above 2, crossover in between (inclusive).
Regime regime_label(double xi);
std::string_view to_string(Regime r);

}  // namespace crossover
