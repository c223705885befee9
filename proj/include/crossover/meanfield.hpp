#pragma once

#include <span>
#include <vector>

#include "crossover/params.hpp"
#include "crossover/types.hpp"

namespace crossover::meanfield {

/// Mean values in the frame rotating at the cavity frequency.
struct MeanFieldState {
  Complex a0{};       // field amplitude, |a0|^2 = photon number
  Complex s_minus{};  // collective coherence per atom
  double s_z = -1.0;  // inversion per atom
};

struct MeanFieldSample {
  double t = 0.0;
  MeanFieldState state;
};

/// Right-hand side of the noise-free equations (rotating at omega_c).
MeanFieldState rhs(const MeanFieldState& s, const SystemParams& p);

/// Largest step accepted by integrate(): 0.1 / max(kappa, Gamma, N Omega/2, |delta|).
double max_step(const SystemParams& p);

/// Fixed-step RK4 integration. Returns samples every `sample_every` steps,
/// always including t = 0 and the final time.
std::vector<MeanFieldSample> integrate(const SystemParams& p, const MeanFieldState& init, double t_end,
                                       double dt, int sample_every = 1);

struct SteadyStateSolution {
  double s_z = 0.0;
  double omega = 0.0;
  double photons = 0.0;  // small-detuning form; negative below threshold
  bool above_threshold = false;
};

SteadyStateSolution steady_state_analytic(const SystemParams& p);

/// Pulling coefficients of the emission line center.
struct Sensitivity {
  double d_omega_c = 0.0;  // d omega / d omega_c = Gamma/(kappa+Gamma)
  double d_omega_a = 0.0;  // d omega / d omega_a = kappa/(kappa+Gamma)
};

Sensitivity sensitivity(const SystemParams& p);

struct PhotonCurvePoint {
  double repump = 0.0;
  SteadyStateSolution solution;
};

std::vector<PhotonCurvePoint> photon_curve(const SystemParams& p, std::span<const double> w_grid);

}  // namespace crossover::meanfield
