#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossover/estimators.hpp"
#include "crossover/params.hpp"
#include "crossover/su4_basis.hpp"
#include "crossover/types.hpp"

namespace crossover::su4 {

// ---------------------------------------------------------------------------
// Deterministic solver: symmetric atoms times an explicit photon basis
// |m><n|, m, n < cutoff. Rotating frame at the cavity frequency.

struct DetState {
  int cutoff = 0;
  Eigen::VectorXcd coeff;  // index (k * cutoff + m) * cutoff + n
  double t = 0.0;

  std::size_t offset(std::size_t k, int m, int n) const {
    return (k * static_cast<std::size_t>(cutoff) + static_cast<std::size_t>(m)) * static_cast<std::size_t>(cutoff) +
           static_cast<std::size_t>(n);
  }
  Complex& at(std::size_t k, int m, int n) { return coeff[static_cast<Eigen::Index>(offset(k, m, n))]; }
  Complex at(std::size_t k, int m, int n) const { return coeff[static_cast<Eigen::Index>(offset(k, m, n))]; }
};

/// All atoms ground, field in |n_photons>.
DetState ground_state_det(const Basis& basis, int cutoff, int n_photons = 0);

/// Cutoff rule: mean-field photons + 6 sqrt(photons) + 10.
int default_cutoff(const SystemParams& p);

/// Time derivative of the full master equation.
void apply_liouvillian_det(const Basis& basis, const SystemParams& p, const DetState& in, DetState& out);
DetState apply_liouvillian_det(const Basis& basis, const SystemParams& p, const DetState& in);

Complex trace(const Basis& basis, const DetState& s);

/// Population of the top Fock level relative to the trace.
double cutoff_population(const Basis& basis, const DetState& s);

/// <sigma^z>, <sigma_1^+ sigma_2^->, photon moments and g2; errors zero.
ObservableRecord observables(const Basis& basis, const DetState& s);

/// Step for the classical RK4 integrator: 1 / (spectral radius estimate), at most 0.1.
double auto_step_det(const Basis& basis, const SystemParams& p, int cutoff);

/// Fixed-step integration to t_end. The callback, if given, sees the state
/// every `sample_every` time units (and at the start). Throws CutoffOverflow.
void evolve_det(const Basis& basis, const SystemParams& p, DetState& s, double t_end, double dt,
                double sample_every = 0.0, const std::function<void(const DetState&)>& on_sample = {});

struct SteadyOptions {
  int cutoff = 0;          // 0: default_cutoff
  double dt = 0.0;         // 0: auto_step_det
  double tolerance = 1e-8;  // per unit time, all standard observables
  double horizon = 1e5;
  double check_every = 1.0;
};

struct SteadyStateDet {
  DetState state;
  ObservableRecord obs;
};

/// Long-time integration from the all-ground vacuum. Throws NotConverged.
SteadyStateDet steady_state_det(const Basis& basis, const SystemParams& p, const SteadyOptions& opts = {});

struct RegressionResult {
  estimators::CorrelationSeries series;  // C(tau) = Tr[a^dag e^{L tau}(a rho_ss)]
  estimators::LinewidthFit fit;
};

/// Linewidth from the quantum regression theorem on the deterministic solver.
RegressionResult linewidth_regression(const Basis& basis, const SystemParams& p, const DetState& steady,
                                      double tau_max, double tau_step, double dt = 0.0);

// ---------------------------------------------------------------------------
// Quantum-jump unraveling with the photon number eliminated through the total
// number of quanta N_q: the ket photon index is N_q - (ee + eg) and the bra
// index N_q - (ee + ge).

enum class JumpChannel : int { kRepump = 0, kSpontaneous = 1, kDephasing = 2, kCavity = 3 };

std::string_view to_string(JumpChannel c);

struct MCState {
  int quanta = 0;
  Eigen::VectorXcd coeff;  // over the basis
  std::array<long, 4> jumps{};
  int initial_quanta = 0;
};

/// Atoms in the ground state, field in the Fock state |n_photons>.
MCState ground_state_mc(const Basis& basis, int n_photons = 0);

/// Effective (no-jump) generator; trace is nonincreasing under it.
void effective_rhs_mc(const Basis& basis, const SystemParams& p, int quanta, const Eigen::VectorXcd& in,
                      Eigen::VectorXcd& out);

/// One integrating-factor RK4 step of the effective evolution.
void effective_step_mc(const Basis& basis, const SystemParams& p, MCState& s, double dt);

double trace(const Basis& basis, const MCState& s);

/// Tr[J_i rho] for the four channels.
std::array<double, 4> jump_weights(const Basis& basis, const SystemParams& p, const MCState& s);

/// Channel drawn with probability proportional to its weight; `u` in [0, 1).
/// Throws DeadState when all weights vanish.
JumpChannel sample_jump(const std::array<double, 4>& weights, double u);

/// Applies the channel, renormalizes to unit trace and updates N_q.
void apply_jump(const Basis& basis, const SystemParams& p, MCState& s, JumpChannel c);

ObservableRecord observables(const Basis& basis, const MCState& s);

double auto_step_mc(const Basis& basis, const SystemParams& p, int max_quanta);

struct MCOptions {
  std::size_t n_traj = 100;
  double t_end = 0.0;
  double sample_every = 0.0;  // 0: t_end / 100
  double dt = 0.0;            // 0: auto_step_mc
  std::optional<double> average_from;  // time-average each trajectory from here on
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<MCState> initial;  // default all ground, no photons
};

struct MCResult {
  std::vector<double> times;
  std::vector<ObservableRecord> series;  // trajectory averages with standard errors
  std::optional<ObservableRecord> time_averaged;
  std::array<long, 4> jumps{};  // summed over trajectories
  double dt = 0.0;
};

/// Throws TrajectoryDiverged (carrying the trajectory index) on per-trajectory failures.
MCResult run_mc(const Basis& basis, const SystemParams& p, const MCOptions& opts);

}  // namespace crossover::su4
