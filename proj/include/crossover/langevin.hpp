#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crossover/params.hpp"
#include "crossover/types.hpp"

namespace crossover::langevin {

/// One c-number trajectory: field quadratures and collective spin per atom,
/// a = q - i p, S^- = Sx - i Sy.
using PhaseSpacePoint = Vector5d;

enum Component : int { kQ = 0, kP = 1, kSx = 2, kSy = 3, kSz = 4 };

/// Stores the classical diffusion coefficients D (noise correlation 2D).
using DiffusionMatrix = Matrix5d;

/// Deterministic rates in the frame rotating at omega_c.
Vector5d drift(const PhaseSpacePoint& x, const SystemParams& p);

/// Symmetric-ordering diffusion evaluated at the ensemble means.
DiffusionMatrix diffusion(const Vector5d& means, const SystemParams& p);

/// Symmetric square root B with B B^T = 2 D dt. Eigenvalues in
/// [-1e-10 tr, 0) are clamped; anything more negative throws
/// NonPositiveDiffusion.
Matrix5d noise_factor(const DiffusionMatrix& d, double dt);

/// Step-synchronized collection of trajectories. Random draws are keyed by
/// (seed, trajectory index, step_index).
struct Ensemble {
  std::vector<PhaseSpacePoint> points;
  double t = 0.0;
  std::uint64_t step_index = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
  /// Fixed-order reduction; independent of the worker count.
  Vector5d means() const;
};

/// Vacuum field (Var q = Var p = 1/4) and all atoms in the ground state with
/// transverse spins drawn from sigma_x, sigma_y in {+-1}.
Ensemble sample_initial(const SystemParams& p, std::size_t n_traj, std::uint64_t seed);

/// Largest step allowed for the current ensemble state.
double max_step(const Ensemble& e, const SystemParams& p);

struct StepOptions {
  bool zero_diffusion = false;  // testing hook: noise-free ensemble
  int threads = 1;
};

/// One weak order-2 step (additive-noise explicit scheme) for every trajectory
/// with one shared diffusion factor.
void step(Ensemble& e, const SystemParams& p, double dt, const StepOptions& opts = {});

struct RunOptions {
  std::size_t n_traj = 1000;
  double dt = 0.0;             // 0: chosen from the predicted field amplitude
  double t_relax = 0.0;        // 0: automatic
  double t_collect = 0.0;      // 0: automatic
  double sample_stride = 0.0;  // 0: automatic
  std::size_t max_samples = 4096;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct RunMetadata {
  double dt = 0.0;
  double t_relax = 0.0;
  double t_collect = 0.0;
  double sample_stride = 0.0;
  std::uint64_t seed = 0;
  bool low_trajectory_count = false;  // fewer than 100 trajectories
  std::string initial_condition;
};

/// Archived steady-state samples, trajectory-major.
struct TrajectoryArchive {
  int n_atoms = 1;
  std::size_t n_traj = 0;
  std::vector<double> times;
  std::vector<PhaseSpacePoint> samples;
  RunMetadata meta;

  std::size_t n_times() const { return times.size(); }
  const PhaseSpacePoint& at(std::size_t traj, std::size_t k) const {
    return samples[traj * times.size() + k];
  }
};

/// Fills in automatic numeric choices for the given parameters.
RunOptions resolve_options(const SystemParams& p, RunOptions opts);

/// Relax, then archive samples over [t_relax, t_relax + t_collect).
/// Throws NonPositiveDiffusion below the first threshold (w < gamma).
TrajectoryArchive run(const SystemParams& p, const RunOptions& opts);

/// Delimited text: metadata comment lines, then `t,trajectory,q,p,sx,sy,sz`.
void write_archive(std::ostream& os, const TrajectoryArchive& archive);
TrajectoryArchive read_archive(std::istream& is);

}  // namespace crossover::langevin
