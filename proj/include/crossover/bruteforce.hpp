#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "crossover/estimators.hpp"
#include "crossover/params.hpp"
#include "crossover/su4_exact.hpp"
#include "crossover/types.hpp"

namespace crossover::bruteforce {

/// Density matrix on (2^N atoms) x (cutoff photons). Row index is
/// atom_bits * cutoff + m, with bit j set when atom j is excited.
struct DenseState {
  int n_atoms = 1;
  int cutoff = 2;
  Eigen::MatrixXcd rho;
  double t = 0.0;

  Eigen::Index index(unsigned bits, int m) const { return static_cast<Eigen::Index>(bits) * cutoff + m; }
};

/// Master equation on the unsymmetrized space, applied matrix-free from the
/// Hamiltonian and jump operators, rotating frame at the cavity frequency.
class Generator {
 public:
  /// Throws CapacityError when 2^N * cutoff exceeds `capacity`.
  Generator(const SystemParams& p, int cutoff, int capacity = 256);

  int n_atoms() const { return n_atoms_; }
  int cutoff() const { return cutoff_; }
  Eigen::Index dim() const { return dim_; }

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;

  const Eigen::MatrixXcd& annihilation() const { return a_; }
  const Eigen::MatrixXcd& sigma_minus(int atom) const { return sm_[static_cast<std::size_t>(atom)]; }

 private:
  int n_atoms_;
  int cutoff_;
  Eigen::Index dim_;
  Eigen::MatrixXcd a_;
  std::vector<Eigen::MatrixXcd> sm_;
  using Sparse = Eigen::SparseMatrix<Complex>;
  Sparse h_eff_;  // H - (i/2) sum L^dag L
  Sparse h_eff_adj_;
  std::vector<Sparse> jumps_;
  std::vector<Sparse> jumps_adj_;
};

Generator build_generator(const SystemParams& p, int cutoff, int capacity = 256);

/// All atoms ground, field in |n_photons>.
DenseState ground_state(int n_atoms, int cutoff, int n_photons = 0);

/// Fixed-step RK4; `on_sample` sees the state at the start and every
/// `sample_every` time units.
void evolve(const Generator& g, DenseState& s, double t_end, double dt, double sample_every = 0.0,
            const std::function<void(const DenseState&)>& on_sample = {});

/// Long-time integration until all standard observables move less than
/// `tolerance` per unit time.
DenseState steady_state(const Generator& g, double dt, double tolerance = 1e-9, double horizon = 1e5);

/// <sigma^z> (atom average), <sigma_1^+ sigma_2^-> (atoms 0 and 1, N >= 2),
/// photon moments and g2.
ObservableRecord observables(const Generator& g, const DenseState& s);

/// C(tau) = Tr[a^dag e^{L tau}(a rho)] on tau = 0, tau_step, ..., tau_max.
estimators::CorrelationSeries two_time_correlation(const Generator& g, const DenseState& rho, double tau_max,
                                                   double tau_step, double dt);

double min_eigenvalue(const DenseState& s);

/// Dense matrix represented by a symmetric-space state.
DenseState expand_symmetric(const su4::Basis& basis, const su4::DetState& s);

}  // namespace crossover::bruteforce
