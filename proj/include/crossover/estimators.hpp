#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "crossover/langevin.hpp"
#include "crossover/types.hpp"

namespace crossover::estimators {

struct FieldMoments {
  double photons = 0.0;
  double photons_err = 0.0;
  double photons2 = 0.0;  // <a^dag a^dag a a>
  double photons2_err = 0.0;
  double g2 = 0.0;
  double g2_err = 0.0;
};

/// Symmetric-ordering corrected field moments with trajectory jackknife errors.
/// Throws BelowNoiseFloor when the photon number is negative by more than
/// three standard errors.
FieldMoments field_moments(const langevin::TrajectoryArchive& archive);

struct SpinMoments {
  double sz = 0.0;
  double sz_err = 0.0;
  Complex spin_corr;
  double spin_corr_err = 0.0;
};

/// <sigma^z> and the pair correlation <sigma_1^+ sigma_2^->. Needs N >= 2.
SpinMoments spin_moments(const langevin::TrajectoryArchive& archive, int n_atoms);

/// Both of the above in one record; linewidth left empty.
ObservableRecord observables(const langevin::TrajectoryArchive& archive);

struct CorrelationSeries {
  std::vector<double> tau;
  std::vector<Complex> value;
  std::vector<double> stderr_abs;  // standard error of |C(tau)|
};

/// C(tau) = E[a*(t+tau) a(t)], averaged over time origins and trajectories,
/// with bootstrap errors over trajectories.
CorrelationSeries g1_correlation(const langevin::TrajectoryArchive& archive, double tau_max,
                                 std::size_t n_bootstrap = 200, std::uint64_t seed = 7);

struct LinewidthFit {
  double linewidth = 0.0;  // Lorentzian FWHM, angular units
  double linewidth_err = 0.0;
  double rms_residual = 0.0;  // relative residual of |C| over the fit window
  std::size_t n_points = 0;
  bool fit_quality_warning = false;
};

/// Weighted least squares on log|C| over the window where |C| falls from
/// 0.8 to 0.2 of |C(0)|; the linewidth is twice the fitted decay rate.
/// Throws WindowTooShort if the series never decays through the window.
LinewidthFit fit_linewidth(const CorrelationSeries& c);

struct TrendTest {
  double slope = 0.0;
  double slope_err = 0.0;
  bool significant() const { return std::abs(slope) >= 2.0 * slope_err; }
};

/// Linear trend of the per-time ensemble mean of q^2 + p^2 (or Sz for
/// component kSz) over the archive, with errors from trajectory scatter.
TrendTest trend(const langevin::TrajectoryArchive& archive, bool use_sz = false);

}  // namespace crossover::estimators
