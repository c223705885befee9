#pragma once

#include <span>
#include <vector>

#include "crossover/params.hpp"

namespace crossover::phase_diffusion {

/// Closed-form phase-diffusion linewidth (Lorentzian FWHM, angular units).
struct PhaseDiffusionResult {
  double linewidth = 0.0;
  bool valid = false;
  // Caveat marker: repump outside [w_opt/2, 3 w_opt/2], where amplitude
  // fluctuations are no longer negligible. Informational, not a validity cut.
  bool off_optimum = false;
};

/// Valid only above threshold (C d0 > 1).
PhaseDiffusionResult linewidth(const SystemParams& p);

struct LinewidthPoint {
  double repump = 0.0;
  PhaseDiffusionResult result;
};

std::vector<LinewidthPoint> linewidth_curve(const SystemParams& p, std::span<const double> w_grid);

}  // namespace crossover::phase_diffusion
