#include "crossover/phase_diffusion.hpp"

#include <algorithm>

#include "crossover/errors.hpp"

namespace crossover::phase_diffusion {

PhaseDiffusionResult linewidth(const SystemParams& p) {
  const DerivedParams d = derive(p);
  PhaseDiffusionResult r;
  const double c = d.cooperativity;
  const double margin = c * d.d0 - 1.0;
  if (!(margin > 0.0)) return r;

  const double kg = p.kappa + d.Gamma;
  r.linewidth = (c + 1.0) / (2.0 * margin) * d.Gamma / (p.repump + p.gamma) *
                p.coupling * p.coupling * p.kappa / (kg * kg);
  r.valid = r.linewidth > 0.0;
  r.off_optimum = d.w_opt <= 0.0 || p.repump < 0.5 * d.w_opt || p.repump > 1.5 * d.w_opt;
  return r;
}

std::vector<LinewidthPoint> linewidth_curve(const SystemParams& p, std::span<const double> w_grid) {
  if (!std::is_sorted(w_grid.begin(), w_grid.end()))
    throw InvalidParams("repump grid must be ascending");
  std::vector<LinewidthPoint> out;
  out.reserve(w_grid.size());
  SystemParams q = p;
  for (double w : w_grid) {
    q.repump = w;
    out.push_back({w, linewidth(q)});
  }
  return out;
}

}  // namespace crossover::phase_diffusion
