#include "crossover/su4_basis.hpp"

#include <cmath>
#include <sstream>

#include "crossover/errors.hpp"

namespace crossover::su4 {

std::uint64_t basis_size(int n_atoms) {
  if (n_atoms < 0) throw InvalidParams("atom number must be nonnegative");
  const auto n = static_cast<std::uint64_t>(n_atoms);
  return (n + 1) * (n + 2) * (n + 3) / 6;
}

Basis::Basis(int n_atoms, std::size_t max_elements) : n_atoms_(n_atoms) {
  if (n_atoms < 1) throw InvalidParams("symmetric basis needs at least one atom");
  const std::uint64_t size = basis_size(n_atoms);
  if (size > max_elements) {
    std::ostringstream os;
    os << "symmetric basis for N=" << n_atoms << " has " << size << " elements, above the limit " << max_elements;
    throw CapacityError(os.str());
  }
  const int n1 = n_atoms + 1;
  lookup_.assign(static_cast<std::size_t>(n1) * n1 * n1, -1);
  elems_.reserve(size);
  for (int ee = 0; ee <= n_atoms; ++ee)
    for (int gg = 0; gg + ee <= n_atoms; ++gg)
      for (int eg = 0; eg + gg + ee <= n_atoms; ++eg) {
        lookup_[(static_cast<std::size_t>(ee) * n1 + gg) * n1 + eg] = static_cast<std::int32_t>(elems_.size());
        elems_.push_back({ee, gg, eg, n_atoms - ee - gg - eg});
      }

  const double log_nfact = std::lgamma(n_atoms + 1.0);
  moves_.assign(elems_.size() * 16, npos);
  partner_.resize(elems_.size());
  mult_.resize(elems_.size());
  for (std::size_t k = 0; k < elems_.size(); ++k) {
    const Counts& c = elems_[k];
    mult_[k] = std::round(std::exp(log_nfact - std::lgamma(c.ee + 1.0) - std::lgamma(c.gg + 1.0) -
                                   std::lgamma(c.eg + 1.0) - std::lgamma(c.ge + 1.0)));
    partner_[k] = static_cast<std::size_t>(index({c.ee, c.gg, c.ge, c.eg}));
    for (int from = 0; from < 4; ++from) {
      if (c[from] == 0) continue;
      for (int to = 0; to < 4; ++to) {
        int v[4] = {c.ee, c.gg, c.eg, c.ge};
        --v[from];
        ++v[to];
        moves_[k * 16 + from * 4 + to] = index({v[0], v[1], v[2], v[3]});
      }
    }
  }
}

std::ptrdiff_t Basis::index(const Counts& c) const {
  if (c.ee < 0 || c.gg < 0 || c.eg < 0 || c.ge < 0 || c.ee + c.gg + c.eg + c.ge != n_atoms_) return npos;
  const std::size_t n1 = static_cast<std::size_t>(n_atoms_) + 1;
  return lookup_[(static_cast<std::size_t>(c.ee) * n1 + c.gg) * n1 + c.eg];
}

Basis enumerate_basis(int n_atoms) { return Basis(n_atoms); }

}  // namespace crossover::su4
