#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace crossover::su4 {

/// Single-atom Liouville basis labels: |e><e|, |g><g|, |e><g|, |g><e|.
enum Type : int { kE = 0, kG = 1, kU = 2, kD = 3 };

/// Numbers of atoms in each single-atom element. A basis element of the
/// symmetric space is the plain sum of the tensor products over all distinct
/// arrangements of these counts (no normalization prefactor), so its trace is
/// the multinomial N!/(ee! gg!) when eg = ge = 0 and zero otherwise.
struct Counts {
  int ee = 0;
  int gg = 0;
  int eg = 0;
  int ge = 0;

  int operator[](int type) const { return type == kE ? ee : type == kG ? gg : type == kU ? eg : ge; }
  int ket_excited() const { return ee + eg; }
  int bra_excited() const { return ee + ge; }
  bool diagonal() const { return eg == 0 && ge == 0; }
  bool operator==(const Counts&) const = default;
};

/// (N+1)(N+2)(N+3)/6 in exact integer arithmetic.
std::uint64_t basis_size(int n_atoms);

class Basis {
 public:
  static constexpr std::ptrdiff_t npos = -1;

  /// Lexicographic in (ee, gg, eg). Throws CapacityError above max_elements.
  explicit Basis(int n_atoms, std::size_t max_elements = 4'000'000);

  int n_atoms() const { return n_atoms_; }
  std::size_t size() const { return elems_.size(); }
  const Counts& operator[](std::size_t k) const { return elems_[k]; }

  std::ptrdiff_t index(const Counts& c) const;

  /// Element reached by changing one atom of type `from` into type `to`;
  /// npos when no atom of type `from` is present.
  std::ptrdiff_t move(std::size_t k, int from, int to) const { return moves_[k * 16 + from * 4 + to]; }

  /// Index with eg and ge exchanged (Hermitian conjugate partner).
  std::size_t partner(std::size_t k) const { return partner_[k]; }

  /// Number of arrangements N!/(ee! gg! eg! ge!).
  double multiplicity(std::size_t k) const { return mult_[k]; }

 private:
  int n_atoms_;
  std::vector<Counts> elems_;
  std::vector<std::int32_t> lookup_;  // (N+1)^3 table over (ee, gg, eg)
  std::vector<std::ptrdiff_t> moves_;
  std::vector<std::size_t> partner_;
  std::vector<double> mult_;
};

/// Same as constructing a Basis.
Basis enumerate_basis(int n_atoms);

}  // namespace crossover::su4
