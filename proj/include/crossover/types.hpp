#pragma once

#include <complex>
#include <optional>

#include <Eigen/Core>

namespace crossover {

using Complex = std::complex<double>;

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix5d = Eigen::Matrix<double, 5, 5>;

/// Expectation values shared by every solution method. Error fields are one
/// standard error; exact methods leave them at zero.
struct ObservableRecord {
  double sz = 0.0;          // <sigma^z>, per atom
  double sz_err = 0.0;
  Complex spin_corr{};      // <sigma_1^+ sigma_2^->
  double spin_corr_err = 0.0;
  double photons = 0.0;     // <a^dag a>
  double photons_err = 0.0;
  double photons2 = 0.0;    // <a^dag a^dag a a>
  double photons2_err = 0.0;
  double g2 = 0.0;          // photons2 / photons^2
  double g2_err = 0.0;
  std::optional<double> linewidth;      // FWHM, angular units
  std::optional<double> linewidth_err;
};

}  // namespace crossover
