#include "crossover/bruteforce.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "crossover/errors.hpp"
#include "crossover/integrators.hpp"

namespace crossover::bruteforce {

namespace {

constexpr Complex kI{0.0, 1.0};

}  // namespace

Generator::Generator(const SystemParams& p, int cutoff, int capacity) : n_atoms_(p.n_atoms), cutoff_(cutoff) {
  validate(p);
  if (cutoff < 1) throw InvalidParams("photon cutoff must be positive");
  if (p.n_atoms > 16 || (static_cast<long>(1) << p.n_atoms) * cutoff > capacity) {
    std::ostringstream os;
    os << "dense space 2^" << p.n_atoms << " x " << cutoff << " exceeds the capacity " << capacity;
    throw CapacityError(os.str());
  }
  const unsigned n_states = 1u << n_atoms_;
  dim_ = static_cast<Eigen::Index>(n_states) * cutoff_;
  auto idx = [this](unsigned bits, int m) { return static_cast<Eigen::Index>(bits) * cutoff_ + m; };

  a_ = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (unsigned b = 0; b < n_states; ++b)
    for (int m = 1; m < cutoff_; ++m) a_(idx(b, m - 1), idx(b, m)) = std::sqrt(static_cast<double>(m));

  Eigen::MatrixXcd sz_total = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (int j = 0; j < n_atoms_; ++j) {
    Eigen::MatrixXcd sm = Eigen::MatrixXcd::Zero(dim_, dim_);
    const unsigned bit = 1u << j;
    for (unsigned b = 0; b < n_states; ++b) {
      if (b & bit)
        for (int m = 0; m < cutoff_; ++m) sm(idx(b & ~bit, m), idx(b, m)) = 1.0;
      for (int m = 0; m < cutoff_; ++m) sz_total(idx(b, m), idx(b, m)) += (b & bit) ? 1.0 : -1.0;
    }
    sm_.push_back(sm);
  }

  Eigen::MatrixXcd h = 0.5 * p.detuning() * sz_total;
  for (const auto& sm : sm_) h += 0.5 * p.coupling * (a_.adjoint() * sm + sm.adjoint() * a_);

  std::vector<Eigen::MatrixXcd> jumps;
  if (p.kappa > 0.0) jumps.push_back(std::sqrt(p.kappa) * a_);
  for (int j = 0; j < n_atoms_; ++j) {
    const auto& sm = sm_[static_cast<std::size_t>(j)];
    if (p.gamma > 0.0) jumps.push_back(std::sqrt(p.gamma) * sm);
    if (p.repump > 0.0) jumps.push_back(std::sqrt(p.repump) * sm.adjoint());
    if (p.t2_inv > 0.0) {
      Eigen::MatrixXcd sz = sm.adjoint() * sm - sm * sm.adjoint();
      jumps.push_back(std::sqrt(0.5 * p.t2_inv) * sz);
    }
  }
  Eigen::MatrixXcd h_eff = h;
  for (const auto& l : jumps) h_eff -= 0.5 * kI * (l.adjoint() * l);

  // Every operator has O(1) entries per row; sparse products keep apply() at O(dim^2).
  h_eff_ = h_eff.sparseView();
  h_eff_adj_ = Sparse(h_eff_.adjoint());
  for (const auto& l : jumps) {
    jumps_.push_back(l.sparseView());
    jumps_adj_.push_back(Sparse(jumps_.back().adjoint()));
  }
}

Eigen::MatrixXcd Generator::apply(const Eigen::MatrixXcd& rho) const {
  Eigen::MatrixXcd out = -kI * (h_eff_ * rho) + kI * (rho * h_eff_adj_);
  Eigen::MatrixXcd lr(dim_, dim_);
  for (std::size_t i = 0; i < jumps_.size(); ++i) {
    lr.noalias() = jumps_[i] * rho;
    out.noalias() += lr * jumps_adj_[i];
  }
  return out;
}

Generator build_generator(const SystemParams& p, int cutoff, int capacity) { return Generator(p, cutoff, capacity); }

DenseState ground_state(int n_atoms, int cutoff, int n_photons) {
  if (n_photons < 0 || n_photons >= cutoff) throw InvalidParams("initial photon number outside the cutoff");
  DenseState s;
  s.n_atoms = n_atoms;
  s.cutoff = cutoff;
  const Eigen::Index dim = (Eigen::Index{1} << n_atoms) * cutoff;
  s.rho = Eigen::MatrixXcd::Zero(dim, dim);
  s.rho(n_photons, n_photons) = 1.0;
  return s;
}

void evolve(const Generator& g, DenseState& s, double t_end, double dt, double sample_every,
            const std::function<void(const DenseState&)>& on_sample) {
  if (!(dt > 0.0)) throw InvalidParams("time step must be positive");
  auto f = [&g](const Eigen::MatrixXcd& r) { return g.apply(r); };
  auto advance = [&](double span) {
    const auto n = static_cast<long>(std::ceil(span / dt - 1e-9));
    const double h = span / static_cast<double>(std::max(n, 1L));
    for (long i = 0; i < n; ++i) rk4_step(s.rho, h, f);
    if (!s.rho.allFinite()) throw NumericalFailure("dense master equation produced a non-finite entry");
    s.t += span;
  };
  if (on_sample) on_sample(s);
  const double chunk = sample_every > 0.0 ? sample_every : t_end - s.t;
  while (s.t < t_end - 1e-12) {
    advance(std::min(chunk, t_end - s.t));
    if (on_sample && sample_every > 0.0) on_sample(s);
  }
}

DenseState steady_state(const Generator& g, double dt, double tolerance, double horizon) {
  DenseState s = ground_state(g.n_atoms(), g.cutoff());
  ObservableRecord prev = observables(g, s);
  while (s.t < horizon) {
    evolve(g, s, s.t + 1.0, dt);
    const ObservableRecord now = observables(g, s);
    const double change = std::max({std::abs(now.sz - prev.sz), std::abs(now.spin_corr - prev.spin_corr),
                                    std::abs(now.photons - prev.photons), std::abs(now.photons2 - prev.photons2)});
    prev = now;
    if (change < tolerance) return s;
  }
  throw NotConverged("dense steady state not reached within the horizon");
}

ObservableRecord observables(const Generator& g, const DenseState& s) {
  const Complex tr = s.rho.trace();
  const Eigen::MatrixXcd& a = g.annihilation();
  const Eigen::MatrixXcd n_op = a.adjoint() * a;
  ObservableRecord r;
  double sz = 0.0;
  for (int j = 0; j < g.n_atoms(); ++j) {
    const auto& sm = g.sigma_minus(j);
    sz += ((sm.adjoint() * sm - sm * sm.adjoint()) * s.rho).trace().real();
  }
  r.sz = sz / (g.n_atoms() * tr.real());
  if (g.n_atoms() >= 2) r.spin_corr = (g.sigma_minus(0).adjoint() * g.sigma_minus(1) * s.rho).trace() / tr;
  r.photons = (n_op * s.rho).trace().real() / tr.real();
  r.photons2 = (a.adjoint() * a.adjoint() * a * a * s.rho).trace().real() / tr.real();
  r.g2 = r.photons > 0.0 ? r.photons2 / (r.photons * r.photons) : std::nan("");
  return r;
}

estimators::CorrelationSeries two_time_correlation(const Generator& g, const DenseState& rho, double tau_max,
                                                   double tau_step, double dt) {
  if (!(tau_step > 0.0) || tau_step > tau_max) throw InvalidParams("bad correlation delay grid");
  DenseState x = rho;
  x.rho = g.annihilation() * rho.rho;
  x.t = 0.0;
  estimators::CorrelationSeries c;
  const Eigen::MatrixXcd ad = g.annihilation().adjoint();
  const auto n_lags = static_cast<std::size_t>(std::floor(tau_max / tau_step + 1e-9)) + 1;
  for (std::size_t j = 0; j < n_lags; ++j) {
    if (j > 0) evolve(g, x, tau_step * static_cast<double>(j), dt);
    c.tau.push_back(tau_step * static_cast<double>(j));
    c.value.push_back((ad * x.rho).trace());
    c.stderr_abs.push_back(0.0);
  }
  return c;
}

double min_eigenvalue(const DenseState& s) {
  const Eigen::MatrixXcd herm = 0.5 * (s.rho + s.rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DenseState expand_symmetric(const su4::Basis& basis, const su4::DetState& s) {
  const int n = basis.n_atoms();
  if (n > 8) throw CapacityError("symmetric expansion limited to eight atoms");
  DenseState d;
  d.n_atoms = n;
  d.cutoff = s.cutoff;
  d.t = s.t;
  const Eigen::Index dim = (Eigen::Index{1} << n) * s.cutoff;
  d.rho = Eigen::MatrixXcd::Zero(dim, dim);
  // Each atom carries one of |e><e|, |g><g|, |e><g|, |g><e|.
  const long assignments = 1L << (2 * n);
  for (long code = 0; code < assignments; ++code) {
    int counts[4] = {0, 0, 0, 0};
    unsigned ket = 0, bra = 0;
    for (int j = 0; j < n; ++j) {
      const int type = static_cast<int>((code >> (2 * j)) & 3);
      ++counts[type];
      if (type == su4::kE || type == su4::kU) ket |= 1u << j;
      if (type == su4::kE || type == su4::kD) bra |= 1u << j;
    }
    const auto k = static_cast<std::size_t>(basis.index({counts[0], counts[1], counts[2], counts[3]}));
    for (int m = 0; m < s.cutoff; ++m)
      for (int mp = 0; mp < s.cutoff; ++mp) d.rho(d.index(ket, m), d.index(bra, mp)) += s.at(k, m, mp);
  }
  return d;
}

}  // namespace crossover::bruteforce
