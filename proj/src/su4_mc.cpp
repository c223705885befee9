#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>
#include <vector>

#include <omp.h>

#include "crossover/errors.hpp"
#include "crossover/integrators.hpp"
#include "crossover/rng.hpp"
#include "crossover/su4_exact.hpp"

namespace crossover::su4 {

namespace {

constexpr Complex kI{0.0, 1.0};

int ket_photons(const Counts& c, int quanta) { return quanta - c.ket_excited(); }
int bra_photons(const Counts& c, int quanta) { return quanta - c.bra_excited(); }

Eigen::VectorXcd diagonal_mc(const Basis& basis, const SystemParams& p, int quanta) {
  const double delta = p.detuning();
  const double dephasing = 0.5 * basis.n_atoms() * p.t2_inv;
  Eigen::VectorXcd d(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    const int m = ket_photons(c, quanta), n = bra_photons(c, quanta);
    if (m < 0 || n < 0) {
      d[static_cast<Eigen::Index>(k)] = 0.0;
      continue;
    }
    d[static_cast<Eigen::Index>(k)] = -kI * delta * static_cast<double>(c.eg - c.ge) - 0.5 * p.kappa * (m + n) -
                                      0.5 * p.gamma * (2 * c.ee + c.eg + c.ge) -
                                      0.5 * p.repump * (2 * c.gg + c.eg + c.ge) - dephasing;
  }
  return d;
}

// Coherent exchange only; it conserves the number of quanta.
void offdiagonal_mc(const Basis& basis, const SystemParams& p, int quanta, const Eigen::VectorXcd& in,
                    Eigen::VectorXcd& out) {
  const Complex minus_half_i_omega = -0.5 * kI * p.coupling;
  out.resize(in.size());
  auto c_at = [&](std::ptrdiff_t k) { return k == Basis::npos ? Complex(0.0) : in[k]; };
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    const int m = ket_photons(c, quanta), n = bra_photons(c, quanta);
    if (m < 0 || n < 0) {
      out[static_cast<Eigen::Index>(k)] = 0.0;
      continue;
    }
    const double sm = std::sqrt(static_cast<double>(m)), sm1 = std::sqrt(m + 1.0);
    const double sn = std::sqrt(static_cast<double>(n)), sn1 = std::sqrt(n + 1.0);
    const double ee = c.ee, gg = c.gg, eg = c.eg, ge = c.ge;
    const Complex left = sm * (ge * c_at(basis.move(k, kD, kE)) + gg * c_at(basis.move(k, kG, kU))) +
                         sm1 * (eg * c_at(basis.move(k, kU, kG)) + ee * c_at(basis.move(k, kE, kD)));
    const Complex right = sn1 * (ge * c_at(basis.move(k, kD, kG)) + ee * c_at(basis.move(k, kE, kU))) +
                          sn * (eg * c_at(basis.move(k, kU, kE)) + gg * c_at(basis.move(k, kG, kD)));
    out[static_cast<Eigen::Index>(k)] = minus_half_i_omega * (left - right);
  }
}

// Coupling operator of one quanta sector: real weights in CSR layout, overall factor -i*Omega/2.
struct SectorCoupling {
  std::vector<int> row_start;
  std::vector<int> col;
  std::vector<double> weight;
  double half_omega = 0.0;

  void apply(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    const Eigen::Index dim = in.size();
    out.resize(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      double re = 0.0, im = 0.0;
      for (int e = row_start[static_cast<std::size_t>(k)]; e < row_start[static_cast<std::size_t>(k) + 1]; ++e) {
        const Complex v = in[col[static_cast<std::size_t>(e)]];
        re += weight[static_cast<std::size_t>(e)] * v.real();
        im += weight[static_cast<std::size_t>(e)] * v.imag();
      }
      out[k] = Complex(half_omega * im, -half_omega * re);
    }
  }
};

SectorCoupling coupling_mc(const Basis& basis, const SystemParams& p, int quanta) {
  SectorCoupling a;
  a.half_omega = 0.5 * p.coupling;
  a.row_start.reserve(basis.size() + 1);
  a.col.reserve(basis.size() * 8);
  a.weight.reserve(basis.size() * 8);
  a.row_start.push_back(0);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    const int m = ket_photons(c, quanta), n = bra_photons(c, quanta);
    if (m >= 0 && n >= 0) {
      const double sm = std::sqrt(static_cast<double>(m)), sm1 = std::sqrt(m + 1.0);
      const double sn = std::sqrt(static_cast<double>(n)), sn1 = std::sqrt(n + 1.0);
      auto add = [&](int from, int to, double w) {
        const auto src = basis.move(k, from, to);
        if (src == Basis::npos || w == 0.0) return;
        a.col.push_back(static_cast<int>(src));
        a.weight.push_back(w);
      };
      add(kD, kE, sm * c.ge);
      add(kG, kU, sm * c.gg);
      add(kU, kG, sm1 * c.eg);
      add(kE, kD, sm1 * c.ee);
      add(kD, kG, -sn1 * c.ge);
      add(kE, kU, -sn1 * c.ee);
      add(kU, kE, -sn * c.eg);
      add(kG, kD, -sn * c.gg);
    }
    a.row_start.push_back(static_cast<int>(a.col.size()));
  }
  return a;
}

class MCStepper {
 public:
  MCStepper(const Basis& b, const SystemParams& p) : basis_(b), p_(p) {}

  void step(MCState& s, double dt) {
    Sector& sec = sector(s.quanta);
    const Eigen::VectorXcd* half_exp = &scratch_exp_;
    if (dt == sec.dt) {
      half_exp = &sec.half_exp;
    } else if (sec.dt < 0.0) {
      sec.dt = dt;
      sec.half_exp = (sec.diag * (0.5 * dt)).array().exp().matrix();
      half_exp = &sec.half_exp;
    } else {
      scratch_exp_ = (sec.diag * (0.5 * dt)).array().exp().matrix();
    }
    const SectorCoupling& a = sec.coupling;
    lawson_rk4_step(s.coeff, dt, *half_exp,
                    [&a](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) { a.apply(in, out); }, ws_);
  }

 private:
  // Sector operators are cached: trajectories revisit a narrow band of quanta.
  struct Sector {
    Eigen::VectorXcd diag;
    SectorCoupling coupling;
    double dt = -1.0;  // step of the cached exponential
    Eigen::VectorXcd half_exp;
  };

  Sector& sector(int quanta) {
    auto it = sectors_.find(quanta);
    if (it == sectors_.end()) {
      Sector sec;
      sec.diag = diagonal_mc(basis_, p_, quanta);
      sec.coupling = coupling_mc(basis_, p_, quanta);
      it = sectors_.emplace(quanta, std::move(sec)).first;
    }
    return it->second;
  }

  const Basis& basis_;
  const SystemParams& p_;
  std::unordered_map<int, Sector> sectors_;
  Eigen::VectorXcd scratch_exp_;
  Rk4Workspace<Eigen::VectorXcd> ws_;
};

}  // namespace

std::string_view to_string(JumpChannel c) {
  switch (c) {
    case JumpChannel::kRepump: return "repump";
    case JumpChannel::kSpontaneous: return "spontaneous";
    case JumpChannel::kDephasing: return "dephasing";
    case JumpChannel::kCavity: return "cavity";
  }
  return "unknown";
}

MCState ground_state_mc(const Basis& basis, int n_photons) {
  if (n_photons < 0) throw InvalidParams("negative initial photon number");
  MCState s;
  s.quanta = n_photons;
  s.coeff = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
  s.coeff[basis.index({0, basis.n_atoms(), 0, 0})] = 1.0;
  return s;
}

void effective_rhs_mc(const Basis& basis, const SystemParams& p, int quanta, const Eigen::VectorXcd& in,
                      Eigen::VectorXcd& out) {
  offdiagonal_mc(basis, p, quanta, in, out);
  out += diagonal_mc(basis, p, quanta).cwiseProduct(in);
}

void effective_step_mc(const Basis& basis, const SystemParams& p, MCState& s, double dt) {
  MCStepper stepper(basis, p);
  stepper.step(s, dt);
}

double trace(const Basis& basis, const MCState& s) {
  double tr = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    if (c.diagonal() && ket_photons(c, s.quanta) >= 0) tr += basis.multiplicity(k) * s.coeff[static_cast<Eigen::Index>(k)].real();
  }
  return tr;
}

std::array<double, 4> jump_weights(const Basis& basis, const SystemParams& p, const MCState& s) {
  double ground = 0.0, excited = 0.0, photons = 0.0, tr = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    const int m = ket_photons(c, s.quanta);
    if (!c.diagonal() || m < 0) continue;
    const double v = basis.multiplicity(k) * s.coeff[static_cast<Eigen::Index>(k)].real();
    tr += v;
    ground += c.gg * v;
    excited += c.ee * v;
    photons += m * v;
  }
  return {p.repump * ground, p.gamma * excited, 0.5 * basis.n_atoms() * p.t2_inv * tr, p.kappa * photons};
}

JumpChannel sample_jump(const std::array<double, 4>& weights, double u) {
  double total = 0.0;
  for (double w : weights) total += std::max(w, 0.0);
  if (!(total > 0.0)) throw DeadState("all jump channels have zero weight");
  double target = u * total;
  int last_positive = 0;
  for (int i = 0; i < 4; ++i) {
    const double w = std::max(weights[i], 0.0);
    if (w <= 0.0) continue;
    last_positive = i;
    if (target < w) return static_cast<JumpChannel>(i);
    target -= w;
  }
  return static_cast<JumpChannel>(last_positive);
}

void apply_jump(const Basis& basis, const SystemParams& p, MCState& s, JumpChannel channel) {
  const Eigen::VectorXcd old = s.coeff;
  const int q = s.quanta;
  Eigen::VectorXcd next = Eigen::VectorXcd::Zero(old.size());
  int q_next = q;
  switch (channel) {
    case JumpChannel::kRepump:
      q_next = q + 1;
      for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto src = basis.move(k, kE, kG);
        if (src != Basis::npos) next[static_cast<Eigen::Index>(k)] = p.repump * basis[k].ee * old[src];
      }
      break;
    case JumpChannel::kSpontaneous:
      q_next = q - 1;
      for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto src = basis.move(k, kG, kE);
        if (src != Basis::npos) next[static_cast<Eigen::Index>(k)] = p.gamma * basis[k].gg * old[src];
      }
      break;
    case JumpChannel::kDephasing:
      for (std::size_t k = 0; k < basis.size(); ++k) {
        const Counts& c = basis[k];
        next[static_cast<Eigen::Index>(k)] =
            0.5 * p.t2_inv * (basis.n_atoms() - 2.0 * (c.eg + c.ge)) * old[static_cast<Eigen::Index>(k)];
      }
      break;
    case JumpChannel::kCavity:
      q_next = q - 1;
      for (std::size_t k = 0; k < basis.size(); ++k) {
        const Counts& c = basis[k];
        const int m = ket_photons(c, q), n = bra_photons(c, q);
        if (m > 0 && n > 0)
          next[static_cast<Eigen::Index>(k)] = p.kappa * std::sqrt(static_cast<double>(m) * n) * old[static_cast<Eigen::Index>(k)];
      }
      break;
  }
  if (q_next < 0) throw InternalQuantaError("number of quanta became negative");
  s.coeff = std::move(next);
  s.quanta = q_next;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    if ((ket_photons(c, q_next) < 0 || bra_photons(c, q_next) < 0) && std::abs(s.coeff[static_cast<Eigen::Index>(k)]) > 0.0)
      throw InternalQuantaError("jump populated an element with a negative photon index");
  }
  const double tr = trace(basis, s);
  if (!(tr > 0.0)) throw DeadState("jump produced a state with zero trace");
  s.coeff /= tr;
  ++s.jumps[static_cast<std::size_t>(channel)];
}

ObservableRecord observables(const Basis& basis, const MCState& s) {
  const double n = basis.n_atoms();
  double tr = 0.0, inversion = 0.0, photons = 0.0, photons2 = 0.0;
  Complex pair = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Counts& c = basis[k];
    const int m = ket_photons(c, s.quanta);
    if (m < 0 || bra_photons(c, s.quanta) < 0) continue;
    const Complex v = basis.multiplicity(k) * s.coeff[static_cast<Eigen::Index>(k)];
    if (c.diagonal()) {
      tr += v.real();
      inversion += (c.ee - c.gg) * v.real();
      photons += m * v.real();
      photons2 += m * (m - 1.0) * v.real();
    } else if (c.eg == 1 && c.ge == 1) {
      pair += v;
    }
  }
  if (!(tr > 0.0)) throw InvalidParams("state has nonpositive trace");
  ObservableRecord r;
  r.sz = inversion / (n * tr);
  r.spin_corr = n > 1 ? pair / (n * (n - 1.0) * tr) : Complex(0.0, 0.0);
  r.photons = photons / tr;
  r.photons2 = photons2 / tr;
  r.g2 = r.photons > 0.0 ? r.photons2 / (r.photons * r.photons) : std::nan("");
  return r;
}

double auto_step_mc(const Basis& basis, const SystemParams& p, int max_quanta) {
  const double rho = growth_bound(static_cast<Eigen::Index>(basis.size()),
                                  [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
                                    offdiagonal_mc(basis, p, max_quanta, in, out);
                                  });
  return std::min(0.5 / std::max(rho, 1e-12), 0.1);
}

namespace {

// Per-trajectory record at one time: sz, Re/Im pair correlation, photons, photons2.
constexpr int kFields = 5;

void write_sample(double* dst, const ObservableRecord& r) {
  dst[0] = r.sz;
  dst[1] = r.spin_corr.real();
  dst[2] = r.spin_corr.imag();
  dst[3] = r.photons;
  dst[4] = r.photons2;
}

// Mean and standard error over trajectories, with g2 from a jackknife.
ObservableRecord aggregate(const std::vector<double>& rows, std::size_t n_traj) {
  const double n = static_cast<double>(n_traj);
  double mean[kFields] = {}, sq[kFields] = {};
  for (std::size_t i = 0; i < n_traj; ++i)
    for (int f = 0; f < kFields; ++f) {
      const double v = rows[i * kFields + f];
      mean[f] += v;
      sq[f] += v * v;
    }
  double err[kFields];
  for (int f = 0; f < kFields; ++f) {
    mean[f] /= n;
    err[f] = n > 1 ? std::sqrt(std::max(0.0, sq[f] / n - mean[f] * mean[f]) / (n - 1.0)) : 0.0;
  }
  ObservableRecord r;
  r.sz = mean[0];
  r.sz_err = err[0];
  r.spin_corr = {mean[1], mean[2]};
  r.spin_corr_err = std::hypot(err[1], err[2]);
  r.photons = mean[3];
  r.photons_err = err[3];
  r.photons2 = mean[4];
  r.photons2_err = err[4];
  auto ratio = [](double ph, double ph2) {
    return ph > 0.0 ? ph2 / (ph * ph) : std::numeric_limits<double>::quiet_NaN();
  };
  r.g2 = ratio(mean[3], mean[4]);
  if (n > 1 && !std::isnan(r.g2)) {
    const double s3 = mean[3] * n, s4 = mean[4] * n;
    double jm = 0.0, jsq = 0.0;
    for (std::size_t i = 0; i < n_traj; ++i) {
      const double v = ratio((s3 - rows[i * kFields + 3]) / (n - 1.0), (s4 - rows[i * kFields + 4]) / (n - 1.0));
      jm += v;
      jsq += v * v;
    }
    jm /= n;
    r.g2_err = std::sqrt(std::max(0.0, (jsq / n - jm * jm)) * (n - 1.0));
  } else {
    r.g2_err = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace

MCResult run_mc(const Basis& basis, const SystemParams& p, const MCOptions& opts) {
  validate(p);
  if (opts.n_traj < 1) throw InvalidParams("need at least one trajectory");
  if (!(opts.t_end > 0.0)) throw InvalidParams("t_end must be positive");
  const double sample_every = opts.sample_every > 0.0 ? opts.sample_every : opts.t_end / 100.0;
  const auto n_samples = static_cast<std::size_t>(std::floor(opts.t_end / sample_every + 1e-9)) + 1;

  const int max_quanta = basis.n_atoms() + default_cutoff(p);
  const double dt = opts.dt > 0.0 ? opts.dt : auto_step_mc(basis, p, max_quanta);
  const MCState initial = opts.initial ? *opts.initial : ground_state_mc(basis);
  const bool averaging = opts.average_from.has_value();
  const double avg_from = averaging ? *opts.average_from : 0.0;

  MCResult result;
  result.dt = dt;
  result.times.resize(n_samples);
  for (std::size_t j = 0; j < n_samples; ++j) result.times[j] = sample_every * static_cast<double>(j);

  std::vector<double> samples(n_samples * opts.n_traj * kFields, 0.0);  // time-major
  std::vector<double> averaged(opts.n_traj * kFields, 0.0);
  std::vector<std::array<long, 4>> jumps(opts.n_traj);
  std::vector<std::string> failure(opts.n_traj);
  const long n_traj = static_cast<long>(opts.n_traj);

#pragma omp parallel for schedule(dynamic) num_threads(std::max(opts.threads, 1))
  for (long ti = 0; ti < n_traj; ++ti) {
    const auto traj = static_cast<std::size_t>(ti);
    try {
      std::mt19937_64 rng(mix64(opts.seed ^ mix64(traj + 1)));
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      MCState s = initial;
      s.initial_quanta = s.quanta;
      MCStepper stepper(basis, p);
      double t = 0.0;
      double u = uniform(rng);
      double avg_acc[kFields] = {};
      long avg_count = 0;
      auto record = [&](std::size_t j) {
        const ObservableRecord r = observables(basis, s);
        double* dst = &samples[(j * opts.n_traj + traj) * kFields];
        write_sample(dst, r);
        if (averaging && result.times[j] >= avg_from - 1e-12) {
          for (int f = 0; f < kFields; ++f) avg_acc[f] += dst[f];
          ++avg_count;
        }
      };
      record(0);
      std::size_t next = 1;
      Eigen::VectorXcd saved;
      while (next < n_samples) {
        const double target = result.times[next];
        const bool reaches = target - t <= dt;
        const double h = reaches ? target - t : dt;
        const double tr0 = trace(basis, s);
        saved = s.coeff;
        stepper.step(s, h);
        const double tr1 = trace(basis, s);
        if (!std::isfinite(tr1) || tr1 > tr0 * (1.0 + 1e-9) + 1e-14)
          throw NumericalFailure("trace grew under the effective evolution; step too large");
        if (tr1 < u) {
          // Locate the crossing trace = u inside (0, h] on log(trace).
          double lo = 0.0, hi = h, f_lo = std::log(tr0 / u), f_hi = std::log(tr1 / u);
          int side = 0;
          double h_star = h;
          for (int it = 0; it < 100; ++it) {
            h_star = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            s.coeff = saved;
            stepper.step(s, h_star);
            const double f = std::log(trace(basis, s) / u);
            if (std::abs(f) < 1e-7 || hi - lo < 1e-12 * h) break;
            if (f > 0.0) {
              lo = h_star;
              f_lo = f;
              if (side == 1) f_hi *= 0.5;
              side = 1;
            } else {
              hi = h_star;
              f_hi = f;
              if (side == -1) f_lo *= 0.5;
              side = -1;
            }
          }
          t += h_star;
          const auto w = jump_weights(basis, p, s);
          apply_jump(basis, p, s, sample_jump(w, uniform(rng)));
          u = uniform(rng);
          if (target - t < 1e-12 * std::max(1.0, target)) {
            t = target;
            record(next++);
          }
        } else {
          t = reaches ? target : t + h;
          if (reaches) record(next++);
        }
      }
      if (averaging) {
        if (avg_count == 0) throw InvalidParams("averaging window contains no samples");
        for (int f = 0; f < kFields; ++f) averaged[traj * kFields + f] = avg_acc[f] / static_cast<double>(avg_count);
      }
      const long expected = s.initial_quanta + s.jumps[0] - s.jumps[1] - s.jumps[3];
      if (expected != s.quanta) throw InternalQuantaError("quanta bookkeeping mismatch");
      jumps[traj] = s.jumps;
    } catch (const std::exception& e) {
      failure[traj] = e.what();
    }
  }

  for (std::size_t i = 0; i < opts.n_traj; ++i) {
    if (!failure[i].empty()) {
      std::ostringstream os;
      os << "trajectory " << i << ": " << failure[i];
      throw TrajectoryDiverged(i, os.str());
    }
  }
  for (const auto& j : jumps)
    for (int c = 0; c < 4; ++c) result.jumps[c] += j[c];

  result.series.reserve(n_samples);
  std::vector<double> rows(opts.n_traj * kFields);
  for (std::size_t j = 0; j < n_samples; ++j) {
    std::copy_n(samples.begin() + static_cast<long>(j * opts.n_traj * kFields), rows.size(), rows.begin());
    result.series.push_back(aggregate(rows, opts.n_traj));
  }
  if (averaging) result.time_averaged = aggregate(averaged, opts.n_traj);
  return result;
}

}  // namespace crossover::su4
