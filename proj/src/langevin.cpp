#include "crossover/langevin.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "crossover/errors.hpp"
#include "crossover/meanfield.hpp"
#include "crossover/phase_diffusion.hpp"
#include "crossover/rng.hpp"

namespace crossover::langevin {

Vector5d drift(const PhaseSpacePoint& x, const SystemParams& p) {
  const double n = p.n_atoms;
  const double omega = p.coupling;
  const double big_gamma = total_decoherence(p);
  const double delta = p.detuning();
  const double wg = p.repump + p.gamma;
  const double d0 = (p.repump - p.gamma) / wg;

  Vector5d r;
  r[kQ] = -0.5 * p.kappa * x[kQ] - 0.5 * n * omega * x[kSy];
  r[kP] = -0.5 * p.kappa * x[kP] + 0.5 * n * omega * x[kSx];
  r[kSx] = -0.5 * big_gamma * x[kSx] - delta * x[kSy] + 0.5 * omega * x[kP] * x[kSz];
  r[kSy] = -0.5 * big_gamma * x[kSy] + delta * x[kSx] - 0.5 * omega * x[kQ] * x[kSz];
  r[kSz] = -wg * (x[kSz] - d0) + 2.0 * omega * (x[kQ] * x[kSy] - x[kP] * x[kSx]);
  return r;
}

DiffusionMatrix diffusion(const Vector5d& means, const SystemParams& p) {
  const double n = p.n_atoms;
  const double loss_minus_gain = p.gamma - p.repump;
  DiffusionMatrix d = DiffusionMatrix::Zero();
  d(kQ, kQ) = d(kP, kP) = p.kappa / 8.0;
  d(kSx, kSx) = d(kSy, kSy) = total_decoherence(p) / (8.0 * n);
  d(kSx, kSz) = d(kSz, kSx) = 0.5 * loss_minus_gain / n * means[kSx];
  d(kSy, kSz) = d(kSz, kSy) = 0.5 * loss_minus_gain / n * means[kSy];
  d(kSz, kSz) = ((p.repump + p.gamma) + loss_minus_gain * means[kSz]) / n;
  return d;
}

Matrix5d noise_factor(const DiffusionMatrix& d, double dt) {
  if (!(dt > 0.0)) throw InvalidParams("noise_factor: dt must be positive");
  const Matrix5d target = 2.0 * dt * d;
  Eigen::SelfAdjointEigenSolver<Matrix5d> es(target);
  Vector5d lambda = es.eigenvalues();
  const double eps = 1e-10 * std::abs(target.trace());
  if (lambda.minCoeff() < -eps) {
    std::ostringstream os;
    os << "diffusion matrix not positive semidefinite (lambda_min = " << lambda.minCoeff() / (2.0 * dt)
       << "); operating below the first threshold?";
    throw NonPositiveDiffusion(os.str());
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

Vector5d Ensemble::means() const {
  Vector5d sum = Vector5d::Zero();
  for (const auto& x : points) sum += x;
  return sum / static_cast<double>(points.size());
}

Ensemble sample_initial(const SystemParams& p, std::size_t n_traj, std::uint64_t seed) {
  validate(p);
  if (n_traj < 2) throw InvalidParams("ensemble needs at least two trajectories");
  const int n = p.n_atoms;

  // Sum of n independent +-1 spins from the bits of 64-bit draws.
  auto spin_sum = [n](CounterRng& rng) {
    long heads = 0;
    int left = n;
    while (left > 0) {
      const int take = std::min(left, 64);
      std::uint64_t bits = rng.next();
      if (take < 64) bits &= (std::uint64_t{1} << take) - 1;
      heads += std::popcount(bits);
      left -= take;
    }
    return static_cast<double>(2 * heads - n);
  };

  Ensemble e;
  e.seed = seed;
  e.points.resize(n_traj);
  for (std::size_t i = 0; i < n_traj; ++i) {
    // Counter 2^63 is reserved for initial conditions; steps count up from 0.
    CounterRng rng(seed, i, std::uint64_t{1} << 63);
    PhaseSpacePoint& x = e.points[i];
    x[kQ] = 0.5 * rng.normal();
    x[kP] = 0.5 * rng.normal();
    x[kSx] = spin_sum(rng) / (2.0 * n);
    x[kSy] = spin_sum(rng) / (2.0 * n);
    x[kSz] = -1.0;
  }
  return e;
}

namespace {

double rate_scale(const SystemParams& p, double field_max) {
  return std::max({p.kappa, total_decoherence(p), p.repump + p.gamma, std::abs(p.detuning()),
                   std::sqrt(static_cast<double>(p.n_atoms)) * p.coupling,
                   p.coupling * std::max(field_max, 1.0)});
}

constexpr double kStepFactor = 0.05;

}  // namespace

double max_step(const Ensemble& e, const SystemParams& p) {
  double field_max = 0.0;
  for (const auto& x : e.points) field_max = std::max({field_max, std::abs(x[kQ]), std::abs(x[kP])});
  return kStepFactor / rate_scale(p, field_max);
}

void step(Ensemble& e, const SystemParams& p, double dt, const StepOptions& opts) {
  const std::size_t m = e.points.size();
  Vector5d sum = Vector5d::Zero();
  double field_max = 0.0;
  for (const auto& x : e.points) {
    sum += x;
    field_max = std::max({field_max, std::abs(x[kQ]), std::abs(x[kP])});
  }
  const double limit = kStepFactor / rate_scale(p, field_max);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "Langevin step " << dt << " exceeds limit " << limit << " at t=" << e.t;
    throw StepSizeViolation(os.str());
  }
  const Vector5d means = sum / static_cast<double>(m);

  Matrix5d b = Matrix5d::Zero();
  if (!opts.zero_diffusion) b = noise_factor(diffusion(means, p), dt);

  const std::uint64_t seed = e.seed;
  const std::uint64_t counter = e.step_index;
  auto* points = e.points.data();
  const long count = static_cast<long>(m);

#pragma omp parallel for schedule(static) num_threads(std::max(opts.threads, 1))
  for (long i = 0; i < count; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i), counter);
    Vector5d xi;
    for (int k = 0; k < 5; ++k) xi[k] = rng.three_point();
    const Vector5d dw = b * xi;
    PhaseSpacePoint& x = points[i];
    const Vector5d a0 = drift(x, p);
    const PhaseSpacePoint support = x + a0 * dt + dw;
    x += 0.5 * (a0 + drift(support, p)) * dt + dw;
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (!e.points[i].allFinite()) {
      std::ostringstream os;
      os << "trajectory " << i << " diverged at t=" << e.t + dt;
      throw TrajectoryDiverged(i, os.str());
    }
  }
  e.t += dt;
  ++e.step_index;
}

RunOptions resolve_options(const SystemParams& p, RunOptions opts) {
  const DerivedParams d = derive(p);
  const auto mf = meanfield::steady_state_analytic(p);
  const double photons = std::max(mf.photons, 0.0);

  if (opts.dt <= 0.0) {
    const double field_max = 4.0 * std::sqrt(photons + 1.0) + 3.0;
    opts.dt = kStepFactor / rate_scale(p, field_max);
  }
  const double wg = p.repump + p.gamma;
  if (opts.t_relax <= 0.0) {
    // Linear growth rate of the field out of the vacuum at S^z = d0.
    const double half_sum = 0.5 * (p.kappa + d.Gamma);
    const double disc = half_sum * half_sum - p.kappa * d.Gamma * (1.0 - d.cooperativity * d.d0);
    const double growth = disc > half_sum * half_sum ? 0.5 * (std::sqrt(disc) - half_sum) : 0.0;
    double t = std::max(10.0 / wg, 10.0 / p.kappa);
    if (growth > 0.0) t += 3.0 * std::log(photons + 2.0) / growth;
    opts.t_relax = t;
  }
  const auto pd = phase_diffusion::linewidth(p);
  const double coherence_rate = pd.valid ? pd.linewidth : p.kappa;
  if (opts.t_collect <= 0.0) opts.t_collect = std::max({20.0 / wg, 20.0 / p.kappa, 2.0 / coherence_rate});
  if (opts.sample_stride <= 0.0) {
    double stride = std::min(0.1 / coherence_rate, 100.0 * opts.dt);
    if (opts.max_samples > 0)
      stride = std::max(stride, opts.t_collect / static_cast<double>(opts.max_samples));
    opts.sample_stride = stride;
  }
  // Stride is a whole number of steps.
  const double steps = std::max(1.0, std::round(opts.sample_stride / opts.dt));
  opts.sample_stride = steps * opts.dt;
  return opts;
}

TrajectoryArchive run(const SystemParams& p, const RunOptions& requested) {
  validate(p);
  if (p.repump < p.gamma)
    throw NonPositiveDiffusion("repump below the first threshold (w < gamma): c-number diffusion is not positive");
  if (requested.n_traj < 2) throw InvalidParams("Langevin run needs at least two trajectories");
  const RunOptions o = resolve_options(p, requested);

  Ensemble e = sample_initial(p, o.n_traj, o.seed);
  const StepOptions so{false, o.threads};

  const auto relax_steps = static_cast<long>(std::ceil(o.t_relax / o.dt - 1e-9));
  for (long i = 0; i < relax_steps; ++i) step(e, p, o.dt, so);

  const auto stride_steps = static_cast<long>(std::llround(o.sample_stride / o.dt));
  const auto n_samples = static_cast<std::size_t>(std::max(1.0, std::floor(o.t_collect / o.sample_stride + 1e-9)));

  TrajectoryArchive a;
  a.n_atoms = p.n_atoms;
  a.n_traj = o.n_traj;
  a.times.resize(n_samples);
  a.samples.resize(n_samples * o.n_traj);
  a.meta = {o.dt, o.t_relax, o.t_collect, o.sample_stride, o.seed, o.n_traj < 100,
            "vacuum field (Var q = Var p = 1/4); all atoms ground, sigma_x, sigma_y uniform in {+-1}"};

  for (std::size_t k = 0; k < n_samples; ++k) {
    if (k > 0)
      for (long s = 0; s < stride_steps; ++s) step(e, p, o.dt, so);
    a.times[k] = e.t;
    for (std::size_t i = 0; i < o.n_traj; ++i) a.samples[i * n_samples + k] = e.points[i];
  }
  return a;
}

void write_archive(std::ostream& os, const TrajectoryArchive& a) {
  os << "# n_atoms=" << a.n_atoms << "\n";
  os << "# n_traj=" << a.n_traj << "\n";
  os << "# n_times=" << a.n_times() << "\n";
  os << std::setprecision(17);
  os << "# dt=" << a.meta.dt << "\n";
  os << "# t_relax=" << a.meta.t_relax << "\n";
  os << "# t_collect=" << a.meta.t_collect << "\n";
  os << "# sample_stride=" << a.meta.sample_stride << "\n";
  os << "# seed=" << a.meta.seed << "\n";
  os << "# initial_condition=" << a.meta.initial_condition << "\n";
  os << "t,trajectory,q,p,sx,sy,sz\n";
  for (std::size_t i = 0; i < a.n_traj; ++i) {
    for (std::size_t k = 0; k < a.n_times(); ++k) {
      const auto& x = a.at(i, k);
      os << a.times[k] << ',' << i << ',' << x[kQ] << ',' << x[kP] << ',' << x[kSx] << ',' << x[kSy] << ','
         << x[kSz] << '\n';
    }
  }
}

TrajectoryArchive read_archive(std::istream& is) {
  TrajectoryArchive a;
  std::size_t n_times = 0;
  std::string line;
  auto value_of = [](const std::string& l) { return l.substr(l.find('=') + 1); };
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      const std::string key = body.substr(0, body.find('='));
      const std::string val = value_of(body);
      if (key == "n_atoms") a.n_atoms = std::stoi(val);
      else if (key == "n_traj") a.n_traj = std::stoul(val);
      else if (key == "n_times") n_times = std::stoul(val);
      else if (key == "dt") a.meta.dt = std::stod(val);
      else if (key == "t_relax") a.meta.t_relax = std::stod(val);
      else if (key == "t_collect") a.meta.t_collect = std::stod(val);
      else if (key == "sample_stride") a.meta.sample_stride = std::stod(val);
      else if (key == "seed") a.meta.seed = std::stoull(val);
      else if (key == "initial_condition") a.meta.initial_condition = val;
      continue;
    }
    if (line.rfind("t,", 0) == 0) break;
  }
  if (a.n_traj == 0 || n_times == 0) throw Error("archive header missing n_traj/n_times");
  a.meta.low_trajectory_count = a.n_traj < 100;
  a.times.resize(n_times);
  a.samples.resize(a.n_traj * n_times);
  for (std::size_t i = 0; i < a.n_traj; ++i) {
    for (std::size_t k = 0; k < n_times; ++k) {
      if (!std::getline(is, line)) throw Error("archive truncated");
      std::istringstream row(line);
      std::string cell;
      double vals[7];
      for (double& v : vals) {
        std::getline(row, cell, ',');
        v = std::stod(cell);
      }
      if (static_cast<std::size_t>(vals[1]) != i) throw Error("archive rows out of order");
      a.times[k] = vals[0];
      a.samples[i * n_times + k] << vals[2], vals[3], vals[4], vals[5], vals[6];
    }
  }
  return a;
}

}  // namespace crossover::langevin
