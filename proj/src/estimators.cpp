#include "crossover/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "crossover/errors.hpp"

namespace crossover::estimators {

using langevin::kP;
using langevin::kQ;
using langevin::kSx;
using langevin::kSy;
using langevin::kSz;
using langevin::TrajectoryArchive;

namespace {

// Leave-one-out standard error of a statistic of per-trajectory means.
template <class Stat>
double jackknife(std::size_t n, Stat&& leave_out) {
  std::vector<double> theta(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = leave_out(i);
    mean += theta[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double t : theta) ss += (t - mean) * (t - mean);
  return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

void require_archive(const TrajectoryArchive& a) {
  if (a.n_traj < 2 || a.n_times() == 0 || a.samples.size() != a.n_traj * a.n_times())
    throw InvalidParams("archive needs at least two trajectories and one sample time");
}

}  // namespace

FieldMoments field_moments(const TrajectoryArchive& a) {
  require_archive(a);
  const std::size_t n = a.n_traj;
  const std::size_t nt = a.n_times();
  std::vector<double> u(n), v(n);
  double su = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      const auto& x = a.at(i, k);
      const double intensity = x[kQ] * x[kQ] + x[kP] * x[kP];
      s1 += intensity;
      s2 += intensity * intensity;
    }
    u[i] = s1 / static_cast<double>(nt);
    v[i] = s2 / static_cast<double>(nt);
    su += u[i];
    sv += v[i];
  }
  const double dn = static_cast<double>(n);
  auto photons_of = [](double uu) { return uu - 0.5; };
  auto photons2_of = [](double uu, double vv) { return vv - 2.0 * uu + 0.5; };
  auto g2_of = [&](double uu, double vv) {
    const double ph = photons_of(uu);
    return ph > 0.0 ? photons2_of(uu, vv) / (ph * ph) : std::numeric_limits<double>::quiet_NaN();
  };

  FieldMoments m;
  const double mu = su / dn, mv = sv / dn;
  m.photons = photons_of(mu);
  m.photons2 = photons2_of(mu, mv);
  m.g2 = g2_of(mu, mv);
  auto loo_u = [&](std::size_t i) { return (su - u[i]) / (dn - 1.0); };
  auto loo_v = [&](std::size_t i) { return (sv - v[i]) / (dn - 1.0); };
  m.photons_err = jackknife(n, [&](std::size_t i) { return photons_of(loo_u(i)); });
  m.photons2_err = jackknife(n, [&](std::size_t i) { return photons2_of(loo_u(i), loo_v(i)); });
  m.g2_err = std::isnan(m.g2) ? std::numeric_limits<double>::quiet_NaN()
                              : jackknife(n, [&](std::size_t i) { return g2_of(loo_u(i), loo_v(i)); });

  if (m.photons < -3.0 * m.photons_err) {
    std::ostringstream os;
    os << "photon estimate " << m.photons << " +- " << m.photons_err << " is negative beyond its error";
    throw BelowNoiseFloor(os.str());
  }
  return m;
}

SpinMoments spin_moments(const TrajectoryArchive& a, int n_atoms) {
  require_archive(a);
  if (n_atoms < 2) throw InvalidParams("pair correlation needs at least two atoms");
  const std::size_t n = a.n_traj;
  const std::size_t nt = a.n_times();
  std::vector<double> t(n), z(n);
  double st = 0.0, sz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      const auto& x = a.at(i, k);
      s1 += x[kSx] * x[kSx] + x[kSy] * x[kSy];
      s2 += x[kSz];
    }
    t[i] = s1 / static_cast<double>(nt);
    z[i] = s2 / static_cast<double>(nt);
    st += t[i];
    sz += z[i];
  }
  const double dn = static_cast<double>(n);
  const double big_n = n_atoms;
  auto corr_of = [big_n](double tt, double zz) {
    const double collective = tt + zz / (2.0 * big_n);  // <S^+ S^->
    return (big_n * big_n * collective - big_n * (1.0 + zz) / 2.0) / (big_n * (big_n - 1.0));
  };

  SpinMoments s;
  s.sz = sz / dn;
  s.spin_corr = Complex(corr_of(st / dn, sz / dn), 0.0);
  s.sz_err = jackknife(n, [&](std::size_t i) { return (sz - z[i]) / (dn - 1.0); });
  s.spin_corr_err =
      jackknife(n, [&](std::size_t i) { return corr_of((st - t[i]) / (dn - 1.0), (sz - z[i]) / (dn - 1.0)); });
  return s;
}

ObservableRecord observables(const TrajectoryArchive& a) {
  const FieldMoments f = field_moments(a);
  const SpinMoments s = spin_moments(a, a.n_atoms);
  ObservableRecord r;
  r.sz = s.sz;
  r.sz_err = s.sz_err;
  r.spin_corr = s.spin_corr;
  r.spin_corr_err = s.spin_corr_err;
  r.photons = f.photons;
  r.photons_err = f.photons_err;
  r.photons2 = f.photons2;
  r.photons2_err = f.photons2_err;
  r.g2 = f.g2;
  r.g2_err = f.g2_err;
  return r;
}

CorrelationSeries g1_correlation(const TrajectoryArchive& a, double tau_max, std::size_t n_bootstrap,
                                 std::uint64_t seed) {
  require_archive(a);
  const std::size_t nt = a.n_times();
  if (nt < 2) throw InvalidParams("g1 correlation needs at least two sample times");
  const double stride = a.times[1] - a.times[0];
  const double span = a.times.back() - a.times.front();
  if (!(tau_max > 0.0) || tau_max > span * (1.0 + 1e-12)) throw InvalidParams("tau_max exceeds the archive span");
  const auto n_lags = static_cast<std::size_t>(std::floor(tau_max / stride + 1e-9)) + 1;

  std::size_t len = 1;
  while (len < 2 * nt) len <<= 1;

  Eigen::FFT<double> fft;
  std::vector<Complex> signal(len), spectrum(len), corr(len);
  // Per-trajectory correlation, trajectory-major.
  std::vector<Complex> per(a.n_traj * n_lags);
  for (std::size_t i = 0; i < a.n_traj; ++i) {
    std::fill(signal.begin(), signal.end(), Complex(0.0, 0.0));
    for (std::size_t k = 0; k < nt; ++k) {
      const auto& x = a.at(i, k);
      signal[k] = Complex(x[kQ], -x[kP]);
    }
    fft.fwd(spectrum, signal);
    for (auto& s : spectrum) s = Complex(std::norm(s), 0.0);
    fft.inv(corr, spectrum);
    // corr[j] = sum_k a(k + j) a*(k); the wanted product is its conjugate.
    for (std::size_t j = 0; j < n_lags; ++j)
      per[i * n_lags + j] = std::conj(corr[j]) / static_cast<double>(nt - j);
  }

  CorrelationSeries c;
  c.tau.resize(n_lags);
  c.value.assign(n_lags, Complex(0.0, 0.0));
  c.stderr_abs.assign(n_lags, 0.0);
  const double dn = static_cast<double>(a.n_traj);
  for (std::size_t j = 0; j < n_lags; ++j) c.tau[j] = stride * static_cast<double>(j);
  for (std::size_t i = 0; i < a.n_traj; ++i)
    for (std::size_t j = 0; j < n_lags; ++j) c.value[j] += per[i * n_lags + j];
  for (auto& v : c.value) v /= dn;

  if (n_bootstrap > 1) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, a.n_traj - 1);
    std::vector<double> s1(n_lags, 0.0), s2(n_lags, 0.0);
    std::vector<Complex> acc(n_lags);
    for (std::size_t b = 0; b < n_bootstrap; ++b) {
      std::fill(acc.begin(), acc.end(), Complex(0.0, 0.0));
      for (std::size_t r = 0; r < a.n_traj; ++r) {
        const std::size_t i = pick(rng);
        for (std::size_t j = 0; j < n_lags; ++j) acc[j] += per[i * n_lags + j];
      }
      for (std::size_t j = 0; j < n_lags; ++j) {
        const double m = std::abs(acc[j]) / dn;
        s1[j] += m;
        s2[j] += m * m;
      }
    }
    const double nb = static_cast<double>(n_bootstrap);
    for (std::size_t j = 0; j < n_lags; ++j) {
      const double mean = s1[j] / nb;
      c.stderr_abs[j] = std::sqrt(std::max(0.0, s2[j] / nb - mean * mean) * nb / (nb - 1.0));
    }
  }
  return c;
}

LinewidthFit fit_linewidth(const CorrelationSeries& c) {
  const std::size_t n = c.value.size();
  if (n < 3 || c.tau.size() != n) throw WindowTooShort("correlation series too short to fit");
  const double c0 = std::abs(c.value[0]);
  if (!(c0 > 0.0)) throw WindowTooShort("correlation vanishes at zero delay");

  std::size_t first = 0;
  while (first < n && std::abs(c.value[first]) > 0.8 * c0) ++first;
  std::size_t last = first;
  while (last < n && std::abs(c.value[last]) >= 0.2 * c0) ++last;
  if (last == n) throw WindowTooShort("correlation does not decay below 0.2 of its initial value");
  if (last - first < 3) throw WindowTooShort("fewer than three points inside the 0.8 to 0.2 decay window");

  const bool weighted = c.stderr_abs.size() == n &&
                        std::all_of(c.stderr_abs.begin() + static_cast<long>(first),
                                    c.stderr_abs.begin() + static_cast<long>(last), [](double e) { return e > 0.0; });
  const std::size_t m = last - first;
  Eigen::VectorXd x(m), y(m), w(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double mag = std::abs(c.value[first + k]);
    x[k] = c.tau[first + k];
    y[k] = std::log(mag);
    const double sigma = weighted ? c.stderr_abs[first + k] / mag : 1.0;
    w[k] = 1.0 / (sigma * sigma);
  }
  const double s = w.sum(), sx = w.dot(x), sy = w.dot(y);
  const double sxx = w.dot(x.cwiseProduct(x)), sxy = w.dot(x.cwiseProduct(y));
  const double det = s * sxx - sx * sx;
  const double slope = (s * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / s;

  const Eigen::VectorXd resid = (y.array() - intercept - slope * x.array()).matrix();
  const double chi2 = w.dot(resid.cwiseProduct(resid));
  const double dof = static_cast<double>(m) - 2.0;
  double slope_var = s / det;
  if (weighted) {
    slope_var *= std::max(1.0, dof > 0.0 ? chi2 / dof : 1.0);
  } else {
    slope_var *= dof > 0.0 ? chi2 / dof : 0.0;
  }

  LinewidthFit f;
  f.linewidth = -2.0 * slope;
  f.linewidth_err = 2.0 * std::sqrt(slope_var);
  f.n_points = m;
  double rel2 = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double model = std::exp(intercept + slope * x[k]);
    const double r = (std::abs(c.value[first + k]) - model) / model;
    rel2 += r * r;
  }
  f.rms_residual = std::sqrt(rel2 / static_cast<double>(m));
  f.fit_quality_warning = f.rms_residual > 0.05 || !(f.linewidth > 0.0);
  return f;
}

TrendTest trend(const TrajectoryArchive& a, bool use_sz) {
  require_archive(a);
  const std::size_t nt = a.n_times();
  if (nt < 3) throw InvalidParams("trend test needs at least three sample times");
  double tbar = 0.0;
  for (double t : a.times) tbar += t;
  tbar /= static_cast<double>(nt);
  double stt = 0.0;
  for (double t : a.times) stt += (t - tbar) * (t - tbar);

  std::vector<double> slopes(a.n_traj);
  for (std::size_t i = 0; i < a.n_traj; ++i) {
    double sty = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      const auto& x = a.at(i, k);
      const double obs = use_sz ? x[kSz] : x[kQ] * x[kQ] + x[kP] * x[kP];
      sty += (a.times[k] - tbar) * obs;
    }
    slopes[i] = sty / stt;
  }
  const double dn = static_cast<double>(a.n_traj);
  double mean = 0.0;
  for (double v : slopes) mean += v;
  mean /= dn;
  double ss = 0.0;
  for (double v : slopes) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (dn - 1.0) / dn)};
}

}  // namespace crossover::estimators
