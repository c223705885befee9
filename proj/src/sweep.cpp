#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "crossover/bruteforce.hpp"
#include "crossover/cli.hpp"
#include "crossover/errors.hpp"
#include "crossover/estimators.hpp"
#include "crossover/langevin.hpp"
#include "crossover/meanfield.hpp"
#include "crossover/phase_diffusion.hpp"
#include "crossover/su4_exact.hpp"

namespace crossover::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ObservableRecord nan_record() {
  ObservableRecord r;
  r.sz = r.sz_err = r.spin_corr_err = r.photons = r.photons_err = r.photons2 = r.photons2_err = r.g2 = r.g2_err = kNaN;
  r.spin_corr = {kNaN, kNaN};
  return r;
}

// Delay window long enough for the predicted line to decay well below 0.2.
double predicted_linewidth(const SystemParams& p) {
  const auto pd = phase_diffusion::linewidth(p);
  return pd.valid ? pd.linewidth : p.kappa;
}

void attach_fit(ObservableRecord& r, std::vector<std::string>& flags, const estimators::CorrelationSeries& c) {
  try {
    const auto fit = estimators::fit_linewidth(c);
    r.linewidth = fit.linewidth;
    r.linewidth_err = fit.linewidth_err;
    if (fit.fit_quality_warning) flags.emplace_back("FIT_QUALITY");
  } catch (const WindowTooShort&) {
    flags.emplace_back("WINDOW_TOO_SHORT");
  }
}

void eval_analytic(const SystemParams& p, SweepRow& row) {
  const auto mf = meanfield::steady_state_analytic(p);
  const auto pd = phase_diffusion::linewidth(p);
  ObservableRecord& r = row.obs;
  r.g2 = r.g2_err = r.photons2 = kNaN;
  if (mf.above_threshold) {
    const double detune = mf.omega - p.omega_c;
    const double n_omega = p.n_atoms * p.coupling;
    r.sz = mf.s_z;
    r.photons = mf.photons;
    r.spin_corr = mf.photons * (p.kappa * p.kappa + 4.0 * detune * detune) / (n_omega * n_omega);
  } else {
    r.sz = bare_inversion(p);
    r.photons = 0.0;
    r.spin_corr = 0.0;
    row.flags.emplace_back("BELOW_THRESHOLD");
  }
  if (pd.valid) {
    r.linewidth = pd.linewidth;
    r.linewidth_err = 0.0;
    if (pd.off_optimum) row.flags.emplace_back("OFF_OPTIMUM");
  }
}

void eval_meanfield(const RunConfig& c, const SystemParams& p, SweepRow& row) {
  const langevin::RunOptions auto_opts = langevin::resolve_options(p, {});
  const double t_end = c.numeric.t_relax > 0.0 ? c.numeric.t_relax : auto_opts.t_relax;
  const double dt = c.numeric.dt > 0.0 ? c.numeric.dt : meanfield::max_step(p);
  // Small seed coherence: the vacuum is itself a (possibly unstable) fixed point.
  meanfield::MeanFieldState init;
  init.s_minus = 1e-3;
  const auto n_steps = static_cast<int>(std::ceil(t_end / dt));
  const auto samples = meanfield::integrate(p, init, t_end, t_end / n_steps, n_steps);
  const auto& s = samples.back().state;
  row.obs.sz = s.s_z;
  row.obs.photons = std::norm(s.a0);
  row.obs.spin_corr = std::norm(s.s_minus);
  row.obs.photons2 = row.obs.g2 = row.obs.g2_err = kNaN;
  if (!meanfield::steady_state_analytic(p).above_threshold) row.flags.emplace_back("BELOW_THRESHOLD");
}

void eval_langevin(const RunConfig& c, const SystemParams& p, int threads, SweepRow& row) {
  langevin::RunOptions o;
  o.n_traj = c.numeric.n_traj;
  o.dt = c.numeric.dt;
  o.t_relax = c.numeric.t_relax;
  o.seed = c.seed;
  o.threads = threads;
  const double width = predicted_linewidth(p);
  o.t_collect = c.numeric.t_collect > 0.0
                    ? c.numeric.t_collect
                    : std::max({20.0 / (p.repump + p.gamma), 20.0 / p.kappa, 8.0 / width});
  const auto archive = langevin::run(p, o);
  if (archive.meta.low_trajectory_count) row.flags.emplace_back("LOW_TRAJECTORY_COUNT");
  try {
    row.obs = estimators::observables(archive);
  } catch (const BelowNoiseFloor&) {
    row.obs = nan_record();
    row.flags.emplace_back("BELOW_NOISE_FLOOR");
    return;
  }
  const double span = archive.times.back() - archive.times.front();
  const double tau_max = c.numeric.tau_max > 0.0 ? std::min(c.numeric.tau_max, span) : std::min(0.5 * span, 4.0 / width);
  attach_fit(row.obs, row.flags, estimators::g1_correlation(archive, tau_max));
}

void eval_su4_det(const RunConfig& c, const SystemParams& p, SweepRow& row) {
  const su4::Basis basis(p.n_atoms);
  su4::SteadyOptions so;
  so.cutoff = c.numeric.cutoff;
  so.dt = c.numeric.dt;
  const auto ss = su4::steady_state_det(basis, p, so);
  row.obs = ss.obs;
  if (ss.obs.photons <= 0.0) return;
  const double tau_max = c.numeric.tau_max > 0.0 ? c.numeric.tau_max : 4.0 / predicted_linewidth(p);
  try {
    const auto reg = su4::linewidth_regression(basis, p, ss.state, tau_max, tau_max / 200.0, so.dt);
    row.obs.linewidth = reg.fit.linewidth;
    row.obs.linewidth_err = reg.fit.linewidth_err;
    if (reg.fit.fit_quality_warning) row.flags.emplace_back("FIT_QUALITY");
  } catch (const WindowTooShort&) {
    row.flags.emplace_back("WINDOW_TOO_SHORT");
  }
}

void eval_su4_mc(const RunConfig& c, const SystemParams& p, int threads, SweepRow& row) {
  const su4::Basis basis(p.n_atoms);
  const auto auto_opts = langevin::resolve_options(p, {});
  const double t_relax = c.numeric.t_relax > 0.0 ? c.numeric.t_relax : auto_opts.t_relax;
  const double t_collect =
      c.numeric.t_collect > 0.0 ? c.numeric.t_collect : std::max(20.0 / (p.repump + p.gamma), 20.0 / p.kappa);
  su4::MCOptions mo;
  mo.n_traj = c.numeric.n_traj;
  mo.t_end = t_relax + t_collect;
  mo.sample_every = mo.t_end / 400.0;
  mo.average_from = t_relax;
  mo.dt = c.numeric.dt;
  mo.seed = c.seed;
  mo.threads = threads;
  const auto res = su4::run_mc(basis, p, mo);
  row.obs = *res.time_averaged;
  if (c.numeric.n_traj < 100) row.flags.emplace_back("LOW_TRAJECTORY_COUNT");
}

void eval_bruteforce(const RunConfig& c, const SystemParams& p, SweepRow& row) {
  const int cutoff = c.numeric.cutoff > 0 ? c.numeric.cutoff : su4::default_cutoff(p);
  const auto g = bruteforce::build_generator(p, cutoff);
  const double rate = std::max({p.kappa * cutoff, p.n_atoms * p.coupling * std::sqrt(cutoff + 1.0),
                                p.n_atoms * (p.repump + p.gamma + p.t2_inv), std::abs(p.detuning()) * p.n_atoms, 1.0});
  const double dt = c.numeric.dt > 0.0 ? c.numeric.dt : 0.1 / rate;
  const auto ss = bruteforce::steady_state(g, dt);
  row.obs = bruteforce::observables(g, ss);
  if (row.obs.photons <= 0.0) return;
  const double tau_max = c.numeric.tau_max > 0.0 ? c.numeric.tau_max : 4.0 / predicted_linewidth(p);
  attach_fit(row.obs, row.flags, bruteforce::two_time_correlation(g, ss, tau_max, tau_max / 200.0, dt));
}

std::string_view linewidth_method(Method m) {
  switch (m) {
    case Method::analytic: return "phase-diffusion formula";
    case Method::langevin: return "exponential fit of the sampled field correlation E[a*(t+tau) a(t)]";
    case Method::su4_det:
    case Method::bruteforce: return "quantum regression on the master equation, exponential fit";
    default: return "not computed";
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string join_flags(const std::vector<std::string>& f) {
  std::string s;
  for (const auto& x : f) {
    if (!s.empty()) s += ';';
    s += x;
  }
  return s;
}

void write_metadata(std::ostream& os, const RunConfig& c, std::string_view prefix = "") {
  os << "# " << prefix << "schema_version=" << kSchemaVersion << "\n";
  os << "# " << prefix << "code_version=" << kCodeVersion << "\n";
  os << "# " << prefix << "frame=rotating at omega_c\n";
  os << "# " << prefix << "linewidth_convention=Lorentzian FWHM, angular units (|C(tau)| ~ exp(-linewidth tau/2))\n";
  os << "# " << prefix << "linewidth_method=" << linewidth_method(c.method) << "\n";
  if (c.method == Method::langevin)
    os << "# " << prefix
       << "initial_condition=vacuum field (Var q = Var p = 1/4), all atoms ground, sigma_x and sigma_y uniform in {+-1}\n";
  else if (c.method == Method::su4_mc || c.method == Method::su4_det || c.method == Method::bruteforce)
    os << "# " << prefix << "initial_condition=all atoms ground, field vacuum\n";
  os << "# " << prefix << "config.begin\n";
  std::istringstream cfg(serialize_config(c));
  std::string line;
  while (std::getline(cfg, line)) os << "# " << prefix << line << "\n";
  os << "# " << prefix << "config.end\n";
}

}  // namespace

SweepResult run(const RunConfig& c, const RunOptions& opts) {
  SweepResult result;
  result.config = c;
  const std::vector<double> grid = c.sweep ? sweep_grid(*c.sweep) : std::vector<double>{c.params.repump};
  for (double v : grid) {
    SweepRow row;
    row.sweep_value = v;
    row.params = point_params(c, v);
    const SystemParams& p = row.params;
    validate(p);
    const auto sens = meanfield::sensitivity(p);
    row.d_omega_d_omega_c = sens.d_omega_c;
    row.d_omega_d_omega_a = sens.d_omega_a;
    try {
      switch (c.method) {
        case Method::analytic: eval_analytic(p, row); break;
        case Method::meanfield: eval_meanfield(c, p, row); break;
        case Method::langevin: eval_langevin(c, p, opts.threads, row); break;
        case Method::su4_det: eval_su4_det(c, p, row); break;
        case Method::su4_mc: eval_su4_mc(c, p, opts.threads, row); break;
        case Method::bruteforce: eval_bruteforce(c, p, row); break;
      }
    } catch (const NonPositiveDiffusion&) {
      row.obs = nan_record();
      row.failed = true;
      row.flags.emplace_back("NON_POSITIVE_DIFFUSION");
    } catch (const CapacityError&) {
      throw;
    } catch (const CutoffOverflow&) {
      throw;
    } catch (const Error& e) {
      row.obs = nan_record();
      row.failed = true;
      row.flags.emplace_back("NUMERICAL_FAILURE");
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

int exit_status(const SweepResult& r) {
  const bool all_failed =
      !r.rows.empty() && std::all_of(r.rows.begin(), r.rows.end(), [](const SweepRow& x) { return x.failed; });
  return all_failed ? 2 : 0;
}

void write_csv(std::ostream& os, const SweepResult& r) {
  write_metadata(os, r.config);
  os << "sweep_value,w,xi,kappa,coupling,sz,sz_err,spin_corr,spin_corr_err,photons,photons_err,g2,g2_err,"
        "linewidth,linewidth_err,w_over_wopt,photons_scaled,linewidth_over_kappa,d_omega_d_omega_c,"
        "d_omega_d_omega_a,method,flags\n";
  for (const auto& row : r.rows) {
    const auto d = derive(row.params);
    const auto& o = row.obs;
    const double lw = o.linewidth.value_or(kNaN);
    os << fmt(row.sweep_value) << ',' << fmt(row.params.repump) << ',' << fmt(d.xi) << ',' << fmt(row.params.kappa)
       << ',' << fmt(row.params.coupling) << ',' << fmt(o.sz) << ',' << fmt(o.sz_err) << ','
       << fmt(o.spin_corr.real()) << ',' << fmt(o.spin_corr_err) << ',' << fmt(o.photons) << ','
       << fmt(o.photons_err) << ',' << fmt(o.g2) << ',' << fmt(o.g2_err) << ',' << fmt(lw) << ','
       << fmt(o.linewidth_err.value_or(kNaN)) << ',' << fmt(d.w_opt > 0.0 ? row.params.repump / d.w_opt : kNaN)
       << ',' << fmt(o.photons / d.photons_opt) << ',' << fmt(lw / row.params.kappa) << ','
       << fmt(row.d_omega_d_omega_c) << ',' << fmt(row.d_omega_d_omega_a) << ',' << to_string(r.config.method)
       << ',' << join_flags(row.flags) << "\n";
  }
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line, cfg;
  bool in_cfg = false;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(l);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      if (body == "config.begin") in_cfg = true;
      else if (body == "config.end") in_cfg = false;
      else if (in_cfg) cfg += body + "\n";
      continue;
    }
    if (line.empty()) continue;
    if (t.header.empty()) t.header = split(line);
    else t.rows.push_back(split(line));
  }
  if (cfg.empty()) throw ConfigError("CSV has no configuration metadata");
  std::istringstream cs(cfg);
  t.config = parse_config(cs);
  return t;
}

RunConfig config_from_csv(std::istream& is) { return read_csv(is).config; }

void write_comparison(std::ostream& os, const SweepResult& a, const SweepResult& b) {
  if (a.rows.size() != b.rows.size()) throw ConfigError("compared sweeps have different grid sizes");
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const double x = a.rows[i].sweep_value, y = b.rows[i].sweep_value;
    if (std::abs(x - y) > 1e-12 * std::max({1.0, std::abs(x), std::abs(y)}))
      throw ConfigError("compared sweeps have different grids");
  }
  write_metadata(os, a.config, "a.");
  write_metadata(os, b.config, "b.");
  os << "sweep_value";
  for (const char* name : {"sz", "spin_corr", "photons", "g2", "linewidth"}) os << ',' << name << "_a," << name << "_b," << name << "_ratio";
  os << ",flags_a,flags_b\n";
  auto values = [](const ObservableRecord& o) {
    return std::array<double, 5>{o.sz, o.spin_corr.real(), o.photons, o.g2, o.linewidth.value_or(kNaN)};
  };
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto va = values(a.rows[i].obs), vb = values(b.rows[i].obs);
    os << fmt(a.rows[i].sweep_value);
    for (std::size_t k = 0; k < va.size(); ++k) {
      const double ratio = va[k] == vb[k] ? 1.0 : va[k] / vb[k];
      os << ',' << fmt(va[k]) << ',' << fmt(vb[k]) << ',' << fmt(ratio);
    }
    os << ',' << join_flags(a.rows[i].flags) << ',' << join_flags(b.rows[i].flags) << "\n";
  }
}

}  // namespace crossover::cli
