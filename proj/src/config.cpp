#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "crossover/cli.hpp"
#include "crossover/errors.hpp"

namespace crossover::cli {

namespace pt = boost::property_tree;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::analytic: return "analytic";
    case Method::meanfield: return "meanfield";
    case Method::langevin: return "langevin";
    case Method::su4_det: return "su4-det";
    case Method::su4_mc: return "su4-mc";
    case Method::bruteforce: return "bruteforce";
  }
  return "unknown";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::analytic, Method::meanfield, Method::langevin, Method::su4_det, Method::su4_mc,
                   Method::bruteforce})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

bool RunConfig::operator==(const RunConfig& o) const {
  const auto& a = params;
  const auto& b = o.params;
  return a.n_atoms == b.n_atoms && a.coupling == b.coupling && a.kappa == b.kappa && a.gamma == b.gamma &&
         a.repump == b.repump && a.t2_inv == b.t2_inv && a.omega_a == b.omega_a && a.omega_c == b.omega_c &&
         method == o.method && sweep == o.sweep && numeric == o.numeric && seed == o.seed && output == o.output &&
         label == o.label && note == o.note;
}

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"params", {"n_atoms", "coupling", "kappa", "gamma", "repump", "t2_inv", "omega_a", "omega_c"}},
      {"run", {"method", "seed", "output", "label", "note"}},
      {"sweep", {"variable", "min", "max", "points", "spacing", "repump_at_opt"}},
      {"numeric", {"dt", "t_relax", "t_collect", "n_traj", "cutoff", "tau_max"}},
  };
  return keys;
}

template <class T>
T get_value(const pt::ptree& section, const std::string& where, const std::string& key) {
  const std::string raw = section.get<std::string>(key);
  std::istringstream is(raw);
  T v{};
  is >> v;
  if (is.fail() || !(is >> std::ws).eof()) throw ConfigError("cannot parse " + where + "." + key + " = '" + raw + "'");
  return v;
}

bool parse_bool(const std::string& raw, const std::string& key) {
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw ConfigError("cannot parse boolean " + key + " = '" + raw + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  const auto& allowed = allowed_keys();
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) throw ConfigError("unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
  }

  RunConfig c;
  const auto params = tree.get_child_optional("params");
  if (!params) throw ConfigError("missing [params] section");
  const auto& pr = *params;
  auto require = [&](const std::string& key) {
    if (!pr.get_child_optional(key)) throw ConfigError("missing params." + key);
  };
  require("n_atoms");
  require("coupling");
  require("kappa");
  c.params.n_atoms = get_value<int>(pr, "params", "n_atoms");
  c.params.coupling = get_value<double>(pr, "params", "coupling");
  c.params.kappa = get_value<double>(pr, "params", "kappa");
  if (pr.get_child_optional("gamma")) c.params.gamma = get_value<double>(pr, "params", "gamma");
  if (pr.get_child_optional("repump")) c.params.repump = get_value<double>(pr, "params", "repump");
  if (pr.get_child_optional("t2_inv")) c.params.t2_inv = get_value<double>(pr, "params", "t2_inv");
  if (pr.get_child_optional("omega_a")) c.params.omega_a = get_value<double>(pr, "params", "omega_a");
  if (pr.get_child_optional("omega_c")) c.params.omega_c = get_value<double>(pr, "params", "omega_c");

  if (const auto run = tree.get_child_optional("run")) {
    if (run->get_child_optional("method")) c.method = parse_method(run->get<std::string>("method"));
    if (run->get_child_optional("seed")) c.seed = get_value<std::uint64_t>(*run, "run", "seed");
    c.output = run->get<std::string>("output", "");
    c.label = run->get<std::string>("label", "");
    c.note = run->get<std::string>("note", "");
  }

  if (const auto sw = tree.get_child_optional("sweep")) {
    SweepSpec s;
    const std::string var = sw->get<std::string>("variable", "w");
    if (var == "w") s.variable = SweepVariable::w;
    else if (var == "xi") s.variable = SweepVariable::xi;
    else throw ConfigError("sweep.variable must be w or xi");
    for (const char* key : {"min", "max", "points"})
      if (!sw->get_child_optional(key)) throw ConfigError(std::string("missing sweep.") + key);
    s.min = get_value<double>(*sw, "sweep", "min");
    s.max = get_value<double>(*sw, "sweep", "max");
    s.points = get_value<int>(*sw, "sweep", "points");
    const std::string spacing = sw->get<std::string>("spacing", "linear");
    if (spacing == "linear") s.spacing = Spacing::linear;
    else if (spacing == "log") s.spacing = Spacing::log;
    else throw ConfigError("sweep.spacing must be linear or log");
    if (sw->get_child_optional("repump_at_opt"))
      s.repump_at_opt = parse_bool(sw->get<std::string>("repump_at_opt"), "sweep.repump_at_opt");
    sweep_grid(s);
    c.sweep = s;
  }

  if (const auto nu = tree.get_child_optional("numeric")) {
    auto& n = c.numeric;
    if (nu->get_child_optional("dt")) n.dt = get_value<double>(*nu, "numeric", "dt");
    if (nu->get_child_optional("t_relax")) n.t_relax = get_value<double>(*nu, "numeric", "t_relax");
    if (nu->get_child_optional("t_collect")) n.t_collect = get_value<double>(*nu, "numeric", "t_collect");
    if (nu->get_child_optional("n_traj")) n.n_traj = get_value<std::size_t>(*nu, "numeric", "n_traj");
    if (nu->get_child_optional("cutoff")) n.cutoff = get_value<int>(*nu, "numeric", "cutoff");
    if (nu->get_child_optional("tau_max")) n.tau_max = get_value<double>(*nu, "numeric", "tau_max");
  }

  if ((c.method == Method::langevin || c.method == Method::su4_mc) && c.numeric.n_traj == 0)
    throw ConfigError("numeric.n_traj is required for stochastic methods");
  if (!c.sweep && !tree.get_child_optional("params.repump"))
    throw ConfigError("params.repump is required without a sweep over w");
  try {
    validate(point_params(c, c.sweep ? sweep_grid(*c.sweep).front() : c.params.repump));
  } catch (const InvalidParams& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  const auto& p = c.params;
  os << "[params]\n"
     << "n_atoms=" << p.n_atoms << "\n"
     << "coupling=" << format_double(p.coupling) << "\n"
     << "kappa=" << format_double(p.kappa) << "\n"
     << "gamma=" << format_double(p.gamma) << "\n"
     << "repump=" << format_double(p.repump) << "\n"
     << "t2_inv=" << format_double(p.t2_inv) << "\n"
     << "omega_a=" << format_double(p.omega_a) << "\n"
     << "omega_c=" << format_double(p.omega_c) << "\n";
  os << "[run]\n"
     << "method=" << to_string(c.method) << "\n"
     << "seed=" << c.seed << "\n";
  if (!c.output.empty()) os << "output=" << c.output << "\n";
  if (!c.label.empty()) os << "label=" << c.label << "\n";
  if (!c.note.empty()) os << "note=" << c.note << "\n";
  if (c.sweep) {
    const auto& s = *c.sweep;
    os << "[sweep]\n"
       << "variable=" << (s.variable == SweepVariable::w ? "w" : "xi") << "\n"
       << "min=" << format_double(s.min) << "\n"
       << "max=" << format_double(s.max) << "\n"
       << "points=" << s.points << "\n"
       << "spacing=" << (s.spacing == Spacing::linear ? "linear" : "log") << "\n"
       << "repump_at_opt=" << (s.repump_at_opt ? "true" : "false") << "\n";
  }
  const auto& n = c.numeric;
  os << "[numeric]\n"
     << "dt=" << format_double(n.dt) << "\n"
     << "t_relax=" << format_double(n.t_relax) << "\n"
     << "t_collect=" << format_double(n.t_collect) << "\n"
     << "n_traj=" << n.n_traj << "\n"
     << "cutoff=" << n.cutoff << "\n"
     << "tau_max=" << format_double(n.tau_max) << "\n";
  return os.str();
}

std::vector<double> sweep_grid(const SweepSpec& s) {
  if (s.points < 1) throw ConfigError("sweep.points must be >= 1");
  if (!std::isfinite(s.min) || !std::isfinite(s.max) || s.max < s.min) throw ConfigError("sweep range must satisfy min <= max");
  if (s.spacing == Spacing::log && !(s.min > 0.0)) throw ConfigError("log sweep needs min > 0");
  if (s.variable == SweepVariable::xi && !(s.min > 0.0)) throw ConfigError("xi sweep needs min > 0");
  std::vector<double> g(static_cast<std::size_t>(s.points));
  if (s.points == 1) {
    g[0] = s.min;
    return g;
  }
  for (int i = 0; i < s.points; ++i) {
    const double f = static_cast<double>(i) / (s.points - 1);
    g[static_cast<std::size_t>(i)] =
        s.spacing == Spacing::linear ? s.min + f * (s.max - s.min) : s.min * std::pow(s.max / s.min, f);
  }
  g.back() = s.max;
  return g;
}

KappaOmega solve_kappa_for_xi(int n_atoms, double ratio, double xi, double gamma) {
  if (n_atoms < 1 || !(ratio > 0.0) || !(xi > 0.0) || !(gamma > 0.0))
    throw InvalidParams("solve_kappa_for_xi needs positive inputs");
  KappaOmega r;
  r.kappa = n_atoms / 8.0 * ratio * gamma / xi;
  r.coupling = std::sqrt(ratio * r.kappa * gamma);
  return r;
}

SystemParams point_params(const RunConfig& c, double v) {
  SystemParams p = c.params;
  if (!c.sweep) return p;
  if (c.sweep->variable == SweepVariable::w) {
    p.repump = v;
  } else {
    // Fixed N and Omega; xi = N Omega^2 / (8 kappa^2).
    p.kappa = std::sqrt(p.n_atoms * p.coupling * p.coupling / (8.0 * v));
    if (c.sweep->repump_at_opt) p.repump = std::max(derive(p).w_opt, 0.0);
  }
  return p;
}

namespace {

RunConfig base(std::string label, int n, double kappa, double coupling, Method m) {
  RunConfig c;
  c.label = std::move(label);
  c.params.n_atoms = n;
  c.params.kappa = kappa;
  c.params.coupling = coupling;
  c.method = m;
  return c;
}

std::string xi_label(double xi) {
  std::ostringstream os;
  os << "xi" << xi;
  return os.str();
}

}  // namespace

std::vector<RunConfig> preset(std::string_view name) {
  std::vector<RunConfig> out;
  if (name == "fig1") {
    // Desk-scale stand-in: N = 20 instead of 40, same Omega^2/(kappa gamma) = 1,
    // so kappa = (20/8)/xi and Omega^2 = kappa: xi = 0.2 -> kappa 12.5, xi = 1 -> 2.5,
    // xi = 5 -> 0.5; w_opt = N Omega^2/(2 kappa) - gamma = 9 for all three.
    for (double xi : {0.2, 1.0, 5.0}) {
      const auto ko = solve_kappa_for_xi(20, 1.0, xi);
      RunConfig c = base(xi_label(xi), 20, ko.kappa, ko.coupling, Method::su4_mc);
      c.note = "N=20 stand-in for N=40; Omega^2/(kappa gamma)=1; kappa=(N/8)/xi";
      c.sweep = SweepSpec{SweepVariable::w, 1.5, 18.0, 12, Spacing::linear, true};
      c.numeric.n_traj = 200;
      out.push_back(c);
    }
  } else if (name == "fig2") {
    // N = 10^4, Omega^2/(kappa gamma) = 0.1: kappa = 125/xi, Omega^2 = 0.1 kappa, so
    // N Omega^2/kappa = 1000 and w_opt = 499 on every branch. The dashed branches use
    // 1/T2 = w_opt/5 = 99.8 of the dephasing-free optimum.
    for (double xi : {0.1, 1.0, 10.0}) {
      const auto ko = solve_kappa_for_xi(10000, 0.1, xi);
      for (double t2 : {0.0, 99.8}) {
        RunConfig c = base(xi_label(xi) + (t2 > 0.0 ? "_t2" : ""), 10000, ko.kappa, ko.coupling, Method::langevin);
        c.params.t2_inv = t2;
        c.note = "N=1e4; Omega^2/(kappa gamma)=0.1; kappa=125/xi; 1/T2 fixed at 99.8 on dephased branches";
        c.sweep = SweepSpec{SweepVariable::w, 5.0, 900.0, 12, Spacing::log, true};
        c.numeric.n_traj = 100;
        out.push_back(c);
      }
    }
  } else if (name == "fig3") {
    // Crossover system: the xi = 1 set above (kappa = 125, Omega^2 = 12.5, w_opt = 499).
    // Lasing systems share N and kappa and raise Omega^2 = 8 xi kappa^2 / N, which moves
    // their optimum far above the shared absolute repump axis.
    for (double xi : {1.0, 10.0, 100.0}) {
      const double kappa = 125.0;
      const double coupling = std::sqrt(8.0 * xi * kappa * kappa / 10000.0);
      RunConfig c = base(xi_label(xi), 10000, kappa, coupling, Method::analytic);
      c.note = "N=1e4; kappa=125 fixed; Omega^2=8 xi kappa^2/N";
      c.sweep = SweepSpec{SweepVariable::w, 2.0, 1000.0, 60, Spacing::log, true};
      out.push_back(c);
    }
  } else if (name == "fig4") {
    // N = 10^4 and Omega^2 = 12.5 fixed; kappa = sqrt(N Omega^2/(8 xi)); w = w_opt(xi).
    RunConfig c = base("xi_sweep", 10000, 125.0, std::sqrt(12.5), Method::analytic);
    c.note = "N=1e4; Omega^2=12.5 fixed; kappa varied with xi; w=w_opt";
    c.sweep = SweepSpec{SweepVariable::xi, 0.01, 100.0, 41, Spacing::log, true};
    out.push_back(c);
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return out;
}

}  // namespace crossover::cli
