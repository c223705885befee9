// Command-line front end: sweeps, figure presets, comparisons and parameter helpers.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crossover/cli.hpp"
#include "crossover/errors.hpp"

namespace cli = crossover::cli;

namespace {

int thread_count(int requested) {
  int n = requested > 0 ? requested : 1;
  if (const char* cap = std::getenv("CROSSOVER_MAX_THREADS")) {
    const int limit = std::atoi(cap);
    if (limit > 0) n = std::min(n, limit);
  }
  return n;
}

void emit(const cli::SweepResult& r, const std::string& path) {
  if (path.empty() || path == "-") {
    cli::write_csv(std::cout, r);
    return;
  }
  std::ofstream out(path);
  if (!out) throw crossover::ConfigError("cannot write " + path);
  cli::write_csv(out, r);
  std::cerr << "wrote " << path << " (" << r.rows.size() << " rows)\n";
}

int run_one(cli::RunConfig c, const std::string& out, int threads) {
  const auto r = cli::run(c, {threads});
  emit(r, out.empty() ? c.output : out);
  return cli::exit_status(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity QED simulations across the superradiance to lasing crossover"};
  app.require_subcommand(0, 1);

  std::string config_path, preset_name, method, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> xi_branch;
  int threads = 1;
  app.add_option("--config", config_path, "Run configuration file");
  app.add_option("--preset", preset_name, "Figure preset")->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4"}));
  app.add_option("--method", method, "analytic, meanfield, langevin, su4-det, su4-mc or bruteforce");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out, "Output CSV (presets: file stem)");
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)");
  app.add_option("--xi", xi_branch, "Preset branch to run (default: all)");

  auto* brute = app.add_subcommand("bruteforce", "Run a configuration with the dense master-equation oracle");
  std::string brute_config, brute_out;
  brute->add_option("--config", brute_config, "Run configuration file")->required();
  brute->add_option("--out", brute_out, "Output CSV");

  auto* analytic = app.add_subcommand("analytic", "Mean-field and phase-diffusion closed forms");
  std::string analytic_config, analytic_out;
  analytic->add_option("--config", analytic_config, "Run configuration file")->required();
  analytic->add_option("--out", analytic_out, "Output CSV");

  auto* compare = app.add_subcommand("compare", "Run two configurations on one grid and join them");
  std::string cmp_a, cmp_b, cmp_out;
  compare->add_option("a", cmp_a, "First configuration")->required();
  compare->add_option("b", cmp_b, "Second configuration")->required();
  compare->add_option("--out", cmp_out, "Output CSV");

  auto* solve = app.add_subcommand("solve_kappa_for_xi", "kappa and Omega for a target crossover parameter");
  int solve_n = 0;
  double solve_ratio = 0.0, solve_xi = 0.0;
  solve->add_option("n_atoms", solve_n)->required();
  solve->add_option("omega_sq_over_kappa_gamma", solve_ratio)->required();
  solve->add_option("xi", solve_xi)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const int n_threads = thread_count(threads);
  try {
    if (*solve) {
      const auto r = cli::solve_kappa_for_xi(solve_n, solve_ratio, solve_xi);
      std::cout << std::setprecision(12) << "kappa=" << r.kappa << "\nomega=" << r.coupling
                << "\nomega_sq=" << r.coupling * r.coupling << "\n";
      return 0;
    }
    if (*brute || *analytic) {
      auto c = cli::load_config(*brute ? brute_config : analytic_config);
      c.method = *brute ? cli::Method::bruteforce : cli::Method::analytic;
      return run_one(c, *brute ? brute_out : analytic_out, n_threads);
    }
    if (*compare) {
      const auto a = cli::run(cli::load_config(cmp_a), {n_threads});
      const auto b = cli::run(cli::load_config(cmp_b), {n_threads});
      if (cmp_out.empty()) {
        cli::write_comparison(std::cout, a, b);
      } else {
        std::ofstream os(cmp_out);
        if (!os) throw crossover::ConfigError("cannot write " + cmp_out);
        cli::write_comparison(os, a, b);
      }
      return std::max(cli::exit_status(a), cli::exit_status(b));
    }

    if (config_path.empty() == preset_name.empty()) {
      std::cerr << "error: give exactly one of --config or --preset\n";
      return 1;
    }
    if (!config_path.empty()) {
      auto c = cli::load_config(config_path);
      if (!method.empty()) c.method = cli::parse_method(method);
      if (seed) c.seed = *seed;
      return run_one(c, out, n_threads);
    }

    const std::string stem = out.empty() ? preset_name : std::filesystem::path(out).replace_extension().string();
    int status = 0;
    bool matched = false;
    for (auto c : cli::preset(preset_name)) {
      const double branch_xi = crossover::crossover_xi(c.params);
      if (xi_branch && (c.sweep && c.sweep->variable == cli::SweepVariable::xi ? false
                                                                                : std::abs(branch_xi - *xi_branch) > 1e-9 * *xi_branch))
        continue;
      matched = true;
      if (!method.empty()) c.method = cli::parse_method(method);
      if (seed) c.seed = *seed;
      if ((c.method == cli::Method::langevin || c.method == cli::Method::su4_mc) && c.numeric.n_traj == 0)
        c.numeric.n_traj = 100;
      status = std::max(status, run_one(c, stem + "." + c.label + ".csv", n_threads));
    }
    if (!matched) {
      std::cerr << "error: preset " << preset_name << " has no branch with that xi\n";
      return 1;
    }
    return status;
  } catch (const crossover::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const crossover::CapacityError& e) {
    std::cerr << "capacity: " << e.what() << "\n";
    return 3;
  } catch (const crossover::CutoffOverflow& e) {
    std::cerr << "cutoff: " << e.what() << "\n";
    return 3;
  } catch (const crossover::InvalidParams& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const crossover::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
