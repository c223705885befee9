#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossover/params.hpp"
#include "crossover/types.hpp"

namespace crossover::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kCodeVersion = "0.1.0";

enum class Method { analytic, meanfield, langevin, su4_det, su4_mc, bruteforce };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);  // throws ConfigError

enum class SweepVariable { w, xi };
enum class Spacing { linear, log };

struct SweepSpec {
  SweepVariable variable = SweepVariable::w;
  double min = 0.0;
  double max = 0.0;
  int points = 1;
  Spacing spacing = Spacing::linear;
  bool repump_at_opt = true;  // xi sweeps: evaluate at each w_opt instead of params.repump

  bool operator==(const SweepSpec&) const = default;
};

struct NumericSpec {
  double dt = 0.0;  // 0 everywhere means "choose automatically"
  double t_relax = 0.0;
  double t_collect = 0.0;
  std::size_t n_traj = 0;
  int cutoff = 0;
  double tau_max = 0.0;

  bool operator==(const NumericSpec&) const = default;
};

struct RunConfig {
  SystemParams params;
  Method method = Method::analytic;
  std::optional<SweepSpec> sweep;
  NumericSpec numeric;
  std::uint64_t seed = 1;
  std::string output;
  std::string label;
  std::string note;  // provenance of preset parameters

  bool operator==(const RunConfig& o) const;
};

/// Sectioned key=value text: [params], [run], [sweep], [numeric].
/// Unknown keys and missing method-specific fields raise ConfigError.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& c);

std::vector<double> sweep_grid(const SweepSpec& s);

struct KappaOmega {
  double kappa = 0.0;
  double coupling = 0.0;
};

/// kappa = (N/8) (Omega^2/(kappa gamma)) gamma / xi and Omega^2 = ratio kappa gamma.
KappaOmega solve_kappa_for_xi(int n_atoms, double omega_sq_over_kappa_gamma, double xi, double gamma = 1.0);

/// Parameters of one sweep point.
SystemParams point_params(const RunConfig& c, double sweep_value);

/// Figure presets, one configuration per branch (label such as "xi0.2").
std::vector<RunConfig> preset(std::string_view name);

struct SweepRow {
  double sweep_value = 0.0;
  SystemParams params;
  ObservableRecord obs;
  double d_omega_d_omega_c = 0.0;
  double d_omega_d_omega_a = 0.0;
  std::vector<std::string> flags;
  bool failed = false;  // numerical failure, observables unavailable
};

struct SweepResult {
  RunConfig config;
  std::vector<SweepRow> rows;
};

struct RunOptions {
  int threads = 1;
};

/// Evaluates every grid point. Per-point numerical failures become flagged
/// rows; capacity and cutoff errors propagate.
SweepResult run(const RunConfig& c, const RunOptions& opts = {});

void write_csv(std::ostream& os, const SweepResult& r);

/// Configuration echoed in a CSV metadata header.
RunConfig config_from_csv(std::istream& is);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  RunConfig config;
};
CsvTable read_csv(std::istream& is);

/// Joins two results on the same sweep grid with per-observable ratios a/b.
/// Throws ConfigError on grid mismatch.
void write_comparison(std::ostream& os, const SweepResult& a, const SweepResult& b);

/// Process exit status for a finished sweep: 0, or 2 if every row failed.
int exit_status(const SweepResult& r);

}  // namespace crossover::cli
