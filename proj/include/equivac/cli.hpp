#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "equivac/coxeter.hpp"
#include "equivac/flow.hpp"
#include "equivac/potential.hpp"

namespace equivac {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunConfig {
  // group: dihedral order-2m group in the plane, or explicit mirror normals.
  int group_dihedral = 3;
  std::vector<Vec> group_normals;

  std::string potential = "triangle";  // triangle | polynomial
  std::optional<Polynomial> potential_poly;
  std::optional<double> potential_c;
  std::optional<double> potential_q_bar;
  std::optional<double> potential_M;

  Vec a1;
  std::optional<Polynomial> q_H;

  double grid_R = 8.0;
  double grid_h = 0.1;
  std::string grid_lattice = "auto";  // auto | cartesian | hexagonal

  std::optional<double> flow_dt;
  double flow_tol = 1e-6;
  std::size_t flow_max_steps = 2'000'000;
  std::size_t flow_K_sym = 50;
  bool flow_clamp = true;

  bool verify_kato = true;
  bool verify_subharmonic = true;
  bool verify_degiorgi = true;
  bool verify_comparison = true;
  bool verify_decay = true;
  bool verify_positivity = true;
  bool verify_energy = false;
  std::size_t verify_kato_trials = 50;
  std::size_t verify_subharmonic_trials = 100;
  double verify_decay_min = 1.0;
  double verify_decay_max = 3.0;
  double verify_decay_min_r2 = 0.95;
  std::optional<double> verify_ordering_slack;  // default 5h
  std::optional<double> verify_degiorgi_radius;  // default R/4

  std::vector<double> sweep_radii{4.0, 6.0, 8.0, 12.0};
  bool sweep_seed_only = false;

  double compare_l0_hint = 1.0;
  double compare_rho = 0.5;

  std::uint64_t seed = 1;
  std::string out = "out";

  int dim() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Flat "key = value" document; '#' starts a comment. Unknown keys are
/// rejected. Throws ParseError (with line number) or ValidationError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// Polynomial written as "coeff:e1,e2,...; coeff:..." terms.
Polynomial parse_polynomial(int dim, const std::string& text);
std::string format_polynomial(const Polynomial& p);

/// The objects a config describes.
struct Problem {
  ReflectionGroup group;
  OrbitInfo orbit;
  PotentialSpec spec;
  QSpec q;
  Lattice lattice = Lattice::Cartesian;
  FlowConfig flow;
};

Problem build_problem(const RunConfig& cfg);

enum class Command { Group, Solve, Verify, Sweep, Compare };

std::optional<Command> parse_command(const std::string& name);
const char* to_string(Command c);

struct ExecOptions {
  bool quiet = false;
  std::string field_path;   // verify: default <out>/field.csv
  std::string report_path;  // verify: default <out>/report.json
  // compare overrides
  std::optional<int> compare_n;
  std::optional<double> compare_c;
  std::optional<double> compare_q_bar;
  std::optional<double> compare_Q_max;
  std::optional<double> compare_l0_hint;
};

/// Runs one command and writes its files plus manifest.json into cfg.out.
/// Returns 0 on success, 1 on a failed check or module error.
int execute(Command cmd, const RunConfig& cfg, const ExecOptions& opts = {});

std::string sha256_hex(const std::string& path);

}  // namespace equivac
