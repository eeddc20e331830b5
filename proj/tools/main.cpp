#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "equivac/cli.hpp"
#include "equivac/error.hpp"

using namespace equivac;

int main(int argc, char** argv) {
  CLI::App app{"Equivariant Allen-Cahn minimizers: construction and checks"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  ExecOptions opts;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "root random seed");
  app.add_flag("--quiet", opts.quiet, "suppress progress output");
  std::optional<double> R, h, dt, tol;
  std::optional<std::size_t> max_steps;
  app.add_option("--R", R, "ball radius");
  app.add_option("--h", h, "grid spacing");
  app.add_option("--dt", dt, "time step");
  app.add_option("--tol", tol, "residual tolerance");
  app.add_option("--max-steps", max_steps, "step limit");
  app.fallthrough();

  app.add_subcommand("group", "group order, reflections and orbit as JSON");

  app.add_subcommand("solve", "gradient flow from the affine seed");

  auto* verify = app.add_subcommand("verify", "run the enabled checks on a field");
  verify->add_option("--field", opts.field_path, "field CSV (default <out>/field.csv)");
  verify->add_option("--report", opts.report_path, "report JSON (default <out>/report.json)");

  app.add_subcommand("sweep", "energy against R over sweep.radii");

  auto* compare = app.add_subcommand("compare", "assemble the radial comparison function");
  compare->add_option("--n", opts.compare_n, "dimension");
  compare->add_option("--c", opts.compare_c, "convexity constant");
  compare->add_option("--qbar", opts.compare_q_bar, "convexity radius");
  compare->add_option("--Qmax", opts.compare_Q_max, "bound on Q");
  compare->add_option("--l0-hint", opts.compare_l0_hint, "starting radius for l0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    cfg = config_path.empty() ? parse_config("") : load_config(config_path);
    if (out) cfg.out = *out;
    if (seed) cfg.seed = *seed;
    if (R) cfg.grid_R = *R;
    if (h) cfg.grid_h = *h;
    if (dt) cfg.flow_dt = *dt;
    if (tol) cfg.flow_tol = *tol;
    if (max_steps) cfg.flow_max_steps = *max_steps;
    cfg = parse_config(serialize_config(cfg));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const auto cmd = parse_command(app.get_subcommands().front()->get_name());
  return execute(*cmd, cfg, opts);
}
