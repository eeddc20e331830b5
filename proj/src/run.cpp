#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "equivac/cli.hpp"
#include "equivac/comparison.hpp"
#include "equivac/error.hpp"
#include "equivac/verify.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace equivac {

namespace {

using json = nlohmann::ordered_json;

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json to_json(const std::vector<Vec>& vs) {
  json a = json::array();
  for (const Vec& v : vs) a.push_back(to_json(v));
  return a;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

class Run {
 public:
  Run(Command cmd, const RunConfig& cfg, const ExecOptions& opts)
      : cmd_(cmd), cfg_(cfg), opts_(opts), dir_(cfg.out) {
    fs::create_directories(dir_);
  }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      stages_.push_back({{"name", name}, {"seconds", s}});
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void log(const std::string& line) const {
    if (!opts_.quiet) std::cerr << line << "\n";
  }

  const fs::path& dir() const { return dir_; }
  void extra_file(const fs::path& p) { extra_.push_back(p); }

  void write_manifest() const {
    json files = json::array();
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(dir_)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const fs::path& p : extra_) {
      if (std::find(paths.begin(), paths.end(), p) == paths.end()) paths.push_back(p);
    }
    for (const fs::path& p : paths) {
      const fs::path rel = p.lexically_relative(dir_);
      const bool inside = !rel.empty() && rel.begin()->string() != "..";
      files.push_back({{"path", inside ? rel.generic_string() : p.string()},
                       {"bytes", fs::file_size(p)},
                       {"sha256", sha256_hex(p.string())}});
    }
    json m;
    m["version"] = kArtifactVersion;
    m["command"] = to_string(cmd_);
    m["config"] = serialize_config(cfg_);
    m["stages"] = stages_;
    m["files"] = files;
    write_json(dir_ / "manifest.json", m);
  }

 private:
  Command cmd_;
  const RunConfig& cfg_;
  const ExecOptions& opts_;
  fs::path dir_;
  json stages_ = json::array();
  std::vector<fs::path> extra_;
};

int run_group(Run& run, const RunConfig& cfg) {
  const Problem p = run.stage("build", [&] { return build_problem(cfg); });
  json j;
  j["dim"] = p.group.dim;
  j["order"] = p.group.order();
  j["reflections"] = p.group.reflection_count();
  j["N"] = p.orbit.count;
  j["stabilizer_order"] = p.orbit.stabilizer.size();
  j["a1"] = to_json(p.orbit.base_point);
  j["orbit"] = to_json(p.orbit.orbit);
  j["fundamental_normals"] = to_json(p.group.fund_normals);
  j["region_D_normals"] = to_json(p.orbit.region_D_normals);
  j["lattice"] = to_string(p.lattice);
  write_json(run.dir() / "group.json", j);
  run.log("order " + std::to_string(p.group.order()) + ", reflections " +
          std::to_string(p.group.reflection_count()) + ", N " + std::to_string(p.orbit.count));
  return 0;
}

int run_solve(Run& run, const RunConfig& cfg) {
  const Problem p = run.stage("build", [&] { return build_problem(cfg); });
  const auto grid = build_grid(cfg.dim(), cfg.grid_R, cfg.grid_h, p.lattice);
  run.log("grid: " + std::to_string(grid->node_count) + " nodes, " + to_string(p.lattice));
  const FlowResult r = run.stage("flow", [&] {
    const VectorField u0 = seed_affine(grid, p.group, p.orbit);
    std::size_t next = 0;
    return run_to_equilibrium(u0, p.spec, p.flow, p.group,
                              [&](std::size_t step, double J, double res) {
                                if (step < next) return;
                                next = step + 5000;
                                run.log("step " + std::to_string(step) + "  J " + num(J) + "  residual " + num(res));
                              });
  });
  run.stage("write", [&] {
    write_field_csv(r.field, (run.dir() / "field.csv").string());
    std::string eh = "step,energy\n";
    for (std::size_t k = 0; k < r.energy_history.size(); ++k) {
      eh += std::to_string(k) + "," + num(r.energy_history[k]) + "\n";
    }
    write_text(run.dir() / "energy_history.csv", eh);
    std::string pos = "step,positivity\n";
    for (const PositivitySample& s : r.positivity_samples) pos += std::to_string(s.step) + "," + num(s.value) + "\n";
    write_text(run.dir() / "positivity.csv", pos);
    const PositivityCheck pc = positivity_check(r, p.group);
    json j;
    j["R"] = cfg.grid_R;
    j["h"] = cfg.grid_h;
    j["lattice"] = to_string(p.lattice);
    j["nodes"] = grid->node_count;
    j["dt"] = r.dt;
    j["steps"] = r.steps;
    j["converged"] = r.converged;
    j["residual"] = r.residual;
    j["energy_initial"] = r.energy_history.front();
    j["energy_final"] = r.energy_history.back();
    j["max_step_energy_increase"] = max_step_energy_increase(r);
    j["symmetrizations"] = r.symmetrizations.size();
    j["positivity_min"] = pc.positivity_min;
    j["strong_positivity_margin"] = pc.strong_margin;
    write_json(run.dir() / "solve.json", j);
  });
  run.log("steps " + std::to_string(r.steps) + ", residual " + num(r.residual) + ", J " +
          num(r.energy_history.back()));
  if (!r.converged) {
    std::cerr << "FAIL flow: no convergence after " << r.steps << " steps (residual " << num(r.residual)
              << ")\n";
    return 1;
  }
  return 0;
}

struct CheckOutcome {
  std::string name;
  bool pass = false;
  json detail;
};

template <class F>
CheckOutcome guarded(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    CheckOutcome c{name, false, json::object()};
    c.detail["error"] = e.what();
    return c;
  }
}

int run_verify(Run& run, const RunConfig& cfg, const ExecOptions& opts) {
  const Problem p = run.stage("build", [&] { return build_problem(cfg); });
  const fs::path field_path = opts.field_path.empty() ? run.dir() / "field.csv" : fs::path(opts.field_path);
  const fs::path report_path = opts.report_path.empty() ? run.dir() / "report.json" : fs::path(opts.report_path);
  const VectorField u = run.stage("read", [&] { return read_field_csv(field_path.string(), cfg.grid_R); });
  const BallGrid& g = *u.grid;
  const double h = g.h;
  const int n = cfg.dim();

  json report;
  report["field_sha256"] = sha256_hex(field_path.string());
  report["R"] = g.R;
  report["h"] = h;
  report["nodes"] = g.node_count;
  report["seed"] = cfg.seed;
  for (const char* k : {"kato_min", "subharmonic_min", "positivity_min", "measure_fraction", "degiorgi_sup",
                        "decay_K", "decay_k", "decay_R2", "energy_slope", "eps0", "comparison_violations"}) {
    report[k] = nullptr;
  }
  std::vector<CheckOutcome> checks;

  if (cfg.verify_kato) {
    checks.push_back(run.stage("kato", [&] {
      return guarded("kato", [&] {
        const KatoCheck k = kato_check(u, p.q, cfg.verify_kato_trials, cfg.seed);
        report["kato_min"] = k.min;
        return CheckOutcome{"kato", k.pass,
                            {{"tol", k.tol}, {"trials", k.values.size()}, {"max_strong_weak_rel", k.max_strong_weak_rel}}};
      });
    }));
  }
  if (cfg.verify_subharmonic) {
    checks.push_back(run.stage("subharmonic", [&] {
      return guarded("subharmonic", [&] {
        const SubharmonicCheck s =
            subharmonic_check(u, p.q, p.orbit, cfg.verify_subharmonic_trials, true, cfg.seed + 1);
        report["subharmonic_min"] = s.min;
        json d = {{"tol", s.tol}, {"trials", s.values.size()}};
        if (!s.warning.empty()) d["warning"] = s.warning;
        return CheckOutcome{"subharmonic", s.pass, d};
      });
    }));
  }
  if (cfg.verify_positivity) {
    checks.push_back(run.stage("positivity", [&] {
      return guarded("positivity", [&] {
        FlowResult only;
        only.field = u;
        const PositivityCheck pc = positivity_check(only, p.group);
        report["positivity_min"] = pc.positivity_min;
        return CheckOutcome{"positivity", pc.pass && pc.strong_pass,
                            {{"tol", pc.tol}, {"strong_margin", pc.strong_margin}}};
      });
    }));
  }

  // The De Giorgi ball also seeds the ordering check.
  std::optional<DeGiorgiResult> dg;
  std::string dg_error;
  if (cfg.verify_degiorgi || cfg.verify_comparison) {
    run.stage("degiorgi", [&] {
      try {
        const Vec center = (g.R / 2.0) * cfg.a1.normalized();
        const double dist = region_geometry(center, p.orbit).dist_D;
        const double radius = cfg.verify_degiorgi_radius.value_or(std::min(g.R / 4.0, 0.95 * dist));
        dg = measure_and_degiorgi(u, p.q, p.spec, p.orbit, center, radius);
      } catch (const Error& e) {
        dg_error = e.what();
      }
    });
  }
  if (cfg.verify_degiorgi) {
    CheckOutcome c{"degiorgi", false, json::object()};
    if (dg) {
      report["measure_fraction"] = dg->measure_fraction;
      report["degiorgi_sup"] = dg->degiorgi_sup;
      report["eps0"] = dg->eps0_defined ? json(dg->eps0) : json(nullptr);
      json levels = json::array();
      for (const DeGiorgiLevel& l : dg->levels) {
        levels.push_back({{"level", l.level}, {"radius", l.radius}, {"sup_Q", l.sup_Q}, {"bound", l.bound}});
      }
      c.pass = dg->degiorgi_sup < 1.0 && dg->levels_decreasing && dg->final_below_q_bar;
      c.detail = {{"center", to_json(dg->center)}, {"radius", dg->radius},   {"k_iter", dg->k_iter},
                  {"levels", levels},              {"certified_radius", dg->certified_radius}};
    } else {
      c.detail["error"] = dg_error;
    }
    checks.push_back(c);
  }
  if (cfg.verify_comparison) {
    checks.push_back(run.stage("comparison", [&] {
      return guarded("comparison", [&] {
        if (!dg) throw Error(ErrorCode::BallOutsideD, dg_error);
        const SigmaPack pack = assemble_sigma(n, p.spec.c, p.spec.q_bar, p.q.Q_max, cfg.compare_l0_hint, cfg.compare_rho);
        const double slack = cfg.verify_ordering_slack.value_or(5.0 * h);
        const OrderingResult o = comparison_ordering_check(u, p.q, p.spec, pack, p.orbit, *dg, slack);
        report["comparison_violations"] = o.violations;
        std::string csv = "r,sigma,dsigma\n";
        const RadialProfile& s = pack.sigma;
        for (std::size_t k = 0; k < s.radii.size(); ++k) {
          csv += num(s.radii[k]) + "," + num(s.values[k]) + "," + num(s.derivs[k]) + "\n";
        }
        write_text(run.dir() / "sigma_profile.csv", csv);
        return CheckOutcome{"comparison", o.violations == 0 && o.laplace_q_violations == 0 && pack.all_pass(),
                            {{"slack", slack},
                             {"l", o.l},
                             {"L", o.L},
                             {"vacuous", o.vacuous},
                             {"admissible_centers", o.admissible_centers},
                             {"reachable_centers", o.reachable_centers},
                             {"centers_checked", o.centers_checked},
                             {"coverage", o.coverage},
                             {"d0", o.d0},
                             {"laplace_q_violations", o.laplace_q_violations},
                             {"laplace_q_nodes", o.laplace_q_nodes},
                             {"laplace_q_min", o.laplace_q_min}}};
      });
    }));
  }
  if (cfg.verify_decay) {
    checks.push_back(run.stage("decay", [&] {
      return guarded("decay", [&] {
        const DecayFit d = decay_fit(u, p.orbit, cfg.verify_decay_min, cfg.verify_decay_max);
        report["decay_K"] = d.K;
        report["decay_k"] = d.k;
        report["decay_R2"] = d.r2;
        std::string csv = "dist_D,log_dev\n";
        for (const auto& [x, y] : decay_scatter(u, p.orbit, cfg.verify_decay_min, cfg.verify_decay_max)) {
          csv += num(x) + "," + num(y) + "\n";
        }
        write_text(run.dir() / "decay_scatter.csv", csv);
        return CheckOutcome{"decay", d.k > 0.0 && d.r2 >= cfg.verify_decay_min_r2,
                            {{"d_min", cfg.verify_decay_min}, {"d_max", cfg.verify_decay_max},
                             {"min_R2", cfg.verify_decay_min_r2}, {"nodes", d.nodes}}};
      });
    }));
  }
  if (cfg.verify_energy) {
    checks.push_back(run.stage("energy", [&] {
      return guarded("energy", [&] {
        SweepParams sp{h, p.flow, cfg.sweep_seed_only};
        const SweepResult s = energy_scaling_sweep(cfg.sweep_radii, p.spec, p.group, p.orbit, sp);
        report["energy_slope"] = s.slope;
        return CheckOutcome{"energy", std::abs(s.slope - (n - 1)) <= 0.2,
                            {{"radii", s.radii}, {"energies", s.energies}, {"target", n - 1}}};
      });
    }));
  }

  json cj = json::object();
  json failed = json::array();
  for (const CheckOutcome& c : checks) {
    json d = c.detail;
    d["pass"] = c.pass;
    cj[c.name] = d;
    if (!c.pass) failed.push_back(c.name);
    if (c.pass) {
      run.log("PASS " + c.name);
    } else {
      std::cerr << "FAIL " << c.name << (c.detail.contains("error") ? ": " + c.detail["error"].get<std::string>() : "")
                << "\n";
    }
  }
  report["checks"] = cj;
  report["failed"] = failed;
  report["pass"] = failed.empty();
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  write_json(report_path, report);
  run.extra_file(report_path);
  return failed.empty() ? 0 : 1;
}

int run_sweep(Run& run, const RunConfig& cfg) {
  const Problem p = run.stage("build", [&] { return build_problem(cfg); });
  const SweepParams sp{cfg.grid_h, p.flow, cfg.sweep_seed_only};
  const SweepResult s =
      run.stage("sweep", [&] { return energy_scaling_sweep(cfg.sweep_radii, p.spec, p.group, p.orbit, sp); });
  std::string csv = "R,energy,steps,residual\n";
  for (std::size_t k = 0; k < s.radii.size(); ++k) {
    csv += num(s.radii[k]) + "," + num(s.energies[k]) + "," + std::to_string(s.steps[k]) + "," +
           num(s.residuals[k]) + "\n";
  }
  write_text(run.dir() / "energy_scaling.csv", csv);
  const int target = cfg.dim() - 1;
  const bool pass = std::abs(s.slope - target) <= 0.2;
  write_json(run.dir() / "sweep.json", {{"h", cfg.grid_h},
                                        {"seed_only", cfg.sweep_seed_only},
                                        {"radii", s.radii},
                                        {"energies", s.energies},
                                        {"slope", s.slope},
                                        {"intercept", s.intercept},
                                        {"target", target},
                                        {"pass", pass}});
  run.log("slope " + num(s.slope));
  if (!pass) std::cerr << "FAIL energy: slope " << num(s.slope) << " outside [" << target - 0.2 << ", "
                       << target + 0.2 << "]\n";
  return pass ? 0 : 1;
}

int run_compare(Run& run, const RunConfig& cfg, const ExecOptions& opts) {
  const int n = opts.compare_n.value_or(cfg.dim());
  double c = 0, q_bar = 0, Q_max = 0;
  if (opts.compare_c && opts.compare_q_bar && opts.compare_Q_max) {
    c = *opts.compare_c;
    q_bar = *opts.compare_q_bar;
    Q_max = *opts.compare_Q_max;
  } else {
    const Problem p = run.stage("build", [&] { return build_problem(cfg); });
    c = opts.compare_c.value_or(p.spec.c);
    q_bar = opts.compare_q_bar.value_or(p.spec.q_bar);
    Q_max = opts.compare_Q_max.value_or(p.q.Q_max);
  }
  const double hint = opts.compare_l0_hint.value_or(cfg.compare_l0_hint);
  const SigmaPack pack = run.stage("assemble", [&] { return assemble_sigma(n, c, q_bar, Q_max, hint, cfg.compare_rho); });
  std::string csv = "r,sigma,dsigma\n";
  const RadialProfile& s = pack.sigma;
  for (std::size_t k = 0; k < s.radii.size(); ++k) {
    csv += num(s.radii[k]) + "," + num(s.values[k]) + "," + num(s.derivs[k]) + "\n";
  }
  write_text(run.dir() / "sigma_profile.csv", csv);
  const SigmaConstants& k = pack.constants;
  json checks = json::array();
  for (const BarrierCheck& l : pack.checks) {
    checks.push_back({{"l", l.l},
                      {"gap", l.gap},
                      {"theta_margin", l.theta_margin},
                      {"crossing", l.crossing},
                      {"sigma_max", l.sigma_max},
                      {"clause_i", l.clause_i},
                      {"clause_ii", l.clause_ii},
                      {"clause_iii", l.clause_iii}});
  }
  const bool pass = pack.all_pass() && k.q_bar_prime < q_bar;
  write_json(run.dir() / "compare.json", {{"n", n},
                                          {"c", c},
                                          {"q_bar", q_bar},
                                          {"Q_max", Q_max},
                                          {"l0", k.l0},
                                          {"L0", k.L0},
                                          {"rho", k.rho},
                                          {"lambda", k.lambda},
                                          {"delta", k.delta},
                                          {"q_bar_prime", k.q_bar_prime},
                                          {"delta_prime", k.delta_prime},
                                          {"mu", k.mu},
                                          {"delta_iterations", k.delta_iterations},
                                          {"checks", checks},
                                          {"pass", pass}});
  run.log("l0 " + num(k.l0) + ", lambda " + num(k.lambda) + ", delta " + num(k.delta) + ", q_bar' " +
          num(k.q_bar_prime));
  if (!pass) std::cerr << "FAIL comparison: a barrier clause failed\n";
  return pass ? 0 : 1;
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  if (name == "group") return Command::Group;
  if (name == "solve") return Command::Solve;
  if (name == "verify") return Command::Verify;
  if (name == "sweep") return Command::Sweep;
  if (name == "compare") return Command::Compare;
  return std::nullopt;
}

const char* to_string(Command c) {
  switch (c) {
    case Command::Group: return "group";
    case Command::Solve: return "solve";
    case Command::Verify: return "verify";
    case Command::Sweep: return "sweep";
    case Command::Compare: return "compare";
  }
  return "?";
}

std::string sha256_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int k = 0; k < len; ++k) {
    s += hex[md[k] >> 4];
    s += hex[md[k] & 15];
  }
  return s;
}

int execute(Command cmd, const RunConfig& cfg, const ExecOptions& opts) {
  try {
    Run run(cmd, cfg, opts);
    int status = 0;
    switch (cmd) {
      case Command::Group: status = run_group(run, cfg); break;
      case Command::Solve: status = run_solve(run, cfg); break;
      case Command::Verify: status = run_verify(run, cfg, opts); break;
      case Command::Sweep: status = run_sweep(run, cfg); break;
      case Command::Compare: status = run_compare(run, cfg, opts); break;
    }
    run.write_manifest();
    return status;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace equivac
