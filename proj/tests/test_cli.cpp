#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "equivac/cli.hpp"
#include "equivac/error.hpp"
#include "json.hpp"

using namespace equivac;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("equivac_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_message(const std::string& text, ErrorCode* code) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    *code = e.code();
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const RunConfig c = parse_config("group.dihedral = 3\ngrid.R = 8\n");
  CHECK(c.group_dihedral == 3);
  CHECK(c.grid_R == 8.0);
  CHECK(c.grid_h == 0.1);
  CHECK(c.potential == "triangle");
  CHECK(c.flow_tol == 1e-6);
  CHECK(!c.flow_dt);
  CHECK(c.verify_kato);
  CHECK(!c.verify_energy);
  REQUIRE(c.a1.size() == 2);
  CHECK(c.a1(0) == 1.0);
  CHECK(c.a1(1) == 0.0);
  CHECK(c.dim() == 2);
  CHECK(c.sweep_radii == std::vector<double>{4, 6, 8, 12});
}

TEST_CASE("config errors") {
  ErrorCode code{};
  std::string msg = error_message("grid.h = 0.1\nflow.dt = 0.01\n", &code);
  CHECK(code == ErrorCode::ValidationError);
  CHECK(msg.find("flow.dt") != std::string::npos);

  // h^2/(2n) = 0.0025 is allowed, just above is not.
  CHECK_NOTHROW(parse_config("flow.dt = 0.0025\n"));
  msg = error_message("flow.dt = 0.0025001\n", &code);
  CHECK(code == ErrorCode::ValidationError);

  msg = error_message("# comment\ngrid.R = 8\nnonsense line\n", &code);
  CHECK(code == ErrorCode::ParseError);
  CHECK(msg.find("line 3") != std::string::npos);

  msg = error_message("grid.Radius = 8\n", &code);
  CHECK(code == ErrorCode::ParseError);
  CHECK(msg.find("grid.Radius") != std::string::npos);

  msg = error_message("grid.R = eight\n", &code);
  CHECK(code == ErrorCode::ParseError);

  msg = error_message("grid.R = 8\ngrid.R = 9\n", &code);
  CHECK(code == ErrorCode::ParseError);
  CHECK(msg.find("line 2") != std::string::npos);

  msg = error_message("compare.rho = 1.5\n", &code);
  CHECK(code == ErrorCode::ValidationError);
  CHECK(msg.find("compare.rho") != std::string::npos);

  msg = error_message("group.dihedral = 3\ngroup.normals = 0 1; 0.866 -0.5\n", &code);
  CHECK(code == ErrorCode::ValidationError);

  msg = error_message("potential.kind = polynomial\n", &code);
  CHECK(code == ErrorCode::ValidationError);
  CHECK(msg.find("potential.terms") != std::string::npos);
}

TEST_CASE("polynomial text round trip") {
  const Polynomial p = parse_polynomial(2, "1.5:2,0; -0.25:1,3; 7:0,0");
  REQUIRE(p.terms().size() == 3);
  CHECK(p.terms()[1].coeff == -0.25);
  CHECK(p.terms()[1].exps == std::vector<int>{1, 3});
  CHECK(parse_polynomial(2, format_polynomial(p)) == p);
  CHECK_THROWS_AS(parse_polynomial(2, "1:2,0,1"), Error);
}

TEST_CASE("serialize then parse gives an equal config") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    RunConfig c;
    if (rng() % 2) {
      c.group_dihedral = 1 + static_cast<int>(rng() % 8);
    } else {
      const double t = std::numbers::pi / (2 + static_cast<double>(rng() % 5));
      Vec n1(2), n2(2);
      n1 << 0.0, 1.0;
      n2 << std::sin(t), -std::cos(t);
      c.group_normals = {n1, n2};
    }
    c.grid_R = 1.0 + 20.0 * U(rng);
    c.grid_h = 0.01 + 0.4 * U(rng);
    c.grid_lattice = rng() % 2 ? "auto" : "cartesian";
    if (rng() % 2) c.flow_dt = c.grid_h * c.grid_h / 4.0 * U(rng) + 1e-9;
    c.flow_tol = std::pow(10.0, -8.0 * U(rng));
    c.flow_max_steps = 1 + rng() % 1000000;
    c.flow_K_sym = rng() % 200;
    c.flow_clamp = rng() % 2;
    c.verify_kato = rng() % 2;
    c.verify_energy = rng() % 2;
    c.verify_kato_trials = 20 + rng() % 100;
    c.verify_decay_min = U(rng);
    c.verify_decay_max = 1.0 + 3.0 * U(rng);
    if (rng() % 2) c.verify_ordering_slack = U(rng);
    if (rng() % 2) c.verify_degiorgi_radius = 0.1 + U(rng);
    c.sweep_radii = {1.0 + U(rng), 2.0 + U(rng), 3.0 + U(rng)};
    c.compare_rho = 0.05 + 0.9 * U(rng);
    c.compare_l0_hint = 0.1 + U(rng);
    c.seed = rng();
    c.out = "dir_" + std::to_string(trial);
    if (rng() % 3 == 0) {
      c.potential_c = U(rng) + 0.1;
      c.q_H = parse_polynomial(2, "0.01:2,0; 0.01:0,2");
    }
    const double bound = c.grid_h * c.grid_h / 4.0;
    if (c.flow_dt && *c.flow_dt > bound) c.flow_dt = bound;
    c.sweep_radii[0] = std::max(c.sweep_radii[0], 2.0 * c.grid_h);
    const RunConfig once = parse_config(serialize_config(c));
    const RunConfig twice = parse_config(serialize_config(once));
    CHECK(once == twice);
    CHECK(serialize_config(once) == serialize_config(twice));
    CHECK(once.grid_R == c.grid_R);
    CHECK(once.flow_dt == c.flow_dt);
    CHECK(once.seed == c.seed);
  }
}

TEST_CASE("group command on the order-6 dihedral group") {
  RunConfig c = parse_config("group.dihedral = 3\n");
  c.out = scratch("group").string();
  CHECK(execute(Command::Group, c, {.quiet = true}) == 0);
  const json g = read_json(fs::path(c.out) / "group.json");
  CHECK(g["order"] == 6);
  CHECK(g["reflections"] == 3);
  CHECK(g["N"] == 3);
  const json m = read_json(fs::path(c.out) / "manifest.json");
  REQUIRE(m["files"].size() == 1);
  CHECK(m["files"][0]["path"] == "group.json");
  CHECK(m["files"][0]["sha256"] == sha256_hex((fs::path(c.out) / "group.json").string()));
}

TEST_CASE("sha256 of a known string") {
  const fs::path p = scratch("sha");
  fs::create_directories(p);
  std::ofstream(p / "abc.txt", std::ios::binary) << "abc";
  CHECK(sha256_hex((p / "abc.txt").string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("solve then verify, then a corrupted field") {
  RunConfig c = parse_config("grid.R = 4\ngrid.h = 0.2\nverify.decay_max = 2.5\n");
  c.out = scratch("solve").string();
  REQUIRE(execute(Command::Solve, c, {.quiet = true}) == 0);
  CHECK(execute(Command::Verify, c, {.quiet = true}) == 0);
  const fs::path dir(c.out);
  const json r = read_json(dir / "report.json");
  CHECK(r["pass"] == true);
  for (const char* k : {"kato_min", "subharmonic_min", "positivity_min", "measure_fraction", "degiorgi_sup",
                        "decay_K", "decay_k", "decay_R2", "energy_slope", "eps0", "comparison_violations"}) {
    CHECK(r.contains(k));
  }
  CHECK(r["energy_slope"].is_null());

  const json m = read_json(dir / "manifest.json");
  std::size_t listed = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == "manifest.json") continue;
    bool found = false;
    for (const auto& f : m["files"]) {
      if (f["path"] == e.path().filename().string()) {
        found = true;
        CHECK(f["sha256"] == sha256_hex(e.path().string()));
      }
    }
    CHECK(found);
    ++listed;
  }
  CHECK(listed == m["files"].size());

  // Negate u1 throughout: positivity and the ordering both break.
  std::ifstream in(dir / "field.csv");
  std::ostringstream bad;
  std::string line;
  std::getline(in, line);
  bad << line << "\n";
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string v; std::getline(ss, v, ',');) cols.push_back(v);
    cols[2] = std::to_string(-std::stod(cols[2]));
    bad << cols[0] << "," << cols[1] << "," << cols[2] << "," << cols[3] << "\n";
  }
  const fs::path corrupt = dir / "corrupt.csv";
  std::ofstream(corrupt) << bad.str();
  ExecOptions o{.quiet = true, .field_path = corrupt.string(), .report_path = (dir / "bad.json").string()};
  CHECK(execute(Command::Verify, c, o) == 1);
  const json br = read_json(dir / "bad.json");
  CHECK(br["pass"] == false);
  bool named = false;
  for (const auto& f : br["failed"]) named = named || f == "positivity";
  CHECK(named);
}
