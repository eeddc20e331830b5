#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "equivac/cli.hpp"
#include "equivac/error.hpp"

namespace equivac {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (seps.find(ch) != std::string::npos) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

[[noreturn]] void invalid(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::ValidationError, key + ": " + msg);
}

double to_double(const std::string& s, int line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) parse_fail(line, "not a number: '" + s + "'");
  return v;
}

std::uint64_t to_uint(const std::string& s, int line) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) parse_fail(line, "not a nonnegative integer: '" + s + "'");
  return v;
}

long long to_int(const std::string& s, int line) {
  long long v = 0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) parse_fail(line, "not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s, int line) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  parse_fail(line, "not a boolean: '" + s + "'");
}

Vec to_vec(const std::string& s, int line) {
  const auto parts = split(s, " ,\t");
  if (parts.empty()) parse_fail(line, "empty vector");
  Vec v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t k = 0; k < parts.size(); ++k) v(static_cast<Eigen::Index>(k)) = to_double(parts[k], line);
  return v;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(const Vec& v) {
  std::string s;
  for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? " " : "") + fmt(v(k));
  return s;
}

bool vec_equal(const Vec& a, const Vec& b) { return a.size() == b.size() && (a.size() == 0 || a == b); }

}  // namespace

int RunConfig::dim() const {
  return group_normals.empty() ? 2 : static_cast<int>(group_normals.front().size());
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  if (a.group_normals.size() != b.group_normals.size()) return false;
  for (std::size_t k = 0; k < a.group_normals.size(); ++k) {
    if (!vec_equal(a.group_normals[k], b.group_normals[k])) return false;
  }
  return a.group_dihedral == b.group_dihedral && a.potential == b.potential &&
         a.potential_poly == b.potential_poly && a.potential_c == b.potential_c &&
         a.potential_q_bar == b.potential_q_bar && a.potential_M == b.potential_M &&
         vec_equal(a.a1, b.a1) && a.q_H == b.q_H && a.grid_R == b.grid_R && a.grid_h == b.grid_h &&
         a.grid_lattice == b.grid_lattice && a.flow_dt == b.flow_dt && a.flow_tol == b.flow_tol &&
         a.flow_max_steps == b.flow_max_steps && a.flow_K_sym == b.flow_K_sym &&
         a.flow_clamp == b.flow_clamp && a.verify_kato == b.verify_kato &&
         a.verify_subharmonic == b.verify_subharmonic && a.verify_degiorgi == b.verify_degiorgi &&
         a.verify_comparison == b.verify_comparison && a.verify_decay == b.verify_decay &&
         a.verify_positivity == b.verify_positivity && a.verify_energy == b.verify_energy &&
         a.verify_kato_trials == b.verify_kato_trials &&
         a.verify_subharmonic_trials == b.verify_subharmonic_trials &&
         a.verify_decay_min == b.verify_decay_min && a.verify_decay_max == b.verify_decay_max &&
         a.verify_decay_min_r2 == b.verify_decay_min_r2 &&
         a.verify_ordering_slack == b.verify_ordering_slack &&
         a.verify_degiorgi_radius == b.verify_degiorgi_radius && a.sweep_radii == b.sweep_radii &&
         a.sweep_seed_only == b.sweep_seed_only && a.compare_l0_hint == b.compare_l0_hint &&
         a.compare_rho == b.compare_rho && a.seed == b.seed && a.out == b.out;
}

Polynomial parse_polynomial(int dim, const std::string& text) {
  std::vector<Polynomial::Term> terms;
  for (const std::string& t : split(text, ";")) {
    const auto colon = t.find(':');
    if (colon == std::string::npos) parse_fail(0, "polynomial term without ':' in '" + t + "'");
    Polynomial::Term term;
    term.coeff = to_double(trim(t.substr(0, colon)), 0);
    for (const std::string& e : split(t.substr(colon + 1), ", ")) {
      term.exps.push_back(static_cast<int>(to_int(e, 0)));
    }
    if (static_cast<int>(term.exps.size()) != dim) {
      parse_fail(0, "polynomial term '" + t + "' needs " + std::to_string(dim) + " exponents");
    }
    terms.push_back(std::move(term));
  }
  if (terms.empty()) parse_fail(0, "empty polynomial");
  return Polynomial(dim, std::move(terms));
}

std::string format_polynomial(const Polynomial& p) {
  std::string s;
  for (const auto& t : p.terms()) {
    if (!s.empty()) s += "; ";
    s += fmt(t.coeff) + ":";
    for (std::size_t k = 0; k < t.exps.size(); ++k) s += (k ? "," : "") + std::to_string(t.exps[k]);
  }
  return s;
}

namespace {

struct Raw {
  std::string value;
  int line = 0;
};

// Re-raise a polynomial parse failure with the line of its key.
Polynomial poly_at(int dim, const Raw& r) {
  try {
    return parse_polynomial(dim, r.value);
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string prefix = "ParseError: line 0: ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    parse_fail(r.line, msg);
  }
}

void validate(RunConfig& c) {
  const int n = c.dim();
  if (c.group_normals.empty()) {
    if (c.group_dihedral < 1 || c.group_dihedral > 64) invalid("group.dihedral", "must lie in [1, 64]");
  } else {
    for (const Vec& v : c.group_normals) {
      if (v.size() != n) invalid("group.normals", "all normals need the same dimension");
      if (!(v.norm() > 0.0)) invalid("group.normals", "normals must be nonzero");
    }
  }
  if (c.a1.size() == 0) {
    c.a1 = Vec::Zero(n);
    c.a1(0) = 1.0;
  }
  if (c.a1.size() != n) invalid("a1", "dimension must be " + std::to_string(n));
  if (c.potential != "triangle" && c.potential != "polynomial") {
    invalid("potential.kind", "must be triangle or polynomial");
  }
  if (c.potential == "triangle" && n != 2) invalid("potential.kind", "triangle needs dimension 2");
  if (c.potential == "polynomial" && !c.potential_poly) invalid("potential.terms", "required for polynomial");
  if (c.potential == "triangle" && c.potential_poly) invalid("potential.terms", "only for polynomial");
  if (c.potential_c && !(*c.potential_c > 0.0)) invalid("potential.c", "must be positive");
  if (c.potential_q_bar && !(*c.potential_q_bar > 0.0)) invalid("potential.q_bar", "must be positive");
  if (c.potential_M && !(*c.potential_M > 0.0)) invalid("potential.M", "must be positive");
  if (!(c.grid_R > 0.0)) invalid("grid.R", "must be positive");
  if (!(c.grid_h > 0.0) || c.grid_h > c.grid_R / 2) invalid("grid.h", "must lie in (0, R/2]");
  if (c.grid_lattice != "auto" && c.grid_lattice != "cartesian" && c.grid_lattice != "hexagonal") {
    invalid("grid.lattice", "must be auto, cartesian or hexagonal");
  }
  if (c.grid_lattice == "hexagonal" && n != 2) invalid("grid.lattice", "hexagonal needs dimension 2");
  const double bound = c.grid_h * c.grid_h / (2.0 * n);
  if (c.flow_dt && !(*c.flow_dt > 0.0 && *c.flow_dt <= bound)) {
    invalid("flow.dt", "must lie in (0, h^2/(2n)] = (0, " + fmt(bound) + "]");
  }
  if (!(c.flow_tol > 0.0)) invalid("flow.tol", "must be positive");
  if (c.flow_max_steps < 1) invalid("flow.max_steps", "must be at least 1");
  if (c.verify_kato_trials < 20) invalid("verify.kato_trials", "must be at least 20");
  if (c.verify_subharmonic_trials < 1) invalid("verify.subharmonic_trials", "must be at least 1");
  if (!(c.verify_decay_min >= 0.0 && c.verify_decay_max > c.verify_decay_min)) {
    invalid("verify.decay_max", "need 0 <= decay_min < decay_max");
  }
  if (!(c.verify_decay_min_r2 >= 0.0 && c.verify_decay_min_r2 <= 1.0)) {
    invalid("verify.decay_min_r2", "must lie in [0, 1]");
  }
  if (c.verify_ordering_slack && !(*c.verify_ordering_slack >= 0.0)) {
    invalid("verify.ordering_slack", "must be nonnegative");
  }
  if (c.verify_degiorgi_radius && !(*c.verify_degiorgi_radius > 0.0)) {
    invalid("verify.degiorgi_radius", "must be positive");
  }
  if (c.sweep_radii.size() < 3) invalid("sweep.radii", "need at least 3 radii");
  for (double r : c.sweep_radii) {
    if (!(r > 0.0) || c.grid_h > r / 2) invalid("sweep.radii", "each radius must be positive and >= 2h");
  }
  if (!(c.compare_l0_hint > 0.0)) invalid("compare.l0_hint", "must be positive");
  if (!(c.compare_rho > 0.0 && c.compare_rho < 1.0)) invalid("compare.rho", "must lie in (0, 1)");
  if (c.out.empty()) invalid("out", "must not be empty");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  std::map<std::string, Raw> raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_fail(lineno, "empty key");
    if (value.empty()) parse_fail(lineno, "empty value for " + key);
    if (raw.count(key)) parse_fail(lineno, "duplicate key " + key);
    raw[key] = {value, lineno};
  }

  RunConfig c;
  auto num = [](const Raw& r) { return to_double(r.value, r.line); };
  auto uns = [](const Raw& r) { return static_cast<std::size_t>(to_uint(r.value, r.line)); };
  auto flag = [](const Raw& r) { return to_bool(r.value, r.line); };
  const std::map<std::string, std::function<void(const Raw&)>> setters = {
      {"group.dihedral", [&](const Raw& r) { c.group_dihedral = static_cast<int>(to_int(r.value, r.line)); }},
      {"group.normals",
       [&](const Raw& r) {
         for (const std::string& part : split(r.value, ";")) c.group_normals.push_back(to_vec(part, r.line));
       }},
      {"potential.kind", [&](const Raw& r) { c.potential = r.value; }},
      {"potential.terms", [&](const Raw&) {}},
      {"potential.c", [&](const Raw& r) { c.potential_c = num(r); }},
      {"potential.q_bar", [&](const Raw& r) { c.potential_q_bar = num(r); }},
      {"potential.M", [&](const Raw& r) { c.potential_M = num(r); }},
      {"a1", [&](const Raw& r) { c.a1 = to_vec(r.value, r.line); }},
      {"q.H", [&](const Raw&) {}},
      {"grid.R", [&](const Raw& r) { c.grid_R = num(r); }},
      {"grid.h", [&](const Raw& r) { c.grid_h = num(r); }},
      {"grid.lattice", [&](const Raw& r) { c.grid_lattice = r.value; }},
      {"flow.dt", [&](const Raw& r) { c.flow_dt = num(r); }},
      {"flow.tol", [&](const Raw& r) { c.flow_tol = num(r); }},
      {"flow.max_steps", [&](const Raw& r) { c.flow_max_steps = uns(r); }},
      {"flow.K_sym", [&](const Raw& r) { c.flow_K_sym = uns(r); }},
      {"flow.clamp", [&](const Raw& r) { c.flow_clamp = flag(r); }},
      {"verify.kato", [&](const Raw& r) { c.verify_kato = flag(r); }},
      {"verify.subharmonic", [&](const Raw& r) { c.verify_subharmonic = flag(r); }},
      {"verify.degiorgi", [&](const Raw& r) { c.verify_degiorgi = flag(r); }},
      {"verify.comparison", [&](const Raw& r) { c.verify_comparison = flag(r); }},
      {"verify.decay", [&](const Raw& r) { c.verify_decay = flag(r); }},
      {"verify.positivity", [&](const Raw& r) { c.verify_positivity = flag(r); }},
      {"verify.energy", [&](const Raw& r) { c.verify_energy = flag(r); }},
      {"verify.kato_trials", [&](const Raw& r) { c.verify_kato_trials = uns(r); }},
      {"verify.subharmonic_trials", [&](const Raw& r) { c.verify_subharmonic_trials = uns(r); }},
      {"verify.decay_min", [&](const Raw& r) { c.verify_decay_min = num(r); }},
      {"verify.decay_max", [&](const Raw& r) { c.verify_decay_max = num(r); }},
      {"verify.decay_min_r2", [&](const Raw& r) { c.verify_decay_min_r2 = num(r); }},
      {"verify.ordering_slack", [&](const Raw& r) { c.verify_ordering_slack = num(r); }},
      {"verify.degiorgi_radius", [&](const Raw& r) { c.verify_degiorgi_radius = num(r); }},
      {"sweep.radii",
       [&](const Raw& r) {
         c.sweep_radii.clear();
         for (const std::string& p : split(r.value, " ,\t")) c.sweep_radii.push_back(to_double(p, r.line));
       }},
      {"sweep.seed_only", [&](const Raw& r) { c.sweep_seed_only = flag(r); }},
      {"compare.l0_hint", [&](const Raw& r) { c.compare_l0_hint = num(r); }},
      {"compare.rho", [&](const Raw& r) { c.compare_rho = num(r); }},
      {"seed", [&](const Raw& r) { c.seed = to_uint(r.value, r.line); }},
      {"out", [&](const Raw& r) { c.out = r.value; }},
  };
  for (const auto& [key, r] : raw) {
    const auto it = setters.find(key);
    if (it == setters.end()) parse_fail(r.line, "unknown key " + key);
    it->second(r);
  }
  if (raw.count("group.dihedral") && raw.count("group.normals")) {
    invalid("group.normals", "give either group.dihedral or group.normals");
  }
  if (!c.group_normals.empty()) c.group_dihedral = 0;
  // Polynomials need the dimension, known only once the group is read.
  if (raw.count("potential.terms")) c.potential_poly = poly_at(c.dim(), raw.at("potential.terms"));
  if (raw.count("q.H")) c.q_H = poly_at(c.dim(), raw.at("q.H"));
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::string s;
  auto put = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  if (c.group_normals.empty()) {
    put("group.dihedral", std::to_string(c.group_dihedral));
  } else {
    std::string v;
    for (std::size_t k = 0; k < c.group_normals.size(); ++k) v += (k ? "; " : "") + fmt(c.group_normals[k]);
    put("group.normals", v);
  }
  put("potential.kind", c.potential);
  if (c.potential_poly) put("potential.terms", format_polynomial(*c.potential_poly));
  if (c.potential_c) put("potential.c", fmt(*c.potential_c));
  if (c.potential_q_bar) put("potential.q_bar", fmt(*c.potential_q_bar));
  if (c.potential_M) put("potential.M", fmt(*c.potential_M));
  if (c.a1.size()) put("a1", fmt(c.a1));
  if (c.q_H) put("q.H", format_polynomial(*c.q_H));
  put("grid.R", fmt(c.grid_R));
  put("grid.h", fmt(c.grid_h));
  put("grid.lattice", c.grid_lattice);
  if (c.flow_dt) put("flow.dt", fmt(*c.flow_dt));
  put("flow.tol", fmt(c.flow_tol));
  put("flow.max_steps", std::to_string(c.flow_max_steps));
  put("flow.K_sym", std::to_string(c.flow_K_sym));
  put("flow.clamp", b(c.flow_clamp));
  put("verify.kato", b(c.verify_kato));
  put("verify.subharmonic", b(c.verify_subharmonic));
  put("verify.degiorgi", b(c.verify_degiorgi));
  put("verify.comparison", b(c.verify_comparison));
  put("verify.decay", b(c.verify_decay));
  put("verify.positivity", b(c.verify_positivity));
  put("verify.energy", b(c.verify_energy));
  put("verify.kato_trials", std::to_string(c.verify_kato_trials));
  put("verify.subharmonic_trials", std::to_string(c.verify_subharmonic_trials));
  put("verify.decay_min", fmt(c.verify_decay_min));
  put("verify.decay_max", fmt(c.verify_decay_max));
  put("verify.decay_min_r2", fmt(c.verify_decay_min_r2));
  if (c.verify_ordering_slack) put("verify.ordering_slack", fmt(*c.verify_ordering_slack));
  if (c.verify_degiorgi_radius) put("verify.degiorgi_radius", fmt(*c.verify_degiorgi_radius));
  std::string radii;
  for (std::size_t k = 0; k < c.sweep_radii.size(); ++k) radii += (k ? " " : "") + fmt(c.sweep_radii[k]);
  put("sweep.radii", radii);
  put("sweep.seed_only", b(c.sweep_seed_only));
  put("compare.l0_hint", fmt(c.compare_l0_hint));
  put("compare.rho", fmt(c.compare_rho));
  put("seed", std::to_string(c.seed));
  put("out", c.out);
  return s;
}

Problem build_problem(const RunConfig& c) {
  Problem p;
  if (c.group_normals.empty()) {
    p.group = dihedral_group(c.group_dihedral);
  } else {
    std::vector<Reflection> gens;
    for (const Vec& v : c.group_normals) gens.push_back(Reflection{v.normalized()});
    p.group = generate_group(c.dim(), gens);
  }
  p.orbit = orbit_and_stabilizer(p.group, c.a1);
  PotentialOverrides ov{c.potential_c, c.potential_q_bar, c.potential_M};
  if (c.potential == "triangle") {
    p.spec = make_triangle_potential();
    if (ov.c) p.spec.c = *ov.c;
    if (ov.q_bar) p.spec.q_bar = *ov.q_bar;
    if (ov.M) p.spec.M = *ov.M;
  } else {
    p.spec = make_polynomial_potential(*c.potential_poly, p.orbit, ov);
  }
  p.q = make_q(c.a1, p.spec.M, c.q_H);
  if (c.grid_lattice == "auto") {
    p.lattice = preferred_lattice(p.group);
  } else {
    p.lattice = c.grid_lattice == "hexagonal" ? Lattice::Hexagonal : Lattice::Cartesian;
  }
  p.flow.dt = c.flow_dt;
  p.flow.max_steps = c.flow_max_steps;
  p.flow.residual_tol = c.flow_tol;
  p.flow.K_sym = c.flow_K_sym;
  p.flow.clamp = c.flow_clamp;
  return p;
}

}  // namespace equivac
