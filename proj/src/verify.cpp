#include "equivac/verify.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "equivac/error.hpp"

namespace equivac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bit-reproducible uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t trial_seed(std::uint64_t root, std::uint64_t k) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vec node_vec(const Mat& m, std::size_t i) { return m.col(static_cast<Eigen::Index>(i)); }

std::span<const double> col_span(const Mat& m, std::size_t i) {
  return {m.col(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(m.rows())};
}

Vec nodal_q(const VectorField& u, const QSpec& q) { return monitor_field(u, q).values; }

Vec nodal_w(const VectorField& u, const PotentialSpec& spec) {
  Vec w(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) w(i) = spec.W->value(col_span(u.values, static_cast<std::size_t>(i)));
  return w;
}

// <Delta u, Q_u(u)> nodewise.
Vec kato_drift(const VectorField& u, const QSpec& q) {
  const VectorField lap = laplacian(u);
  const auto n = static_cast<std::size_t>(u.values.rows());
  Vec out(u.size());
  std::vector<double> g(n);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    q.gradient(col_span(u.values, static_cast<std::size_t>(i)), g);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += lap.values(static_cast<Eigen::Index>(k), i) * g[k];
    out(i) = s;
  }
  return out;
}

ScalarField bump_field(const std::shared_ptr<const BallGrid>& grid, const Bump& b) {
  ScalarField f(grid);
  const BallGrid& g = *grid;
  for (std::size_t i = 0; i < g.node_count; ++i) f.values(static_cast<Eigen::Index>(i)) = b(g.point(i));
  return f;
}

double dist_boundary(const Vec& x, const OrbitInfo& orbit, double R) {
  const RegionGeometry geo = region_geometry(x, orbit);
  if (!geo.in_D) return 0.0;
  return std::min(geo.dist_D, R - x.norm());
}

}  // namespace

double Bump::operator()(const Vec& x) const {
  double v = 1.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double t = (x(k) - center(k)) / width;
    if (std::abs(t) >= 1.0) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * t);
    v *= c * c;
  }
  return v;
}

std::vector<Bump> random_bumps(const BallGrid& grid, std::size_t count, std::uint64_t seed,
                               const std::function<bool(std::size_t node)>& admissible) {
  const double w_min = 4.0 * grid.h;
  const double w_max = std::max(w_min, grid.R / 4.0);
  const double reach = std::sqrt(static_cast<double>(grid.dim));
  std::vector<Bump> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::mt19937_64 rng(trial_seed(seed, k));
    bool placed = false;
    for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
      Bump b;
      b.width = w_min + (w_max - w_min) * uniform01(rng);
      b.center.resize(grid.dim);
      for (int d = 0; d < grid.dim; ++d) b.center(d) = grid.R * (2.0 * uniform01(rng) - 1.0);
      if (b.center.norm() + b.width * reach > grid.R) continue;
      const std::vector<std::size_t> near = grid.nodes_in_ball(b.center, b.width * reach);
      bool ok = true;
      std::size_t support = 0;
      for (std::size_t i : near) {
        if (b(grid.point(i)) <= 0.0) continue;
        ++support;
        if (!admissible(i)) {
          ok = false;
          break;
        }
      }
      if (ok && support > 0) {
        out.push_back(std::move(b));
        placed = true;
      }
    }
    if (!placed) {
      throw Error(ErrorCode::InsufficientNodes, "could not place test bump " + std::to_string(k));
    }
  }
  return out;
}

KatoCheck kato_check(const VectorField& u, const QSpec& q, std::size_t trials, std::uint64_t seed) {
  if (trials < 20) throw Error(ErrorCode::InvalidArgument, "kato_check needs at least 20 trials");
  const BallGrid& g = *u.grid;
  const Vec Q = nodal_q(u, q);
  ScalarField Qf(u.grid);
  Qf.values = Q;
  const Vec lapQ = laplacian(Qf).values;
  const Vec drift = kato_drift(u, q);
  const double vol = g.cell_volume();

  const auto bumps = random_bumps(g, trials, seed, [&](std::size_t i) { return !g.is_boundary[i]; });
  KatoCheck out;
  out.tol = 10.0 * g.h * g.h;  // scale h max|psi|, max|psi| = 1
  out.min = kInf;
  for (const Bump& b : bumps) {
    const ScalarField psi = bump_field(u.grid, b);
    const Vec lapPsi = laplacian(psi).values;
    const double weak = vol * (Q.dot(lapPsi) - drift.dot(psi.values));
    const double strong = vol * (lapQ - drift).dot(psi.values);
    // Rounding floor: size of the individual terms.
    const double terms = vol * (Q.cwiseAbs().dot(lapPsi.cwiseAbs()) + drift.cwiseAbs().dot(psi.values));
    out.values.push_back(weak);
    out.strong_values.push_back(strong);
    out.min = std::min(out.min, weak);
    const double denom = std::max(std::abs(strong), 1e-6 * terms);
    if (denom > 0.0) {
      out.max_strong_weak_rel = std::max(out.max_strong_weak_rel, std::abs(weak - strong) / denom);
    }
  }
  out.pass = out.min >= -out.tol;
  return out;
}

SubharmonicCheck subharmonic_check(const VectorField& u, const QSpec& q, const OrbitInfo& orbit,
                                   std::size_t trials, bool equilibrium, std::uint64_t seed,
                                   double sign) {
  const BallGrid& g = *u.grid;
  ScalarField Qf(u.grid);
  Qf.values = sign * nodal_q(u, q);
  const auto bumps = random_bumps(g, trials, seed, [&](std::size_t i) {
    return !g.is_boundary[i] && dist_boundary(g.point(i), orbit, g.R) > 2.0 * g.h;
  });
  SubharmonicCheck out;
  if (!equilibrium) out.warning = "NotEquilibrium: field has no converged residual flag";
  out.tol = 10.0 * g.h * g.h;
  out.min = kInf;
  for (const Bump& b : bumps) {
    const double v = -grid_dirichlet(Qf, bump_field(u.grid, b));
    out.values.push_back(v);
    out.min = std::min(out.min, v);
  }
  out.pass = out.min >= -out.tol;
  return out;
}

DeGiorgiResult degiorgi_from_values(const BallGrid& grid, const Vec& Qv, const Vec& Wv,
                                    double q_bar, double Q_bar, const OrbitInfo& orbit,
                                    const Vec& center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  const double slack = 1e-12 * std::max(1.0, grid.R);
  if (center.norm() + radius > grid.R + slack || region_geometry(center, orbit).dist_D < radius - slack) {
    throw Error(ErrorCode::BallOutsideD, "ball of radius " + std::to_string(radius) + " leaves D_R");
  }
  DeGiorgiResult out;
  out.center = center;
  out.radius = radius;
  out.q_bar = q_bar;
  out.Q_bar = Q_bar;
  const double half = 0.5 * q_bar;
  const double scale = Q_bar - half;

  const double grow = 1.0 + 1e-12;
  std::size_t below = 0;
  out.degiorgi_sup = -kInf;
  out.eps0 = kInf;
  std::vector<double> rad(grid.node_count);
  for (std::size_t i = 0; i < grid.node_count; ++i) rad[i] = (grid.point(i) - center).norm();
  for (std::size_t i = 0; i < grid.node_count; ++i) {
    if (rad[i] > radius * grow) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    const double v = (Qv(ii) - half) / scale;
    ++out.ball_nodes;
    if (v <= 0.0) ++below;
    if (v >= 0.0) out.eps0 = std::min(out.eps0, Wv(ii));
    if (rad[i] <= 0.5 * radius * grow) {
      ++out.half_nodes;
      out.degiorgi_sup = std::max(out.degiorgi_sup, v);
    }
  }
  if (out.ball_nodes == 0 || out.half_nodes == 0) {
    throw Error(ErrorCode::InsufficientNodes, "De Giorgi ball contains no grid nodes");
  }
  out.measure_fraction = static_cast<double>(below) / static_cast<double>(out.ball_nodes);
  if (out.eps0 == kInf) {
    out.eps0_from_ball = false;
    for (std::size_t i = 0; i < grid.node_count; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (Qv(ii) >= half && region_geometry(grid.point(i), orbit).in_D) out.eps0 = std::min(out.eps0, Wv(ii));
    }
  }
  if (out.eps0 == kInf) {
    out.eps0 = 0.0;
    out.eps0_defined = false;
  }

  out.mu = out.degiorgi_sup;
  const double ratio = half / scale;
  if (out.mu <= 0.0) {
    out.k_iter = 1;
  } else if (out.mu < 1.0) {
    out.k_iter = std::max(1, static_cast<int>(std::floor(std::log(ratio) / std::log(out.mu))) + 1);
    while (out.k_iter > 1 && std::pow(out.mu, out.k_iter - 1) < ratio) --out.k_iter;
    while (!(std::pow(out.mu, out.k_iter) < ratio)) ++out.k_iter;
  }

  const double mu_pos = std::max(out.mu, 0.0);
  double prev_bound = Q_bar;
  for (int k = 0; k <= out.k_iter; ++k) {
    DeGiorgiLevel lv;
    lv.level = k;
    lv.radius = radius / std::ldexp(1.0, k);
    lv.bound = half + std::pow(mu_pos, k) * scale;
    lv.sup_Q = -kInf;
    for (std::size_t i = 0; i < grid.node_count; ++i) {
      if (rad[i] > lv.radius * grow) continue;
      ++lv.nodes;
      lv.sup_Q = std::max(lv.sup_Q, Qv(static_cast<Eigen::Index>(i)));
    }
    if (lv.nodes == 0) break;
    lv.sup_vhat = (lv.sup_Q - half) / (prev_bound - half);
    prev_bound = lv.bound;
    out.levels.push_back(lv);
  }

  out.levels_decreasing = true;
  for (std::size_t k = 1; k < out.levels.size(); ++k) {
    if (out.levels[k - 1].sup_Q < q_bar) break;
    if (!(out.levels[k].sup_Q < out.levels[k - 1].sup_Q)) out.levels_decreasing = false;
  }
  out.final_below_q_bar = out.k_iter > 0 && !out.levels.empty() &&
                          out.levels.back().level == out.k_iter && out.levels.back().sup_Q < q_bar &&
                          out.levels.back().bound < q_bar;
  for (const DeGiorgiLevel& lv : out.levels) {
    if (lv.sup_Q <= q_bar) {
      out.certified_radius = lv.radius;
      break;
    }
  }
  return out;
}

DeGiorgiResult measure_and_degiorgi(const VectorField& u, const QSpec& q, const PotentialSpec& spec,
                                    const OrbitInfo& orbit, const Vec& center, double radius) {
  return degiorgi_from_values(*u.grid, nodal_q(u, q), nodal_w(u, spec), spec.q_bar, q.Q_max, orbit,
                              center, radius);
}

OrderingResult comparison_ordering_check(const VectorField& u, const QSpec& q,
                                         const PotentialSpec& spec, const SigmaPack& pack,
                                         const OrbitInfo& orbit, const DeGiorgiResult& seed,
                                         double slack) {
  if (!(seed.certified_radius > 0.0)) {
    throw Error(ErrorCode::SeedBallRejected, "no level of the seed ball has sup Q <= q_bar");
  }
  const BallGrid& g = *u.grid;
  const RadialProfile& sigma = pack.sigma;
  OrderingResult out;
  out.slack = slack;
  out.l = sigma.params.l;
  out.L = sigma.params.L;
  out.seed_radius = seed.certified_radius;
  const double reach = out.l + pack.constants.delta_prime;

  const Vec Q = nodal_q(u, q);
  std::vector<double> dist(g.node_count);
  std::vector<std::uint8_t> in_D(g.node_count);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const Vec x = g.point(i);
    in_D[i] = region_geometry(x, orbit).in_D;
    dist[i] = dist_boundary(x, orbit, g.R);
  }

  // Centers whose outer ball stays in D_R, then those slid in from the seed.
  std::vector<std::uint8_t> admissible(g.node_count), reachable(g.node_count);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    if (!in_D[i] || dist[i] < out.L) continue;
    admissible[i] = 1;
    ++out.admissible_centers;
    if ((g.point(i) - seed.center).norm() <= seed.certified_radius - out.l) {
      reachable[i] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (int d = 0; d < g.stencil; ++d) {
      const std::int32_t j = g.neighbor(i, d);
      if (j < 0) continue;
      const auto jj = static_cast<std::size_t>(j);
      if (admissible[jj] && !reachable[jj]) {
        reachable[jj] = 1;
        queue.push_back(jj);
      }
    }
  }

  std::vector<std::uint8_t> covered(g.node_count), violated(g.node_count);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    if ((g.point(i) - seed.center).norm() <= seed.certified_radius) covered[i] = 1;
  }
  const int stride = std::max(1, static_cast<int>(std::lround(out.l / (8.0 * g.h))));
  for (std::size_t c = 0; c < g.node_count; ++c) {
    if (!reachable[c]) continue;
    ++out.reachable_centers;
    const Vec xi = g.point(c);
    for (std::size_t i : g.nodes_in_ball(xi, reach)) covered[i] = 1;
    bool sample = true;
    for (int k = 0; k < g.dim; ++k) {
      if (g.index[c * static_cast<std::size_t>(g.dim) + static_cast<std::size_t>(k)] % stride != 0) sample = false;
    }
    if (!sample) continue;
    ++out.centers_checked;
    for (std::size_t i : g.nodes_in_ball(xi, out.L)) {
      if (Q(static_cast<Eigen::Index>(i)) > sigma.value((g.point(i) - xi).norm()) + slack) violated[i] = 1;
    }
  }
  out.vacuous = out.reachable_centers == 0;
  out.violations = static_cast<std::size_t>(std::count(violated.begin(), violated.end(), 1));

  std::size_t d_nodes = 0, d_covered = 0;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    if (!in_D[i]) continue;
    ++d_nodes;
    if (covered[i]) {
      ++d_covered;
    } else {
      out.d0 = std::max(out.d0, dist[i]);
    }
  }
  out.coverage = d_nodes ? static_cast<double>(d_covered) / static_cast<double>(d_nodes) : 0.0;

  ScalarField Qf(u.grid);
  Qf.values = Q;
  const Vec lapQ = laplacian(Qf).values;
  const double c2 = spec.c * spec.c;
  out.laplace_q_min = kInf;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (!in_D[i] || g.is_boundary[i] || dist[i] <= 2.0 * g.h || Q(ii) > spec.q_bar) continue;
    ++out.laplace_q_nodes;
    const double m = lapQ(ii) - c2 * Q(ii);
    out.laplace_q_min = std::min(out.laplace_q_min, m);
    if (m < -slack) ++out.laplace_q_violations;
  }
  if (out.laplace_q_nodes == 0) out.laplace_q_min = 0.0;
  return out;
}

std::vector<std::pair<double, double>> decay_scatter(const VectorField& u, const OrbitInfo& orbit,
                                                     double d_min, double d_max) {
  const BallGrid& g = *u.grid;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const RegionGeometry geo = region_geometry(g.point(i), orbit);
    if (!geo.in_D || geo.dist_D < d_min || geo.dist_D > d_max) continue;
    const double e = (node_vec(u.values, i) - orbit.base_point).norm();
    if (e <= 1e-14) continue;
    pts.emplace_back(geo.dist_D, std::log(e));
  }
  return pts;
}

DecayFit decay_fit(const VectorField& u, const OrbitInfo& orbit, double d_min, double d_max) {
  const auto pts = decay_scatter(u, orbit, d_min, d_max);
  if (pts.size() < 50) {
    throw Error(ErrorCode::InsufficientNodes,
                std::to_string(pts.size()) + " nodes in the decay band, need 50");
  }
  const double m = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0;
  for (const auto& [x, y] : pts) sse += std::pow(y - intercept - slope * x, 2);
  DecayFit out;
  out.k = -slope;
  out.K = std::exp(intercept);
  out.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  out.nodes = pts.size();
  return out;
}

SweepResult energy_scaling_sweep(const std::vector<double>& radii, const PotentialSpec& spec,
                                 const ReflectionGroup& group, const OrbitInfo& orbit,
                                 const SweepParams& params) {
  if (radii.size() < 3) throw Error(ErrorCode::InvalidArgument, "energy sweep needs at least 3 radii");
  SweepResult out;
  const Lattice lattice = preferred_lattice(group);
  for (double R : radii) {
    const auto grid = build_grid(group.dim, R, params.h, lattice);
    const VectorField u0 = seed_affine(grid, group, orbit);
    double J = 0.0;
    if (params.seed_only) {
      J = energy(u0, spec);
      out.steps.push_back(0);
      out.residuals.push_back(pde_residual(u0, spec));
    } else {
      const FlowResult r = run_to_equilibrium(u0, spec, params.flow, group);
      if (!r.converged) {
        throw Error(ErrorCode::NoConvergence, "R = " + std::to_string(R) + " stopped at residual " +
                                                  std::to_string(r.residual));
      }
      J = r.energy_history.back();
      out.steps.push_back(r.steps);
      out.residuals.push_back(r.residual);
    }
    out.radii.push_back(R);
    out.energies.push_back(J);
  }
  const double m = static_cast<double>(radii.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = std::log(out.radii[i]), y = std::log(out.energies[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.intercept = (sy - out.slope * sx) / m;
  return out;
}

PositivityCheck positivity_check(const FlowResult& history, const ReflectionGroup& group) {
  PositivityCheck out;
  const BallGrid& g = *history.field.grid;
  out.tol = 5.0 * g.h;
  out.positivity_min = positivity_min(history.field, group);
  for (const PositivitySample& s : history.positivity_samples) {
    out.positivity_min = std::min(out.positivity_min, s.value);
  }
  out.strong_margin = strong_positivity_margin(history.field, group, g.h);
  out.pass = out.positivity_min >= -out.tol;
  out.strong_pass = out.strong_margin > 0.0;
  return out;
}

}  // namespace equivac
