#include <cmath>
#include <numbers>

#include "doctest.h"
#include "equivac/error.hpp"
#include "equivac/verify.hpp"

using namespace equivac;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct Triangle {
  PotentialSpec spec = make_triangle_potential();
  ReflectionGroup group = dihedral_group(3);
  OrbitInfo orbit = orbit_and_stabilizer(group, v2(1, 0));
  QSpec q = make_q(v2(1, 0), spec.M);
};

VectorField constant_field(std::shared_ptr<const BallGrid> g, const Vec& value) {
  VectorField u(g, 2);
  for (Eigen::Index i = 0; i < u.size(); ++i) u.values.col(i) = value;
  return u;
}

const FlowResult& small_equilibrium() {
  static const FlowResult r = [] {
    const Triangle t;
    const auto g = build_grid(2, 4.0, 0.1, preferred_lattice(t.group));
    FlowConfig cfg;
    cfg.residual_tol = 1e-6;
    return run_to_equilibrium(seed_affine(g, t.group, t.orbit), t.spec, cfg, t.group);
  }();
  return r;
}

}  // namespace

TEST_CASE("bumps are nonnegative, unit height and respect the predicate") {
  const auto g = build_grid(2, 4.0, 0.1);
  const auto bumps = random_bumps(*g, 30, 5, [&](std::size_t i) { return g->point(i)(0) > 0.5; });
  REQUIRE(bumps.size() == 30);
  for (const Bump& b : bumps) {
    CHECK(b.width >= 0.4);
    CHECK(b.width <= 1.0);
    CHECK(b(b.center) == doctest::Approx(1.0));
    for (std::size_t i = 0; i < g->node_count; ++i) {
      const double v = b(g->point(i));
      CHECK(v >= 0.0);
      if (v > 0.0) CHECK(g->point(i)(0) > 0.5);
    }
  }
  const auto again = random_bumps(*g, 30, 5, [&](std::size_t i) { return g->point(i)(0) > 0.5; });
  for (std::size_t k = 0; k < bumps.size(); ++k) {
    CHECK(again[k].width == bumps[k].width);
    CHECK(again[k].center == bumps[k].center);
  }
  CHECK_THROWS_AS(random_bumps(*g, 1, 5, [](std::size_t) { return false; }), Error);
}

TEST_CASE("Kato pairing") {
  const Triangle t;
  const auto g = build_grid(2, 4.0, 0.1);

  SUBCASE("constant a1 gives zero") {
    const KatoCheck k = kato_check(constant_field(g, v2(1, 0)), t.q, 20);
    for (double v : k.values) CHECK(v == 0.0);
    CHECK(k.pass);
  }

  SUBCASE("smooth field away from a1: weak and strong forms agree") {
    VectorField u(g, 2);
    for (std::size_t i = 0; i < g->node_count; ++i) {
      const Vec x = g->point(i);
      u.values.col(static_cast<Eigen::Index>(i)) =
          v2(-2.0 + 0.3 * std::sin(x(0)) * std::cos(x(1)), 0.4 * x(1) + 0.1 * x(0) * x(0));
    }
    const KatoCheck k = kato_check(u, t.q, 50);
    CHECK(k.min >= -1e-8);
    CHECK(k.max_strong_weak_rel <= 1e-6);
    CHECK(k.pass);
  }

  SUBCASE("field crossing a1 along a line") {
    // Q(u) = |x1 - 0.25|: Delta Q = 2 delta on the line, Delta u = 0.
    VectorField u(g, 2);
    for (std::size_t i = 0; i < g->node_count; ++i) {
      u.values.col(static_cast<Eigen::Index>(i)) = v2(1.0 + g->point(i)(0) - 0.25, 0.0);
    }
    const KatoCheck k = kato_check(u, t.q, 50, 3);
    CHECK(k.pass);
    CHECK(k.min >= -1e-12);
    const auto bumps = random_bumps(*g, 50, 3, [&](std::size_t i) { return !g->is_boundary[i]; });
    int crossing = 0;
    for (std::size_t j = 0; j < bumps.size(); ++j) {
      const Bump& b = bumps[j];
      const double s = (0.25 - b.center(0)) / b.width;
      if (std::abs(s) >= 1.0 + g->h / b.width) {
        CHECK(std::abs(k.values[j]) <= 1e-12);
        continue;
      }
      // The kink sits between the node columns x1 = 0.2 and 0.3, each
      // carrying half of Delta Q = 2 delta; int cos^2 dy over the support is w.
      auto column = [&](double x1) {
        const double t = (x1 - b.center(0)) / b.width;
        if (std::abs(t) >= 1.0) return 0.0;
        const double c = std::cos(0.5 * std::numbers::pi * t);
        return c * c;
      };
      const double oracle = b.width * (column(0.2) + column(0.3));
      if (oracle > 0.1) {
        ++crossing;
        CHECK(k.values[j] > 0.0);
        CHECK(std::abs(k.values[j] - oracle) <= 0.02 * oracle);
      }
    }
    CHECK(crossing >= 3);
  }

  CHECK_THROWS_AS(kato_check(constant_field(g, v2(1, 0)), t.q, 19), Error);
}

TEST_CASE("subharmonicity of Q on an equilibrium") {
  const Triangle t;
  const FlowResult& r = small_equilibrium();
  REQUIRE(r.converged);

  const SubharmonicCheck s = subharmonic_check(r.field, t.q, t.orbit, 100, true);
  CHECK(s.pass);
  CHECK(s.warning.empty());
  CHECK(s.tol == doctest::Approx(0.1));

  const SubharmonicCheck flipped = subharmonic_check(r.field, t.q, t.orbit, 100, true, 2, -1.0);
  CHECK_FALSE(flipped.pass);
  CHECK(flipped.min < -flipped.tol);

  const auto g = r.field.grid;
  const SubharmonicCheck zero = subharmonic_check(constant_field(g, v2(1, 0)), t.q, t.orbit, 20, false);
  for (double v : zero.values) CHECK(v == 0.0);
  CHECK_FALSE(zero.warning.empty());
}

TEST_CASE("De Giorgi measure and sup on a closed-form field") {
  const ReflectionGroup trivial = generate_group(2, {});
  const OrbitInfo whole = orbit_and_stabilizer(trivial, v2(1, 0));
  const auto g = build_grid(2, 4.0, 0.05);
  const double q_bar = 0.234, Q_bar = 2.05, half = q_bar / 2, scale = Q_bar - half;
  const double A = 0.8, t0 = 0.3, radius = 2.0;
  Vec Q(static_cast<Eigen::Index>(g->node_count));
  const Vec W = Vec::Zero(static_cast<Eigen::Index>(g->node_count));
  for (std::size_t i = 0; i < g->node_count; ++i) {
    const double y2 = g->point(i).squaredNorm() / (radius * radius);
    Q(static_cast<Eigen::Index>(i)) = half + scale * A * (y2 - t0);
  }
  const DeGiorgiResult d = degiorgi_from_values(*g, Q, W, q_bar, Q_bar, whole, v2(0, 0), radius);
  // |{|y|^2 <= t}| / |B_1| = t in the plane.
  CHECK(std::abs(d.measure_fraction - t0) <= 2.0 / std::sqrt(static_cast<double>(d.ball_nodes)));
  CHECK(d.degiorgi_sup == doctest::Approx(A * (0.25 - t0)).epsilon(1e-6));
  CHECK(d.k_iter == 1);
  CHECK(d.final_below_q_bar);
  // v_hat > 0 near |y| = 1, so the first certified level is the half ball.
  CHECK(d.certified_radius == radius / 2);

  const Vec minus = Vec::Constant(Q.size(), half - scale);
  const DeGiorgiResult m = degiorgi_from_values(*g, minus, W, q_bar, Q_bar, whole, v2(0, 0), radius);
  CHECK(m.measure_fraction == 1.0);
  CHECK(m.degiorgi_sup == doctest::Approx(-1.0));
  CHECK_FALSE(m.eps0_defined);

  // Constant v_hat = 1/2: k_iter is the first k with 2^-k < half / scale.
  const Vec mid = Vec::Constant(Q.size(), half + 0.5 * scale);
  const DeGiorgiResult c = degiorgi_from_values(*g, mid, W, q_bar, Q_bar, whole, v2(0, 0), radius);
  int k = 1;
  while (!(std::pow(0.5, k) < half / scale)) ++k;
  CHECK(c.mu == doctest::Approx(0.5));
  CHECK(c.k_iter == k);
  REQUIRE(c.levels.size() == static_cast<std::size_t>(k + 1));
  CHECK_FALSE(c.levels_decreasing);
  CHECK_FALSE(c.final_below_q_bar);
  CHECK(c.certified_radius == 0.0);
  for (int j = 1; j <= k; ++j) {
    CHECK(c.levels[static_cast<std::size_t>(j)].radius == doctest::Approx(radius / std::pow(2.0, j)));
    CHECK(c.levels[static_cast<std::size_t>(j)].bound == doctest::Approx(half + std::pow(0.5, j) * scale));
  }
}

TEST_CASE("De Giorgi on the equilibrium") {
  const Triangle t;
  const FlowResult& r = small_equilibrium();
  const DeGiorgiResult d = measure_and_degiorgi(r.field, t.q, t.spec, t.orbit, v2(2, 0), 1.0);
  CHECK(d.measure_fraction >= 0.9);
  CHECK(d.degiorgi_sup < 1.0);
  CHECK(d.eps0 > 0.0);
  CHECK(d.levels_decreasing);
  CHECK(d.final_below_q_bar);
  CHECK(d.certified_radius > 0.0);

  try {
    measure_and_degiorgi(r.field, t.q, t.spec, t.orbit, v2(2, 0), 1.9);
    FAIL("expected BallOutsideD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BallOutsideD);
  }
}

TEST_CASE("comparison ordering") {
  const Triangle t;
  const SigmaPack pack = assemble_sigma(2, t.spec.c, t.spec.q_bar, t.q.Q_max, 1.0);

  SUBCASE("constant a1 on the desk-scale ball is vacuous") {
    const auto g = build_grid(2, 8.0, 0.1, Lattice::Hexagonal);
    const VectorField u = constant_field(g, v2(1, 0));
    const DeGiorgiResult d = measure_and_degiorgi(u, t.q, t.spec, t.orbit, v2(4, 0), 2.0);
    const OrderingResult o = comparison_ordering_check(u, t.q, t.spec, pack, t.orbit, d, 0.5);
    CHECK(o.violations == 0);
    CHECK(o.vacuous);
    CHECK(o.admissible_centers == 0);
    CHECK(o.laplace_q_violations == 0);
    CHECK(o.laplace_q_nodes > 0);
  }

  SUBCASE("seed rejected for a far field") {
    const auto g = build_grid(2, 8.0, 0.2, Lattice::Hexagonal);
    const VectorField u = constant_field(g, v2(-1, 0));
    const DeGiorgiResult d = measure_and_degiorgi(u, t.q, t.spec, t.orbit, v2(4, 0), 2.0);
    try {
      comparison_ordering_check(u, t.q, t.spec, pack, t.orbit, d, 0.5);
      FAIL("expected SeedBallRejected");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SeedBallRejected);
    }
  }

  SUBCASE("large ball: sliding balls cover all but a strip of width about lambda") {
    const ReflectionGroup trivial = generate_group(2, {});
    const OrbitInfo whole = orbit_and_stabilizer(trivial, v2(1, 0));
    const double R = 60.0;
    const auto g = build_grid(2, R, 0.5);
    VectorField u(g, 2);
    for (std::size_t i = 0; i < g->node_count; ++i) {
      const double s = std::max(0.0, g->point(i).norm() - 50.0) / 10.0;
      u.values.col(static_cast<Eigen::Index>(i)) = v2(1.0 + s, 0.0);
    }
    const DeGiorgiResult d = measure_and_degiorgi(u, t.q, t.spec, whole, v2(0, 0), 20.0);
    REQUIRE(d.certified_radius == 20.0);
    const OrderingResult o = comparison_ordering_check(u, t.q, t.spec, pack, whole, d, 1e-9);
    CHECK_FALSE(o.vacuous);
    CHECK(o.violations == 0);
    CHECK(o.centers_checked > 0);
    CHECK(o.reachable_centers == o.admissible_centers);
    // Covered: |x| <= R - L + l + delta', so d0 is lambda up to a cell.
    CHECK(std::abs(o.d0 - pack.constants.lambda) <= 0.5 + 1e-9);

    // A bump of Q in the middle breaks the ordering; more slack never adds violations.
    VectorField bad = u;
    for (std::size_t i : g->nodes_in_ball(v2(0, 0), 1.0)) bad.values(0, static_cast<Eigen::Index>(i)) = 1.2;
    std::size_t prev = g->node_count + 1;
    for (double slack : {0.0, 0.05, 0.1, 0.3}) {
      const OrderingResult b = comparison_ordering_check(bad, t.q, t.spec, pack, whole, d, slack);
      CHECK(b.violations <= prev);
      prev = b.violations;
      if (slack == 0.0) CHECK(b.violations > 0);
    }
    CHECK(prev == 0);
  }
}

TEST_CASE("decay fit") {
  const Triangle t;
  const auto g = build_grid(2, 8.0, 0.1, Lattice::Hexagonal);
  VectorField u(g, 2);
  for (std::size_t i = 0; i < g->node_count; ++i) {
    const RegionGeometry geo = region_geometry(g->point(i), t.orbit);
    const double e = geo.in_D ? std::exp(-2.0 * geo.dist_D) : 1.0;
    u.values.col(static_cast<Eigen::Index>(i)) = v2(1.0 + 0.6 * e, 0.8 * e);
  }
  const DecayFit f = decay_fit(u, t.orbit, 1.0, 3.0);
  CHECK(f.k == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(f.K == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.nodes >= 50);
  CHECK(decay_scatter(u, t.orbit, 1.0, 3.0).size() == f.nodes);

  try {
    decay_fit(constant_field(g, v2(1, 0)), t.orbit, 1.0, 3.0);
    FAIL("expected InsufficientNodes");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientNodes);
  }

  const FlowResult& r = small_equilibrium();
  const DecayFit fe = decay_fit(r.field, t.orbit, 0.5, 1.5);
  CHECK(fe.k > 0.0);
  CHECK(fe.r2 >= 0.95);
}

TEST_CASE("energy sweep of the seed") {
  const Triangle t;
  SweepParams p;
  p.seed_only = true;
  const SweepResult s = energy_scaling_sweep({4.0, 6.0, 8.0, 12.0}, t.spec, t.group, t.orbit, p);
  CHECK(s.energies.size() == 4);
  CHECK(s.slope >= 0.8);
  CHECK(s.slope <= 1.2);
  CHECK_THROWS_AS(energy_scaling_sweep({8.0}, t.spec, t.group, t.orbit, p), Error);
}

TEST_CASE("positivity check") {
  const Triangle t;
  const auto g = build_grid(2, 8.0, 0.1, Lattice::Hexagonal);
  FlowResult seed;
  seed.field = seed_affine(g, t.group, t.orbit);
  const PositivityCheck p = positivity_check(seed, t.group);
  CHECK(p.positivity_min >= 0.0);
  CHECK(p.pass);

  FlowResult planted = seed;
  planted.field.values.row(0) *= -1.0;
  const PositivityCheck q = positivity_check(planted, t.group);
  // max of the seed is a1 = (1, 0); <(-1, 0), (sin 60, -cos 60)> = -sin 60.
  CHECK(q.positivity_min == doctest::Approx(-std::sin(std::numbers::pi / 3)).epsilon(1e-12));
  CHECK_FALSE(q.pass);

  const FlowResult& r = small_equilibrium();
  const PositivityCheck e = positivity_check(r, t.group);
  CHECK(e.pass);
  CHECK(e.strong_pass);
  CHECK(e.tol == doctest::Approx(0.5));
}
